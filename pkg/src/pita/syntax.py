"""Terms, LPAD clauses, the `.lpad` text parser and unification.

Terms are plain immutable values: :class:`Var`, :class:`Struct` (constants
are 0-ary structs) and Python ``int`` for integer constants.  Atoms are
structs whose functor is the predicate name.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, eq=False)
class Struct:
    functor: str
    args: Tuple["Term", ...] = ()

    def __post_init__(self):
        # terms are hashed constantly by tables and sets; compute once
        object.__setattr__(self, "_hash", hash((self.functor, self.args)))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Struct):
            return NotImplemented
        return self._hash == other._hash and self.functor == other.functor and self.args == other.args

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def indicator(self) -> Tuple[str, int]:
        return (self.functor, len(self.args))

    def __str__(self):
        return format_term(self)


Term = Union[Var, Struct, int]
Substitution = Dict[Var, Term]

NIL = Struct("[]")


def make_list(items: Iterable[Term], tail: Term = NIL) -> Term:
    items = list(items)
    for item in reversed(items):
        tail = Struct(".", (item, tail))
    return tail


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, Struct):
        return all(is_ground(a) for a in t.args)
    return True


def term_vars(t: Term, acc: Optional[List[Var]] = None) -> List[Var]:
    """Variables of ``t`` in left-to-right order of first occurrence."""
    if acc is None:
        acc = []
    if isinstance(t, Var):
        if t not in acc:
            acc.append(t)
    elif isinstance(t, Struct):
        for a in t.args:
            term_vars(a, acc)
    return acc


def term_depth(t: Term) -> int:
    if isinstance(t, Struct) and t.args:
        return 1 + max(term_depth(a) for a in t.args)
    return 1


def term_size(t: Term) -> int:
    if isinstance(t, Struct):
        return 1 + sum(term_size(a) for a in t.args)
    return 1


# ---------------------------------------------------------------------------
# Clauses and programs


@dataclass(frozen=True)
class Literal:
    atom: Struct
    positive: bool = True

    def __str__(self):
        text = format_term(self.atom)
        return text if self.positive else "\\+ " + text


@dataclass(frozen=True)
class AnnotatedHead:
    """Disjunctive head; ``includes_null`` and ``null_prob`` are only
    meaningful after :func:`normalize_heads`."""

    disjuncts: Tuple[Tuple[Struct, float], ...]
    includes_null: bool = False
    null_prob: float = 0.0
    annotated: bool = True

    @property
    def atoms(self) -> Tuple[Struct, ...]:
        return tuple(a for a, _ in self.disjuncts)

    def value_probs(self) -> List[float]:
        """Probabilities of the head choices, null last when present."""
        probs = [p for _, p in self.disjuncts]
        if self.includes_null:
            probs.append(self.null_prob)
        return probs

    @property
    def n_choices(self) -> int:
        return len(self.disjuncts) + (1 if self.includes_null else 0)

    @property
    def is_certain(self) -> bool:
        return self.n_choices == 1


@dataclass(frozen=True)
class Clause:
    id: int
    head: AnnotatedHead
    body: Tuple[Literal, ...] = ()

    @property
    def variables(self) -> List[Var]:
        """Clause variables in textual order (head first, then body)."""
        acc: List[Var] = []
        for atom, _ in self.head.disjuncts:
            term_vars(atom, acc)
        for lit in self.body:
            term_vars(lit.atom, acc)
        return acc

    def __str__(self):
        return format_clause(self)


@dataclass(frozen=True)
class Program:
    clauses: Tuple[Clause, ...] = ()
    predicates: Dict[Tuple[str, int], Tuple[int, ...]] = field(default_factory=dict, compare=False)

    @classmethod
    def from_clauses(cls, clauses: Iterable[Clause]) -> "Program":
        renumbered = [replace(c, id=i) for i, c in enumerate(clauses)]
        table: Dict[Tuple[str, int], List[int]] = {}
        for c in renumbered:
            for atom in dict.fromkeys(c.head.atoms):
                table.setdefault(atom.indicator, []).append(c.id)
        return cls(tuple(renumbered), {k: tuple(v) for k, v in table.items()})

    def __len__(self):
        return len(self.clauses)

    def defined(self, indicator: Tuple[str, int]) -> bool:
        return indicator in self.predicates


# ---------------------------------------------------------------------------
# Parser


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<float>\d+\.\d+(?:[eE][-+]?\d+)?)
  | (?P<int>\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\]|\\.)*')
  | (?P<punct>:-|\\\+|\\==|\\=|=:=|=\\=|=<|>=|==|[()\[\]|,;:.+\-*/<>=])
    """,
    re.VERBOSE,
)

COMPARISONS = ("=:=", "=\\=", "<", ">", "=<", ">=", "=", "\\=", "==", "\\==")
BUILTINS = {(op, 2) for op in COMPARISONS} | {("is", 2)}


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            if kind == "name" and value == "is":
                kind = "punct"
            tokens.append(_Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.anon = itertools.count()

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Optional[_Token] = None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == text

    def expect(self, text: str) -> _Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            if text == ".":
                raise self.error(f"missing terminating period (found {found!r})")
            if text == ")":
                raise self.error(f"unbalanced parentheses: expected ')' (found {found!r})")
            raise self.error(f"expected {text!r} (found {found!r})")
        tok = self.tok
        self.i += 1
        return tok

    # clause := head [":-" body] "."
    def program(self) -> List[Clause]:
        clauses = []
        while self.tok.kind != "eof":
            clauses.append(self.clause(len(clauses)))
        return clauses

    def clause(self, cid: int) -> Clause:
        start = self.tok
        head = self.head()
        body: List[Literal] = []
        if self.at(":-"):
            self.i += 1
            body.append(self.literal())
            while self.at(","):
                self.i += 1
                body.append(self.literal())
        self.expect(".")
        total = sum(p for _, p in head.disjuncts)
        if total > 1 + SUM_TOLERANCE:
            raise self.error(f"head annotations sum to {total:g} > 1", start)
        return Clause(cid, head, tuple(body))

    def head(self) -> AnnotatedHead:
        disjuncts = [self.adisjunct()]
        while self.at(";"):
            self.i += 1
            disjuncts.append(self.adisjunct())
        annotated = [p is not None for _, p in disjuncts]
        if len(disjuncts) == 1 and not annotated[0]:
            return AnnotatedHead(((disjuncts[0][0], 1.0),), annotated=False)
        if not all(annotated):
            raise self.error("every disjunct of a disjunctive head needs an annotation")
        return AnnotatedHead(tuple(disjuncts))

    def adisjunct(self) -> Tuple[Struct, Optional[float]]:
        atom = self.atom()
        if self.at(":"):
            self.i += 1
            return atom, self.prob()
        return atom, None

    def prob(self) -> float:
        tok = self.tok
        if tok.kind == "float":
            self.i += 1
            value = float(tok.text)
        elif tok.kind == "int":
            self.i += 1
            if self.at("/"):
                self.i += 1
                den = self.tok
                if den.kind != "int":
                    raise self.error("expected integer denominator")
                self.i += 1
                if int(den.text) == 0:
                    raise self.error("zero denominator in probability", den)
                value = float(Fraction(int(tok.text), int(den.text)))
            else:
                value = float(tok.text)
        else:
            raise self.error(f"expected probability (found {tok.text!r})")
        if not 0.0 <= value <= 1.0:
            raise self.error(f"annotation {value:g} outside [0,1]", tok)
        return value

    def literal(self) -> Literal:
        if self.at("\\+"):
            self.i += 1
            return Literal(self.goal(), False)
        return Literal(self.goal(), True)

    def goal(self) -> Struct:
        left = self.expr()
        if self.tok.kind == "punct" and (self.tok.text in COMPARISONS or self.tok.text == "is"):
            op = self.tok.text
            self.i += 1
            right = self.expr()
            return Struct(op, (left, right))
        if not isinstance(left, Struct):
            raise self.error("expected an atom")
        return left

    def atom(self) -> Struct:
        tok = self.tok
        t = self.primary()
        if not isinstance(t, Struct) or t.functor == ".":
            raise self.error("expected an atom", tok)
        return t

    def expr(self) -> Term:
        left = self.mul()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            left = Struct(op, (left, self.mul()))
        return left

    def mul(self) -> Term:
        left = self.primary()
        while self.at("*"):
            self.i += 1
            left = Struct("*", (left, self.primary()))
        return left

    def primary(self) -> Term:
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            return int(tok.text)
        if tok.kind == "var":
            self.i += 1
            if tok.text == "_":
                return Var(f"_G{next(self.anon)}")
            return Var(tok.text)
        if tok.kind in ("name", "quoted"):
            self.i += 1
            name = tok.text if tok.kind == "name" else _unquote(tok.text)
            if self.at("("):
                self.i += 1
                args = [self.expr()]
                while self.at(","):
                    self.i += 1
                    args.append(self.expr())
                self.expect(")")
                return Struct(name, tuple(args))
            return Struct(name)
        if self.at("("):
            self.i += 1
            inner = self.expr()
            self.expect(")")
            return inner
        if self.at("["):
            self.i += 1
            if self.at("]"):
                self.i += 1
                return NIL
            items = [self.expr()]
            while self.at(","):
                self.i += 1
                items.append(self.expr())
            tail: Term = NIL
            if self.at("|"):
                self.i += 1
                tail = self.expr()
            self.expect("]")
            return make_list(items, tail)
        if tok.kind == "float":
            raise self.error("unexpected decimal outside an annotation")
        raise self.error(f"unexpected token {tok.text or 'end of input'!r}")


def _unquote(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text[1:-1])


def parse_program(text: str) -> Program:
    """Parse LPAD source text.  Head annotations are kept as written."""
    return Program.from_clauses(_Parser(text).program())


def parse_atom(text: str) -> Struct:
    """Parse a single query atom; a trailing period is optional."""
    p = _Parser(text)
    atom = p.atom()
    if p.at("."):
        p.i += 1
    if p.tok.kind != "eof":
        raise p.error(f"unexpected token {p.tok.text!r} after query atom")
    return atom


def normalize_heads(program: Program) -> Program:
    """Compute the implicit null disjunct of every clause head."""
    clauses = []
    for c in program.clauses:
        total = sum(p for _, p in c.head.disjuncts)
        disjuncts = c.head.disjuncts
        if 1.0 < total <= 1.0 + SUM_TOLERANCE:
            disjuncts = tuple((a, p / total) for a, p in disjuncts)
            total = 1.0
        if total < 1.0 - SUM_TOLERANCE:
            head = replace(c.head, disjuncts=disjuncts, includes_null=True, null_prob=1.0 - total)
        else:
            head = replace(c.head, disjuncts=disjuncts, includes_null=False, null_prob=0.0)
        clauses.append(replace(c, head=head))
    return Program.from_clauses(clauses)


# ---------------------------------------------------------------------------
# Printing

_PLAIN_NAME = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_INFIX = {"+": 500, "-": 500, "*": 400}


def _format_name(name: str) -> str:
    if _PLAIN_NAME.match(name) or name == "[]":
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, int):
        return str(t)
    if t.functor == "." and len(t.args) == 2:
        items = []
        while isinstance(t, Struct) and t.functor == "." and len(t.args) == 2:
            items.append(format_term(t.args[0]))
            t = t.args[1]
        tail = "" if t == NIL else "|" + format_term(t)
        return "[" + ",".join(items) + tail + "]"
    if len(t.args) == 2 and (t.functor in _INFIX or t.functor in COMPARISONS or t.functor == "is"):
        left, right = t.args
        prec = _INFIX.get(t.functor, 700)
        ltext = format_term(left)
        rtext = format_term(right)
        if isinstance(left, Struct) and _INFIX.get(left.functor, 0) > prec:
            ltext = f"({ltext})"
        if isinstance(right, Struct) and len(right.args) == 2 and _INFIX.get(right.functor, 0) >= prec:
            rtext = f"({rtext})"
        sep = " " if t.functor == "is" else ""
        return f"{ltext}{sep}{t.functor}{sep}{rtext}"
    if not t.args:
        return _format_name(t.functor)
    return _format_name(t.functor) + "(" + ",".join(format_term(a) for a in t.args) + ")"


def format_prob(p: float) -> str:
    return repr(float(p))


def format_clause(c: Clause) -> str:
    if not c.head.annotated:
        head = format_term(c.head.disjuncts[0][0])
    else:
        head = " ; ".join(f"{format_term(a)}:{format_prob(p)}" for a, p in c.head.disjuncts)
    if c.body:
        return head + " :- " + ", ".join(str(lit) for lit in c.body) + "."
    return head + "."


def format_program(program: Program) -> str:
    return "".join(format_clause(c) + "\n" for c in program.clauses)


# ---------------------------------------------------------------------------
# Substitutions and unification


def walk(t: Term, s: Substitution) -> Term:
    while isinstance(t, Var) and t in s:
        t = s[t]
    return t


def resolve(t: Term, s: Substitution) -> Term:
    """Apply ``s`` fully to ``t``."""
    t = walk(t, s)
    if isinstance(t, Struct) and t.args:
        return Struct(t.functor, tuple(resolve(a, s) for a in t.args))
    return t


def _occurs(v: Var, t: Term, s: Substitution) -> bool:
    t = walk(t, s)
    if t == v:
        return True
    if isinstance(t, Struct):
        return any(_occurs(v, a, s) for a in t.args)
    return False


def unify_with(t1: Term, t2: Term, s: Substitution, occurs_check: bool = True) -> Optional[Substitution]:
    """Extend ``s`` (not mutated) to unify ``t1`` and ``t2``; None on failure."""
    s = dict(s)
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a = walk(a, s)
        b = walk(b, s)
        if a == b:
            continue
        if isinstance(a, Var):
            if occurs_check and _occurs(a, b, s):
                return None
            s[a] = b
        elif isinstance(b, Var):
            if occurs_check and _occurs(b, a, s):
                return None
            s[b] = a
        elif isinstance(a, Struct) and isinstance(b, Struct):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return None
            stack.extend(zip(a.args, b.args))
        else:
            return None
    return s


def unify(t1: Term, t2: Term) -> Optional[Substitution]:
    """Most general unifier in solved form, or None if not unifiable."""
    s = unify_with(t1, t2, {})
    if s is None:
        return None
    return {v: resolve(t, s) for v, t in s.items()}


def rename(t: Term, mapping: Dict[Var, Var], fresh: Iterator[int]) -> Term:
    if isinstance(t, Var):
        if t not in mapping:
            mapping[t] = Var(f"{t.name}#{next(fresh)}")
        return mapping[t]
    if isinstance(t, Struct) and t.args:
        return Struct(t.functor, tuple(rename(a, mapping, fresh) for a in t.args))
    return t


def variant_key(t: Term) -> Term:
    """Canonical representative of ``t`` up to variable renaming."""
    mapping: Dict[Var, Var] = {}

    def canon(x):
        if isinstance(x, Var):
            if x not in mapping:
                mapping[x] = Var(f"_#{len(mapping)}")
            return mapping[x]
        if isinstance(x, Struct) and x.args:
            return Struct(x.functor, tuple(canon(a) for a in x.args))
        return x

    return canon(t)
