"""Exact inference for logic programs with annotated disjunctions, by tabling
and answer subsumption over BDDs."""
from .bdd import BddManager
from .engine import (
    CapExceeded,
    EngineError,
    EvaluationConfig,
    FlounderError,
    NegationCycleError,
    abstract_atom,
    abstract_term,
    explanation_paths,
    prob,
)
from .semantics import oracle_query, oracle_query_prob, wfm
from .syntax import ParseError, format_program, parse_atom, parse_program
from .transform import dump_transformed, pita_transform

__all__ = [
    "BddManager",
    "CapExceeded",
    "EngineError",
    "EvaluationConfig",
    "FlounderError",
    "NegationCycleError",
    "ParseError",
    "abstract_atom",
    "abstract_term",
    "dump_transformed",
    "explanation_paths",
    "format_program",
    "oracle_query",
    "oracle_query_prob",
    "parse_atom",
    "parse_program",
    "pita_transform",
    "prob",
    "wfm",
]

__version__ = "0.1.0"
