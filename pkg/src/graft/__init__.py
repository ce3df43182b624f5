"""Graph algebras with sources and ports, quantifier-free definable operations,
compositional first-order theories and recognizability tools."""
from __future__ import annotations

from .structures import CapacityError, MultiGraph, Sort, SortError, Structure, make_graph
from .terms import Term, TermError, eval_term, parse_term, print_term

__version__ = "0.1.0"

__all__ = ["CapacityError", "MultiGraph", "Sort", "SortError", "Structure", "Term", "TermError",
           "eval_term", "make_graph", "parse_term", "print_term", "__version__"]
