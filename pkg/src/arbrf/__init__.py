"""Generalized Robinson-Foulds distances between rooted phylogenetic trees."""

from .arboreal import SolveParams, SolveResult, Status, grf_distance, solve
from .cost import RF_DELTA, SYMDIFF, CostFn, delta, matching_cost, weight
from .errors import ArbrfError, NewickError, TaxaMismatch
from .matching import Matching, count_violations, min_cost_matching
from .model import Clade, CladeSet, Taxa, Tree, conflict, extract_clades, random_tree
from .newick import parse, parse_file, serialize
from .rf import rf_distance

__version__ = "0.1.0"

__all__ = [
    "ArbrfError",
    "Clade",
    "CladeSet",
    "CostFn",
    "Matching",
    "NewickError",
    "RF_DELTA",
    "SYMDIFF",
    "SolveParams",
    "SolveResult",
    "Status",
    "TaxaMismatch",
    "Taxa",
    "Tree",
    "conflict",
    "count_violations",
    "delta",
    "extract_clades",
    "grf_distance",
    "matching_cost",
    "min_cost_matching",
    "parse",
    "parse_file",
    "random_tree",
    "rf_distance",
    "serialize",
    "solve",
    "weight",
]
