"""Classical Robinson-Foulds distance on rooted trees."""

from __future__ import annotations

from .errors import TaxaMismatch
from .model import Tree, extract_clades

__all__ = ["rf_distance", "common_clades"]


def _clade_bits(tree: Tree) -> set[int]:
    return {c.bits for c in extract_clades(tree)}


def common_clades(t1: Tree, t2: Tree) -> set[int]:
    if t1.taxa != t2.taxa:
        raise TaxaMismatch("trees are over different taxa")
    return _clade_bits(t1) & _clade_bits(t2)


def rf_distance(t1: Tree, t2: Tree) -> int:
    """Number of non-trivial clades found in exactly one of the trees.

    >>> from arbrf.newick import parse
    >>> doc = parse("((A,B),C); (A,(B,C));")
    >>> rf_distance(doc[0], doc[1])
    2
    """
    if t1.taxa != t2.taxa:
        raise TaxaMismatch("trees are over different taxa")
    return len(_clade_bits(t1) ^ _clade_bits(t2))
