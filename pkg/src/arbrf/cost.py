"""Clade dissimilarities with gap costs, and the matched-pair weight.

Three cost functions are supported:

``rf``
    0 for identical clades, infinite otherwise, gap cost 1. Minimising a
    matching under it gives the classical Robinson-Foulds distance.
``symdiff``
    ``|Y1 ^ Y2|`` with gap cost ``|Y|``.
``jaccard:k``
    ``2 - 2 * J(Y1, Y2)**k`` with ``J`` the Jaccard index and gap cost 1.

The weight of a pair is the saving obtained by matching it instead of
leaving both clades unmatched::

    w(Y1, Y2) = delta(Y1, -) + delta(-, Y2) - delta(Y1, Y2)

so that ``d(m) = d(empty) - sum of w over m`` for every matching ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import BothGaps, InvalidMatching, TaxaMismatch
from .model import Clade, CladeSet

__all__ = [
    "CostFn",
    "RF_DELTA",
    "SYMDIFF",
    "GAP",
    "MAX_K",
    "delta",
    "weight",
    "delta_matrix",
    "gap_costs",
    "weight_matrix",
    "empty_cost",
    "matching_cost",
]

GAP = None
MAX_K = 2**20

RF, SYM, JAC = "rf", "symdiff", "jaccard"


@dataclass(frozen=True)
class CostFn:
    kind: str
    k: int = 1

    def __post_init__(self):
        if self.kind not in (RF, SYM, JAC):
            raise ValueError(f"unknown cost function {self.kind!r}")
        if self.kind == JAC:
            if isinstance(self.k, bool) or not isinstance(self.k, int):
                raise ValueError("Jaccard order k must be an integer")
            if not 1 <= self.k <= MAX_K:
                raise ValueError(f"Jaccard order k must be in [1, {MAX_K}]")

    @classmethod
    def jaccard(cls, k: int = 1) -> "CostFn":
        return cls(JAC, k)

    @classmethod
    def parse(cls, text: str) -> "CostFn":
        """Parse ``rf``, ``symdiff`` or ``jaccard:<k>``."""
        name, _, arg = text.strip().lower().partition(":")
        if name == JAC:
            try:
                k = int(arg) if arg else 1
            except ValueError:
                raise ValueError(f"bad Jaccard order in {text!r}") from None
            return cls(JAC, k)
        if arg:
            raise ValueError(f"cost function {name!r} takes no argument")
        return cls(name)

    def __str__(self):
        return f"{JAC}:{self.k}" if self.kind == JAC else self.kind


RF_DELTA = CostFn(RF)
SYMDIFF = CostFn(SYM)

CladeLike = Union[Clade, int, None]


def _bits(y: CladeLike) -> int | None:
    if y is None:
        return None
    if isinstance(y, Clade):
        return y.bits
    if isinstance(y, (set, frozenset)):
        raise TypeError("pass clades as Clade objects or integer bitsets")
    return int(y)


def _pair(f: CostFn, a: int, b: int) -> float:
    if f.kind == SYM:
        return float((a ^ b).bit_count())
    if f.kind == RF:
        return 0.0 if a == b else math.inf
    union = (a | b).bit_count()
    if union == 0:
        return 0.0
    return 2.0 - 2.0 * ((a & b).bit_count() / union) ** f.k


def _gap(f: CostFn, a: int) -> float:
    return float(a.bit_count()) if f.kind == SYM else 1.0


def delta(f: CostFn, y1: CladeLike, y2: CladeLike) -> float:
    """Cost of aligning ``y1`` with ``y2``; either may be the gap ``None``.

    Clades may be given as :class:`Clade` or as integer bitsets.

    >>> delta(SYMDIFF, Clade(0b11), Clade(0b110))
    2.0
    """
    a, b = _bits(y1), _bits(y2)
    if a is None and b is None:
        raise BothGaps("delta is undefined for two gaps")
    if a is None:
        return _gap(f, b)
    if b is None:
        return _gap(f, a)
    return _pair(f, a, b)


def weight(f: CostFn, c1: CladeLike, c2: CladeLike) -> float:
    """Saving from matching ``c1`` with ``c2``; 0 where delta is infinite."""
    a, b = _bits(c1), _bits(c2)
    if f.kind == JAC:
        return _jaccard_weight(f, a, b)
    d = _pair(f, a, b)
    if math.isinf(d):
        return 0.0
    return _gap(f, a) + _gap(f, b) - d


def _jaccard_weight(f: CostFn, a: int, b: int) -> float:
    # 1 + 1 - (2 - 2 J^k) written out as 2 J^k; the long form cancels to 0
    # once J^k drops below machine epsilon
    union = (a | b).bit_count()
    if union == 0:
        return 2.0
    return 2.0 * ((a & b).bit_count() / union) ** f.k


def gap_costs(f: CostFn, clades: CladeSet) -> np.ndarray:
    if f.kind == SYM:
        return clades.sizes().astype(float)
    return np.ones(len(clades))


def empty_cost(f: CostFn, c1: CladeSet, c2: CladeSet) -> float:
    """Cost of the empty matching: every clade pays its gap cost."""
    return float(gap_costs(f, c1).sum() + gap_costs(f, c2).sum())


def delta_matrix(f: CostFn, c1: CladeSet, c2: CladeSet) -> np.ndarray:
    """``delta(c1[i], c2[j])`` for all pairs, vectorised."""
    if c1.taxa != c2.taxa:
        raise TaxaMismatch("clade sets are over different taxa")
    a = c1.membership().astype(np.int64)
    b = c2.membership().astype(np.int64)
    inter = a @ b.T
    s1 = a.sum(axis=1)[:, None]
    s2 = b.sum(axis=1)[None, :]
    union = s1 + s2 - inter
    if f.kind == SYM:
        return (union - inter).astype(float)
    if f.kind == RF:
        same = (inter == s1) & (inter == s2)
        return np.where(same, 0.0, np.inf)
    return 2.0 - 2.0 * _jaccard_index(c1, c2) ** f.k


def _jaccard_index(c1: CladeSet, c2: CladeSet) -> np.ndarray:
    a = c1.membership().astype(np.int64)
    b = c2.membership().astype(np.int64)
    inter = a @ b.T
    union = a.sum(axis=1)[:, None] + b.sum(axis=1)[None, :] - inter
    return np.where(union > 0, inter / np.maximum(union, 1), 1.0)


def weight_matrix(f: CostFn, c1: CladeSet, c2: CladeSet) -> np.ndarray:
    """Pair weights ``w[i, j]``, clamped to be non-negative."""
    if c1.taxa != c2.taxa:
        raise TaxaMismatch("clade sets are over different taxa")
    if f.kind == JAC:
        return 2.0 * _jaccard_index(c1, c2) ** f.k
    d = delta_matrix(f, c1, c2)
    g = gap_costs(f, c1)[:, None] + gap_costs(f, c2)[None, :]
    with np.errstate(invalid="ignore"):
        w = np.where(np.isinf(d), 0.0, g - d)
    return np.maximum(w, 0.0)


def matching_cost(
    f: CostFn,
    m,
    c1: CladeSet,
    c2: CladeSet,
) -> float:
    """Total cost of a matching: matched pair costs plus gap costs.

    ``m`` is a :class:`~arbrf.matching.Matching` or any iterable of
    ``(i, j)`` index pairs into ``c1`` and ``c2``.
    """
    pairs = _index_pairs(m)
    n1, n2 = len(c1), len(c2)
    used1, used2 = set(), set()
    for i, j in pairs:
        if not (0 <= i < n1 and 0 <= j < n2):
            raise InvalidMatching(f"pair {(i, j)} refers to a clade outside the sets")
        if i in used1 or j in used2:
            raise InvalidMatching(f"clade reused by pair {(i, j)}")
        used1.add(i)
        used2.add(j)
    total = 0.0
    for i, j in pairs:
        total += delta(f, c1[i], c2[j])
    for i in range(n1):
        if i not in used1:
            total += delta(f, c1[i], GAP)
    for j in range(n2):
        if j not in used2:
            total += delta(f, GAP, c2[j])
    return total


def _index_pairs(m) -> list[tuple[int, int]]:
    pairs: Iterable = getattr(m, "pairs", m)
    return [(int(i), int(j)) for i, j in pairs]
