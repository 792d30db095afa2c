"""Unconstrained minimum-cost matching between two clade sets.

This ignores the tree structure entirely: any clade may be paired with
any other. It is the baseline the arboreal solver is compared against,
and also the relaxation the solver uses for its upper bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cost import CostFn, empty_cost, weight_matrix
from .errors import InvalidMatching, TaxaMismatch
from .model import CladeSet, conflict

__all__ = ["Matching", "min_cost_matching", "count_violations", "max_weight_assignment"]


@dataclass(frozen=True)
class Matching:
    """Matched index pairs ``(i, j)`` into the two clade sets.

    ``cost`` is ``empty_cost - weight_sum``, which equals the summed pair
    and gap costs whenever every matched pair has a finite cost.
    """

    pairs: tuple[tuple[int, int], ...]
    cost: float
    weight_sum: float
    empty_cost: float

    @classmethod
    def from_pairs(cls, pairs, weights: np.ndarray, d_empty: float) -> "Matching":
        pairs = tuple(sorted((int(i), int(j)) for i, j in pairs))
        rows = [i for i, _ in pairs]
        cols = [j for _, j in pairs]
        if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
            raise InvalidMatching("a clade is matched more than once")
        n1, n2 = weights.shape
        for i, j in pairs:
            if not (0 <= i < n1 and 0 <= j < n2):
                raise InvalidMatching(f"pair {(i, j)} is out of range")
        wsum = 0.0
        for i, j in pairs:
            wsum += float(weights[i, j])
        return cls(pairs, d_empty - wsum, wsum, d_empty)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def max_weight_assignment(weights: np.ndarray, tolerance: float = 1e-9) -> list[tuple[int, int]]:
    """Maximum-weight matching on a non-negative weight matrix.

    Rectangular input is fine: surplus rows or columns stay unmatched.
    Pairs whose weight is at most ``tolerance`` are dropped, since
    leaving both clades unmatched costs no more.
    """
    if weights.size == 0:
        return []
    rows = np.flatnonzero((weights > tolerance).any(axis=1))
    cols = np.flatnonzero((weights > tolerance).any(axis=0))
    if rows.size == 0:
        return []
    sub = weights[np.ix_(rows, cols)]
    r, c = linear_sum_assignment(sub, maximize=True)
    keep = sub[r, c] > tolerance
    return sorted(zip(rows[r[keep]].tolist(), cols[c[keep]].tolist()))


def min_cost_matching(
    c1: CladeSet, c2: CladeSet, f: CostFn, tolerance: float = 0.0
) -> Matching:
    """Minimum-cost matching with no arboreal constraint.

    Every pair of positive weight is eligible by default. Raising
    ``tolerance`` drops near-zero pairs too; that changes the cost by a
    negligible amount but can hide conflicts from
    :func:`count_violations`.
    """
    if c1.taxa != c2.taxa:
        raise TaxaMismatch("clade sets are over different taxa")
    w = weight_matrix(f, c1, c2)
    return Matching.from_pairs(max_weight_assignment(w, tolerance), w, empty_cost(f, c1, c2))


def count_violations(m, c1: CladeSet, c2: CladeSet) -> int:
    """Number of unordered pairs of matched pairs that are in conflict."""
    pairs = [(c1[i], c2[j]) for i, j in getattr(m, "pairs", m)]
    return sum(1 for p, q in combinations(pairs, 2) if conflict(p, q))
