"""Exhaustive reference solver for tiny instances, used by the tests.

Deliberately naive: it walks every injective partial map from the first
clade set into the second and scores each complete map with the cost
function directly, never through pair weights.
"""

from __future__ import annotations

import math

from .cost import GAP, CostFn, delta
from .errors import TaxaMismatch, TooLarge
from .matching import Matching
from .model import CladeSet, conflict

__all__ = ["brute_force_best", "MAX_CLADES"]

MAX_CLADES = 10


def brute_force_best(c1: CladeSet, c2: CladeSet, f: CostFn, require_arboreal: bool):
    """Minimum-cost matching found by full enumeration.

    Returns a :class:`Matching` whose cost is the enumerated optimum.
    Clades of ``c1`` are visited in canonical order; each first tries the
    gap and then every partner of ``c2`` in canonical order, so the first
    minimum found wins ties.
    """
    if c1.taxa != c2.taxa:
        raise TaxaMismatch("clade sets are over different taxa")
    if len(c1) > MAX_CLADES or len(c2) > MAX_CLADES:
        raise TooLarge(f"enumeration is limited to {MAX_CLADES} clades per tree")
    n1, n2 = len(c1), len(c2)
    pair_cost = [[delta(f, c1[i], c2[j]) for j in range(n2)] for i in range(n1)]
    gap1 = [delta(f, c1[i], GAP) for i in range(n1)]
    gap2 = [delta(f, GAP, c2[j]) for j in range(n2)]
    used = [False] * n2
    chosen: list[tuple[int, int]] = []
    best_pairs: list[tuple[int, int]] = []
    best_cost = math.inf

    def visit(i, acc):
        nonlocal best_pairs, best_cost
        if i == n1:
            total = acc + sum(gap2[j] for j in range(n2) if not used[j])
            if total < best_cost - 1e-12:
                best_cost = total
                best_pairs = list(chosen)
            return
        visit(i + 1, acc + gap1[i])
        for j in range(n2):
            if used[j]:
                continue
            if require_arboreal and any(
                conflict((c1[i], c2[j]), (c1[a], c2[b])) for a, b in chosen
            ):
                continue
            used[j] = True
            chosen.append((i, j))
            visit(i + 1, acc + pair_cost[i][j])
            chosen.pop()
            used[j] = False

    visit(0, 0.0)
    d_empty = sum(gap1) + sum(gap2)
    return Matching(tuple(sorted(best_pairs)), best_cost, d_empty - best_cost, d_empty)
