"""Exact anytime solver for minimum-cost arboreal matchings.

The problem is the 0/1 program

    maximise    sum w[i, j] x[i, j]
    subject to  each clade of either tree is matched at most once
                x[p] + x[q] <= 1 for every conflicting pair of pairs {p, q}
                x binary

solved by branch and bound. The conflict constraints are never listed;
they are checked on demand against the relation matrices of the two
clade sets.

At every search node the conflict constraints are dropped and the
remaining assignment problem is solved exactly, giving an upper bound.
If the relaxed matching happens to be conflict free the node is solved.
Otherwise it is repaired greedily into a feasible matching (a lower
bound), and the node is split on the heaviest conflicting pair ``p``:
one child forces ``p`` in (and with it bans every pair conflicting with
``p``), the other bans ``p``.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cost import CostFn, empty_cost, weight_matrix
from .errors import TaxaMismatch
from .matching import Matching, max_weight_assignment
from .model import COMPATIBLE, CladeSet, Tree, extract_clades

__all__ = ["Status", "SolveParams", "SolveResult", "solve", "grf_distance", "gap_percent"]


class Status(str, Enum):
    OPTIMAL = "OPTIMAL"
    FEASIBLE_TIMEOUT = "FEASIBLE_TIMEOUT"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SolveParams:
    """Search limits.

    ``time_limit`` is in wall-clock seconds; 0 disables a limit, as does
    ``node_limit`` 0. The root node is always evaluated, so a result
    always carries finite bounds.
    """

    time_limit: float = 0.0
    node_limit: int = 0
    tolerance: float = 1e-9

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.time_limit < 0 or self.node_limit < 0:
            raise ValueError("limits must be non-negative")


def gap_percent(lower: float, upper: float, tolerance: float = 1e-9) -> float:
    """Relative optimality gap ``100 * (u - l) / l``.

    Closed gaps report 0; an open gap over ``l <= 0`` is infinite.
    """
    if upper - lower <= tolerance:
        return 0.0
    if lower <= 0:
        return math.inf
    return 100.0 * (upper - lower) / lower


@dataclass(frozen=True)
class SolveResult:
    """Outcome of :func:`solve`.

    ``lower_bound`` and ``upper_bound`` bound the best achievable total
    weight; the matching cost is ``empty_cost`` minus that weight, so the
    cost bounds swap roles.
    """

    incumbent: Matching
    lower_bound: float
    upper_bound: float
    status: Status
    gap_percent: float
    nodes_explored: int
    wall_time: float
    history: tuple[tuple[int, float, float], ...] = field(default=(), repr=False)

    @property
    def empty_cost(self) -> float:
        return self.incumbent.empty_cost

    @property
    def cost_lower(self) -> float:
        return self.empty_cost - self.upper_bound

    @property
    def cost_upper(self) -> float:
        return self.empty_cost - self.lower_bound

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _Node:
    __slots__ = ("parent", "include", "i", "j", "depth")

    def __init__(self, parent, include, i, j):
        self.parent = parent
        self.include = include
        self.i = i
        self.j = j
        self.depth = 0 if parent is None else parent.depth + 1


class _Search:
    def __init__(self, weights, rel1, rel2, tolerance):
        self.w = weights
        self.rel1 = rel1
        self.rel2 = rel2
        self.tol = tolerance
        self.base = weights > tolerance
        self.best_value = 0.0
        self.best_pairs: list[tuple[int, int]] = []

    def compatible_with(self, i, j) -> np.ndarray:
        """Mask of pairs that may coexist with (i, j) in a matching."""
        mask = COMPATIBLE[self.rel1[i][:, None], self.rel2[j][None, :]]
        mask[i, :] = False
        mask[:, j] = False
        return mask

    def restrictions(self, node):
        mask = self.base.copy()
        forced = []
        while node is not None and node.parent is not None:
            if node.include:
                forced.append((node.i, node.j))
                mask &= self.compatible_with(node.i, node.j)
            else:
                mask[node.i, node.j] = False
            node = node.parent
        return mask, forced

    def conflicts(self, pairs) -> np.ndarray:
        idx1 = np.array([i for i, _ in pairs])
        idx2 = np.array([j for _, j in pairs])
        rel1 = self.rel1[np.ix_(idx1, idx1)]
        rel2 = self.rel2[np.ix_(idx2, idx2)]
        return ~COMPATIBLE[rel1, rel2]

    def offer(self, pairs, value):
        if value > self.best_value:
            self.best_value = value
            self.best_pairs = list(pairs)

    def greedy_fill(self, mask, chosen):
        """Extend ``chosen`` by heaviest compatible pairs from ``mask``."""
        avail = mask.copy()
        for i, j in chosen:
            avail &= self.compatible_with(i, j)
        while True:
            wa = np.where(avail, self.w, 0.0)
            flat = int(np.argmax(wa))
            i, j = divmod(flat, wa.shape[1])
            if wa[i, j] <= self.tol:
                return chosen
            chosen.append((i, j))
            avail &= self.compatible_with(i, j)

    def expand(self, node):
        """Evaluate one node; returns (upper bound, branching pair or None)."""
        mask, forced = self.restrictions(node)
        w = self.w
        forced_value = sum(float(w[p]) for p in forced)
        relaxed = max_weight_assignment(np.where(mask, w, 0.0), self.tol)
        bound = forced_value + sum(float(w[p]) for p in relaxed)
        if bound <= self.best_value + self.tol:
            return bound, None
        if not relaxed:
            self.offer(forced, forced_value)
            return bound, None
        clash = self.conflicts(relaxed)
        if not clash.any():
            self.offer(forced + relaxed, bound)
            return bound, None

        # repair: keep heavier pairs first, ties in index order
        order = sorted(range(len(relaxed)), key=lambda k: (-w[relaxed[k]], relaxed[k]))
        kept: list[int] = []
        for k in order:
            if not clash[k, kept].any():
                kept.append(k)
        repaired = self.greedy_fill(mask, [relaxed[k] for k in kept])
        self.offer(forced + repaired, forced_value + sum(float(w[p]) for p in repaired))

        involved = clash.any(axis=1)
        branch = None
        for k, pair in enumerate(relaxed):
            if involved[k] and (branch is None or w[pair] > w[branch]):
                branch = pair
        return bound, branch


def solve(c1: CladeSet, c2: CladeSet, f: CostFn, params: SolveParams | None = None) -> SolveResult:
    """Find a minimum-cost arboreal matching between two clade sets.

    Nodes are explored best bound first, deeper nodes first among equal
    bounds. When a time or node limit stops the search early, the best
    matching found so far is returned together with valid bounds and
    status ``FEASIBLE_TIMEOUT``.
    """
    if c1.taxa != c2.taxa:
        raise TaxaMismatch("clade sets are over different taxa")
    params = params or SolveParams()
    start = time.perf_counter()
    deadline = start + params.time_limit if params.time_limit > 0 else math.inf
    tol = params.tolerance

    weights = weight_matrix(f, c1, c2)
    d_empty = empty_cost(f, c1, c2)
    search = _Search(weights, c1.relations(), c2.relations(), tol)

    root = _Node(None, False, -1, -1)
    heap: list = []
    seq = 0
    nodes = 0
    upper = math.inf
    history: list[tuple[int, float, float]] = []
    node, node_bound = root, math.inf
    stopped = False
    while True:
        if node is not None:
            nodes += 1
            bound, branch = search.expand(node)
            bound = min(bound, node_bound)
            if branch is not None:
                for include in (True, False):
                    child = _Node(node, include, branch[0], branch[1])
                    heapq.heappush(heap, (-bound, -child.depth, seq, child))
                    seq += 1
        open_bound = -heap[0][0] if heap else search.best_value
        current = max(search.best_value, min(upper, open_bound))
        if current != upper or not history or history[-1][1] != search.best_value:
            history.append((nodes, search.best_value, current))
        upper = current
        if upper - search.best_value <= tol:
            break
        if time.perf_counter() >= deadline or (params.node_limit and nodes >= params.node_limit):
            stopped = True
            break
        neg_bound, _, _, node = heapq.heappop(heap)
        node_bound = -neg_bound

    incumbent = Matching.from_pairs(search.best_pairs, weights, d_empty)
    lower = incumbent.weight_sum
    upper = max(upper, lower)
    status = Status.FEASIBLE_TIMEOUT if stopped else Status.OPTIMAL
    if status is Status.OPTIMAL:
        upper = lower
    return SolveResult(
        incumbent=incumbent,
        lower_bound=lower,
        upper_bound=upper,
        status=status,
        gap_percent=gap_percent(lower, upper, tol),
        nodes_explored=nodes,
        wall_time=time.perf_counter() - start,
        history=tuple(history),
    )


def grf_distance(t1: Tree, t2: Tree, f: CostFn, params: SolveParams | None = None):
    """Generalized RF distance between two trees.

    Returns ``(cost_lower, cost_upper, result)``; the two costs coincide
    when the search finished.
    """
    if t1.taxa != t2.taxa:
        raise TaxaMismatch("trees are over different taxa")
    result = solve(extract_clades(t1), extract_clades(t2), f, params)
    return result.cost_lower, result.cost_upper, result
