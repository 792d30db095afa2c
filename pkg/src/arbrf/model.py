"""Core domain types: taxa universe, rooted trees, clades and the
arboreal conflict predicate.

Clades are bitsets over the taxa universe. Python integers serve as the
bitset (bit ``i`` set iff taxon ``i`` is in the clade), so subset and
disjointness tests are single ``&`` operations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateTaxon, EmptyLabel, TaxaMismatch

__all__ = [
    "Taxa",
    "Tree",
    "Clade",
    "CladeSet",
    "extract_clades",
    "conflict",
    "clades_conflict",
    "random_tree",
    "EQUAL",
    "SUBSET",
    "SUPERSET",
    "DISJOINT",
    "OVERLAP",
    "COMPATIBLE",
]


@dataclass(frozen=True)
class Taxa:
    """Ordered universe of unique taxon labels."""

    names: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        index = {}
        for i, name in enumerate(names):
            if not isinstance(name, str) or name == "":
                raise EmptyLabel(f"taxon label #{i} is empty")
            if name in index:
                raise DuplicateTaxon(f"duplicate taxon label {name!r}")
            index[name] = i
        object.__setattr__(self, "index", index)

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "Taxa":
        """Universe of the given labels in sorted order."""
        return cls(tuple(sorted(set(labels))))

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __contains__(self, name):
        return name in self.index

    @property
    def full(self) -> int:
        return (1 << len(self.names)) - 1

    def bits(self, labels: Iterable[str]) -> int:
        b = 0
        for name in labels:
            b |= 1 << self.index[name]
        return b

    def labels(self, bits: int) -> list[str]:
        return [self.names[i] for i in _members(bits)]


def _members(bits: int) -> list[int]:
    out = []
    i = 0
    while bits:
        if bits & 1:
            out.append(i)
        bits >>= 1
        i += 1
    return out


@dataclass(frozen=True, order=False)
class Clade:
    """A set of taxa, stored as an integer bitset."""

    bits: int

    def __post_init__(self):
        if self.bits <= 0:
            raise ValueError("a clade must contain at least one taxon")

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    def members(self) -> list[int]:
        return _members(self.bits)

    def is_trivial(self, taxa: Taxa) -> bool:
        return self.size == 1 or self.bits == taxa.full

    def issubset(self, other: "Clade") -> bool:
        return self.bits & other.bits == self.bits

    def isdisjoint(self, other: "Clade") -> bool:
        return self.bits & other.bits == 0

    def sort_key(self):
        return (self.size, self.members())

    def __len__(self):
        return self.size


class Tree:
    """Rooted phylogenetic tree stored as a node arena.

    Node ``0`` is the root and nodes are numbered in preorder. Every
    internal node has at least two children; single-child chains are
    collapsed on construction.

    Parameters
    ----------
    taxa : Taxa
        Universe the leaves are drawn from. Every taxon must label
        exactly one leaf.
    children : sequence of sequence of int
        Child lists of an arena (any numbering, may contain unary nodes).
    labels : sequence of str or None
        Leaf label per arena node; ``None`` for internal nodes.
    root : int
        Arena id of the root.
    """

    __slots__ = ("taxa", "parent", "children", "leaf_taxon")

    def __init__(self, taxa: Taxa, children, labels, root: int = 0):
        self.taxa = taxa
        parent: list[int] = []
        kids: list[list[int]] = []
        leaf_taxon: list[int] = []
        seen = set()
        # (arena id, new parent id); unary chains are skipped through
        stack = [(root, -1)]
        while stack:
            node, par = stack.pop()
            while len(children[node]) == 1:
                node = children[node][0]
            new = len(parent)
            parent.append(par)
            kids.append([])
            if par >= 0:
                kids[par].append(new)
            if children[node]:
                leaf_taxon.append(-1)
                for c in reversed(children[node]):
                    stack.append((c, new))
            else:
                label = labels[node]
                if label is None or label == "":
                    raise EmptyLabel("leaf without a label")
                if label not in taxa.index:
                    raise TaxaMismatch(f"leaf {label!r} is not in the taxa universe")
                if label in seen:
                    raise DuplicateTaxon(f"taxon {label!r} appears on more than one leaf")
                seen.add(label)
                leaf_taxon.append(taxa.index[label])
        if len(seen) != len(taxa):
            missing = sorted(set(taxa.names) - seen)
            raise TaxaMismatch(f"taxa missing from tree: {missing[:5]}")
        self.parent = tuple(parent)
        self.children = tuple(tuple(k) for k in kids)
        self.leaf_taxon = tuple(leaf_taxon)

    @classmethod
    def from_nested(cls, nested, taxa: Taxa | None = None) -> "Tree":
        """Build a tree from nested lists/tuples of leaf labels.

        >>> t = Tree.from_nested([["A", "B"], "C"])
        >>> len(extract_clades(t))
        1
        """
        children: list[list[int]] = []
        labels: list[str | None] = []
        stack = [(nested, -1)]
        while stack:
            item, par = stack.pop()
            node = len(children)
            children.append([])
            if par >= 0:
                children[par].append(node)
            if isinstance(item, (list, tuple)):
                labels.append(None)
                if not item:
                    raise EmptyLabel("empty subtree")
                # push reversed so children keep their order
                for sub in reversed(item):
                    stack.append((sub, node))
            else:
                labels.append(str(item))
        if taxa is None:
            taxa = Taxa.from_labels(l for l in labels if l is not None)
        return cls(taxa, children, labels, 0)

    @property
    def root(self) -> int:
        return 0

    def __len__(self):
        return len(self.parent)

    def is_leaf(self, node: int) -> bool:
        return not self.children[node]

    def postorder(self):
        # preorder numbering means reversed ids visit children first
        return range(len(self.parent) - 1, -1, -1)

    def node_bits(self) -> list[int]:
        """Bitset of the leaves below every node."""
        bits = [0] * len(self.parent)
        for v in self.postorder():
            if self.leaf_taxon[v] >= 0:
                bits[v] = 1 << self.leaf_taxon[v]
            else:
                b = 0
                for c in self.children[v]:
                    b |= bits[c]
                bits[v] = b
        return bits

    def to_nested(self):
        """Inverse of :meth:`from_nested` (children in arena order)."""
        out: list = [None] * len(self.parent)
        for v in self.postorder():
            if self.leaf_taxon[v] >= 0:
                out[v] = self.taxa.names[self.leaf_taxon[v]]
            else:
                out[v] = [out[c] for c in self.children[v]]
        return out[0]

    def __repr__(self):
        return f"Tree(n_taxa={len(self.taxa)}, n_nodes={len(self)})"


# Relation codes between two clades a, b (read "a is ... of b").
EQUAL, SUBSET, SUPERSET, DISJOINT, OVERLAP = range(5)

# COMPATIBLE[r1, r2] is True iff two matched pairs whose T1 clades relate
# by r1 and whose T2 clades relate by r2 are not in conflict.
COMPATIBLE = np.zeros((5, 5), dtype=bool)
for _r1 in range(5):
    for _r2 in range(5):
        COMPATIBLE[_r1, _r2] = (
            (_r1 in (EQUAL, SUBSET) and _r2 in (EQUAL, SUBSET))
            or (_r1 in (EQUAL, SUPERSET) and _r2 in (EQUAL, SUPERSET))
            or (_r1 == DISJOINT and _r2 == DISJOINT)
        )
COMPATIBLE.setflags(write=False)


@dataclass(frozen=True)
class CladeSet:
    """Non-trivial clades of one tree, in canonical order.

    Canonical order is by clade size, then by the sorted list of member
    taxon indices. ``origins`` holds the tree node of each clade and is
    ignored by equality.
    """

    taxa: Taxa
    clades: tuple[Clade, ...]
    origins: tuple[int, ...] = field(default=(), compare=False)

    def __len__(self):
        return len(self.clades)

    def __iter__(self):
        return iter(self.clades)

    def __getitem__(self, i) -> Clade:
        return self.clades[i]

    @property
    def bits(self) -> list[int]:
        return [c.bits for c in self.clades]

    def sizes(self) -> np.ndarray:
        return np.array([c.size for c in self.clades], dtype=np.int64)

    def membership(self) -> np.ndarray:
        """Boolean matrix, one row per clade, one column per taxon."""
        m = np.zeros((len(self.clades), len(self.taxa)), dtype=bool)
        for r, c in enumerate(self.clades):
            m[r, c.members()] = True
        return m

    def relations(self) -> np.ndarray:
        """Matrix of relation codes: ``rel[a, b]`` relates clade a to b."""
        return relation_matrix(self.membership(), self.membership())


def relation_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Relation codes between rows of two membership matrices."""
    ai = a.astype(np.int64)
    bi = b.astype(np.int64)
    inter = ai @ bi.T
    sa = ai.sum(axis=1)[:, None]
    sb = bi.sum(axis=1)[None, :]
    rel = np.full(inter.shape, OVERLAP, dtype=np.int8)
    rel[inter == 0] = DISJOINT
    a_in_b = inter == sa
    b_in_a = inter == sb
    rel[a_in_b & ~b_in_a] = SUBSET
    rel[b_in_a & ~a_in_b] = SUPERSET
    rel[a_in_b & b_in_a] = EQUAL
    return rel


def extract_clades(tree: Tree) -> CladeSet:
    """Non-trivial clades of ``tree`` in canonical order."""
    bits = tree.node_bits()
    full = tree.taxa.full
    found = {}
    for v in range(1, len(tree)):
        if tree.leaf_taxon[v] >= 0:
            continue
        b = bits[v]
        if b.bit_count() > 1 and b != full and b not in found:
            found[b] = v
    ordered = sorted(found, key=lambda b: (b.bit_count(), _members(b)))
    return CladeSet(
        tree.taxa,
        tuple(Clade(b) for b in ordered),
        tuple(found[b] for b in ordered),
    )


def clades_conflict(a1: int, a2: int, b1: int, b2: int) -> bool:
    """Conflict test on raw bitsets for pairs (a1, a2) and (b1, b2)."""
    if a1 & b1 == a1 and a2 & b2 == a2:
        return False
    if a1 & b1 == b1 and a2 & b2 == b2:
        return False
    if a1 & b1 == 0 and a2 & b2 == 0:
        return False
    return True


def conflict(pair_a: tuple[Clade, Clade], pair_b: tuple[Clade, Clade]) -> bool:
    """Whether two matched pairs violate the arboreal conditions.

    Each pair is ``(clade of T1, clade of T2)``. The pairs are compatible
    when both sides are nested the same way round, or both sides are
    disjoint.
    """
    (y1, y2), (z1, z2) = pair_a, pair_b
    return clades_conflict(y1.bits, y2.bits, z1.bits, z2.bits)


def random_tree(
    taxa: Taxa | Sequence[str] | int,
    rng: random.Random | int | None = None,
    binary: bool = True,
    max_degree: int = 4,
) -> Tree:
    """Random rooted tree by repeated random joining of subtrees.

    With ``binary=False`` each join merges between 2 and ``max_degree``
    subtrees, producing polytomies.
    """
    if isinstance(taxa, int):
        taxa = Taxa(tuple(f"t{i}" for i in range(taxa)))
    elif not isinstance(taxa, Taxa):
        taxa = Taxa(tuple(taxa))
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    pool: list = list(taxa.names)
    rng.shuffle(pool)
    while len(pool) > 1:
        k = 2 if binary else rng.randint(2, min(max_degree, len(pool)))
        picked = [pool.pop(rng.randrange(len(pool))) for _ in range(k)]
        pool.append(picked)
    return Tree.from_nested(pool[0], taxa)
