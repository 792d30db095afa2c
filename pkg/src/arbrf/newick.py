"""Newick reader and writer for rooted trees.

Branch lengths and internal node labels are accepted and discarded.
Unquoted labels use the characters ``[A-Za-z0-9_.|-]`` and underscores
are kept as they are. Single-quoted labels may contain anything; a
doubled quote ``''`` stands for one quote character.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    DocumentTaxaMismatch,
    DuplicateTaxon,
    EmptyLabel,
    NewickError,
    NewickSyntaxError,
    TaxaMismatch,
    TrailingGarbage,
    UnbalancedParens,
)
from .model import Taxa, Tree

__all__ = ["NewickDocument", "parse", "parse_file", "serialize", "quote_label"]

_LABEL_CHARS = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_.|-")
_NUMBER_CHARS = frozenset("0123456789.eE+-")
_UNQUOTED = re.compile(r"[A-Za-z0-9_.|-]+\Z")
_WHITESPACE = " \t\r\n"


@dataclass(frozen=True)
class NewickDocument:
    source: str
    trees: tuple[Tree, ...]
    taxa: Taxa

    def __len__(self):
        return len(self.trees)

    def __getitem__(self, i) -> Tree:
        return self.trees[i]


class _Reader:
    """Single pass over the text producing one arena per tree."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        text, n = self.text, len(self.text)
        while self.pos < n and text[self.pos] in _WHITESPACE:
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def label(self) -> str | None:
        """Read a quoted or unquoted label; ``None`` if none is present."""
        text, n = self.text, len(self.text)
        if self.pos < n and text[self.pos] == "'":
            start = self.pos
            self.pos += 1
            out = []
            while True:
                if self.pos >= n:
                    raise NewickSyntaxError("unterminated quoted label", start)
                ch = text[self.pos]
                if ch == "'":
                    if self.pos + 1 < n and text[self.pos + 1] == "'":
                        out.append("'")
                        self.pos += 2
                        continue
                    self.pos += 1
                    break
                out.append(ch)
                self.pos += 1
            if not out:
                raise EmptyLabel("empty quoted label", start)
            return "".join(out)
        start = self.pos
        while self.pos < n and text[self.pos] in _LABEL_CHARS:
            self.pos += 1
        if self.pos == start:
            return None
        return text[start:self.pos]

    def branch_length(self):
        if self.peek() != ":":
            return
        self.pos += 1
        self.skip_ws()
        start = self.pos
        text, n = self.text, len(self.text)
        while self.pos < n and text[self.pos] in _NUMBER_CHARS:
            self.pos += 1
        try:
            float(text[start:self.pos])
        except ValueError:
            raise NewickSyntaxError("malformed branch length", start) from None

    def tree(self):
        """Parse one ``subtree ';'``; returns (children, labels)."""
        children: list[list[int]] = []
        labels: list[str | None] = []
        open_nodes: list[int] = []
        opened_at: list[int] = []
        while True:
            # expecting a subtree
            ch = self.peek()
            if ch == "(":
                node = len(children)
                children.append([])
                labels.append(None)
                if open_nodes:
                    children[open_nodes[-1]].append(node)
                open_nodes.append(node)
                opened_at.append(self.pos)
                self.pos += 1
                continue
            if ch == ")" and not open_nodes:
                raise UnbalancedParens("unexpected ')'", self.pos)
            start = self.pos
            name = self.label()
            if name is None:
                if ch == "" and open_nodes:
                    raise UnbalancedParens("unclosed '('", opened_at[-1])
                if ch in ("", ",", ")", ";", ":"):
                    raise EmptyLabel("missing leaf label", start)
                raise NewickSyntaxError(f"unexpected character {ch!r}", start)
            node = len(children)
            children.append([])
            labels.append(name)
            if open_nodes:
                children[open_nodes[-1]].append(node)
            self.branch_length()
            # subtree complete: close as many groups as the text says
            while True:
                ch = self.peek()
                if not open_nodes:
                    if ch == ";":
                        self.pos += 1
                        return children, labels
                    if ch == "":
                        raise NewickSyntaxError("missing ';' at end of tree", self.pos)
                    if ch == ")":
                        raise UnbalancedParens("unexpected ')'", self.pos)
                    raise TrailingGarbage(f"unexpected {ch!r} after tree", self.pos)
                if ch == ",":
                    self.pos += 1
                    break
                if ch == ")":
                    self.pos += 1
                    open_nodes.pop()
                    opened_at.pop()
                    self.skip_ws()
                    self.label()
                    self.branch_length()
                    continue
                if ch in ("", ";"):
                    raise UnbalancedParens("unclosed '('", opened_at[-1])
                raise NewickSyntaxError(f"unexpected character {ch!r}", self.pos)


def parse(text: str | bytes, taxa: Taxa | None = None) -> NewickDocument:
    """Parse one or more ``;``-terminated Newick trees.

    All trees must have the same leaf set. When ``taxa`` is given, the
    trees are built over that universe and must cover it exactly;
    otherwise the universe is the sorted set of labels of the first tree.

    >>> doc = parse("((A,B),C);")
    >>> doc.taxa.names
    ('A', 'B', 'C')
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise NewickSyntaxError(f"input is not valid UTF-8: {exc.reason}", exc.start) from None
    if text.startswith("﻿"):
        text = text[1:]
    reader = _Reader(text)
    arenas = []
    while reader.peek() != "":
        start = reader.pos
        children, labels = reader.tree()
        names = [labels[i] for i in range(len(labels)) if not children[i]]
        seen = set()
        for name in names:
            if name in seen:
                raise DuplicateTaxon(f"taxon {name!r} appears twice in tree {len(arenas)}", start)
            seen.add(name)
        arenas.append((children, labels, seen, start))
    if not arenas:
        raise NewickSyntaxError("no tree found", 0)

    if taxa is None:
        taxa = Taxa.from_labels(arenas[0][2])
    expected = set(taxa.names)
    trees = []
    for idx, (children, labels, names, start) in enumerate(arenas):
        if names != expected:
            extra = sorted(names - expected)[:3]
            missing = sorted(expected - names)[:3]
            raise DocumentTaxaMismatch(
                f"tree {idx} has a different leaf set (extra {extra}, missing {missing})", start
            )
        trees.append(Tree(taxa, children, labels, 0))
    return NewickDocument(text, tuple(trees), taxa)


def parse_file(path, taxa: Taxa | None = None) -> NewickDocument:
    return parse(Path(path).read_bytes(), taxa)


def quote_label(label: str) -> str:
    if _UNQUOTED.match(label):
        return label
    return "'" + label.replace("'", "''") + "'"


def serialize(tree: Tree) -> str:
    """Canonical Newick string of ``tree``.

    Children are ordered by the smallest taxon index below them; no
    branch lengths are written.

    >>> serialize(parse("(C,(B,A));")[0])
    '((A,B),C);'
    """
    n = len(tree)
    low = [0] * n
    for v in tree.postorder():
        if tree.leaf_taxon[v] >= 0:
            low[v] = tree.leaf_taxon[v]
        else:
            low[v] = min(low[c] for c in tree.children[v])
    names = tree.taxa.names
    out: list[str] = []
    # items are node ids, or literal strings to emit
    stack: list = [0]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        if tree.leaf_taxon[item] >= 0:
            out.append(quote_label(names[tree.leaf_taxon[item]]))
            continue
        kids = sorted(tree.children[item], key=low.__getitem__)
        out.append("(")
        stack.append(")")
        for i, c in enumerate(reversed(kids)):
            stack.append(c)
            if i < len(kids) - 1:
                stack.append(",")
    out.append(";")
    return "".join(out)


__all__ += ["NewickError", "TaxaMismatch"]
