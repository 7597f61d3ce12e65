"""Decorated rooted trees and forests.

Every vertex carries a decoration ``(eq, degree)``: the index of the equation
the vertex belongs to and the degree of the grafting operator that created
it.  The degree of a tree is the sum of the decoration degrees over its
vertices, so a single vertex may weigh more than one.

Trees are immutable and canonical by construction: children are stored sorted
under a total order (degree, root decoration, child keys), so structural
equality is plain equality and multiset bookkeeping stays cheap.  A forest is
a sorted tuple of trees; the empty forest is the monomial unit.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import groupby
from typing import Iterable, Iterator, NamedTuple


class Decoration(NamedTuple):
    """Vertex label (eq, degree), ordered lexicographically."""

    eq: int
    degree: int

    def __str__(self) -> str:
        return f"{self.eq}.{self.degree}"


class Tree:
    """Canonical decorated rooted tree."""

    __slots__ = ("decoration", "children", "degree", "vertices", "key", "_hash")

    def __init__(self, decoration, children: Iterable["Tree"] = ()):
        if not isinstance(decoration, Decoration):
            decoration = Decoration(*decoration)
        kids = tuple(sorted(children, key=lambda c: c.key))
        self.decoration = decoration
        self.children = kids
        self.degree = decoration.degree + sum(c.degree for c in kids)
        self.vertices = 1 + sum(c.vertices for c in kids)
        # nested tuples compare lexicographically, giving the total order
        self.key = (self.degree, decoration, tuple(c.key for c in kids))
        self._hash = hash(self.key)

    def __eq__(self, other) -> bool:
        return self is other or (isinstance(other, Tree) and self.key == other.key)

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Tree") -> bool:
        return self.key < other.key

    def __repr__(self) -> str:
        return tree_text(self)


class Forest:
    """Multiset of trees, kept sorted; the unit is the empty forest."""

    __slots__ = ("trees", "degree", "key", "_hash")

    def __init__(self, trees: Iterable[Tree] = ()):
        ts = tuple(sorted(trees, key=lambda t: t.key))
        self.trees = ts
        self.degree = sum(t.degree for t in ts)
        self.key = (self.degree, tuple(t.key for t in ts))
        self._hash = hash(self.key)

    def __eq__(self, other) -> bool:
        return self is other or (isinstance(other, Forest) and self.key == other.key)

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Forest") -> bool:
        return self.key < other.key

    def __mul__(self, other: "Forest") -> "Forest":
        return Forest(self.trees + other.trees)

    def __len__(self) -> int:
        return len(self.trees)

    def __iter__(self) -> Iterator[Tree]:
        return iter(self.trees)

    def __repr__(self) -> str:
        return forest_text(self)

    def grouped(self):
        """Pairs (tree, multiplicity) for the distinct trees, in order."""
        return tuple((t, len(tuple(g))) for t, g in groupby(self.trees))


EMPTY_FOREST = Forest()


def leaf(eq: int, degree: int = 1) -> Tree:
    return Tree(Decoration(eq, degree))


def single(t: Tree) -> Forest:
    return Forest((t,))


def ladder(*decorations) -> Tree:
    """Linear tree; the first decoration is the root, the last the leaf."""
    decs = [d if isinstance(d, Decoration) else Decoration(*d) for d in decorations]
    node = Tree(decs[-1])
    for d in reversed(decs[:-1]):
        node = Tree(d, (node,))
    return node


# ---------------------------------------------------------------- symmetry

@lru_cache(maxsize=None)
def tree_symmetry(t: Tree) -> int:
    """Order of the automorphism group of t fixing the root."""
    s = 1
    for sub, mult in Forest(t.children).grouped():
        s *= math.factorial(mult) * tree_symmetry(sub) ** mult
    return s


def forest_symmetry(f: Forest) -> int:
    s = 1
    for sub, mult in f.grouped():
        s *= math.factorial(mult) * tree_symmetry(sub) ** mult
    return s


# ------------------------------------------------------------- enumeration

def _as_decorations(decorations) -> tuple:
    return tuple(sorted({d if isinstance(d, Decoration) else Decoration(*d)
                         for d in decorations}))


@lru_cache(maxsize=None)
def _trees_table(decs: tuple, n: int) -> tuple:
    """tuple indexed by degree 0..n; entry m holds all trees of degree m."""
    table = [()] * (n + 1)
    pool: list[Tree] = []  # trees of degree < m, ascending degree
    for m in range(1, n + 1):
        new = []
        for dec in decs:
            if dec.degree > m:
                continue
            for kids in _multisets(tuple(pool), m - dec.degree, 0):
                new.append(Tree(dec, kids))
        table[m] = tuple(sorted(new, key=lambda t: t.key))
        pool.extend(table[m])
    return tuple(table)


def _multisets(pool: tuple, k: int, start: int) -> Iterator[tuple]:
    """Multisets (as nondecreasing index tuples) of pool trees of total degree k."""
    if k == 0:
        yield ()
        return
    for idx in range(start, len(pool)):
        t = pool[idx]
        if t.degree > k:
            break  # pool is sorted by degree
        for rest in _multisets(pool, k - t.degree, idx):
            yield (t,) + rest


def trees_of_degree(decorations, n: int) -> tuple:
    """All canonical trees of degree exactly n over the decoration set."""
    if n < 1:
        return ()
    return _trees_table(_as_decorations(decorations), n)[n]


def forests_of_degree(decorations, n: int) -> tuple:
    """All forests of degree exactly n (degree 0 gives the empty forest)."""
    if n < 0:
        return ()
    if n == 0:
        return (EMPTY_FOREST,)
    decs = _as_decorations(decorations)
    pool = [t for m in range(1, n + 1) for t in _trees_table(decs, n)[m]]
    pool.sort(key=lambda t: (t.degree, t.key))
    out = [Forest(kids) for kids in _multisets(tuple(pool), n, 0)]
    return tuple(sorted(out, key=lambda f: f.key))


# ------------------------------------------------------------ serialization

def tree_text(t: Tree) -> str:
    bits = [f"({t.decoration.eq}.{t.decoration.degree}:"]
    for c in t.children:
        bits.append(" ")
        bits.append(tree_text(c))
    bits.append(")")
    return "".join(bits)


def forest_text(f: Forest) -> str:
    if not f.trees:
        return "1"
    return " ".join(tree_text(t) for t in f.trees)


class TreeSyntaxError(ValueError):
    pass


def _skip_ws(s: str, pos: int) -> int:
    while pos < len(s) and s[pos].isspace():
        pos += 1
    return pos


def _parse_int(s: str, pos: int) -> tuple[int, int]:
    start = pos
    while pos < len(s) and s[pos].isdigit():
        pos += 1
    if pos == start:
        raise TreeSyntaxError(f"expected integer at position {start}: {s!r}")
    return int(s[start:pos]), pos


def _parse_tree(s: str, pos: int) -> tuple[Tree, int]:
    if pos >= len(s) or s[pos] != "(":
        raise TreeSyntaxError(f"expected '(' at position {pos}: {s!r}")
    eq, pos = _parse_int(s, pos + 1)
    if pos >= len(s) or s[pos] != ".":
        raise TreeSyntaxError(f"expected '.' at position {pos}: {s!r}")
    deg, pos = _parse_int(s, pos + 1)
    if pos >= len(s) or s[pos] != ":":
        raise TreeSyntaxError(f"expected ':' at position {pos}: {s!r}")
    pos = _skip_ws(s, pos + 1)
    kids = []
    while pos < len(s) and s[pos] == "(":
        kid, pos = _parse_tree(s, pos)
        kids.append(kid)
        pos = _skip_ws(s, pos)
    if pos >= len(s) or s[pos] != ")":
        raise TreeSyntaxError(f"expected ')' at position {pos}: {s!r}")
    return Tree(Decoration(eq, deg), kids), pos + 1


def parse_tree(s: str) -> Tree:
    t, pos = _parse_tree(s, _skip_ws(s, 0))
    if _skip_ws(s, pos) != len(s):
        raise TreeSyntaxError(f"trailing input after tree: {s!r}")
    return t


def parse_forest(s: str) -> Forest:
    pos = _skip_ws(s, 0)
    if pos < len(s) and s[pos] == "1":
        if _skip_ws(s, pos + 1) != len(s):
            raise TreeSyntaxError(f"trailing input after unit forest: {s!r}")
        return EMPTY_FOREST
    trees = []
    while pos < len(s):
        t, pos = _parse_tree(s, pos)
        trees.append(t)
        pos = _skip_ws(s, pos)
    if not trees:
        raise TreeSyntaxError("empty forest literal (use '1')")
    return Forest(trees)
