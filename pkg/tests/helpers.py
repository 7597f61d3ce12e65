"""Brute-force recomputation routes shared by the tests.

Each oracle here reaches a quantity by a path disjoint from the library's
own: automorphism groups by explicit permutation search, the coproduct by
enumerating admissible edge subsets, structure constants by leaf surgery.
The tests compare, never reuse, the production code paths.
"""

import itertools
from fractions import Fraction

from cdse import (
    Decoration,
    Forest,
    ForestSum,
    TensorSum,
    Tree,
    forests_of_degree,
    single,
    trees_of_degree,
)
from cdse.trees import EMPTY_FOREST

TWO_LABELS = (Decoration(1, 1), Decoration(2, 1))


# ------------------------------------------------------------ automorphisms

def _flatten(t: Tree):
    decs, parent, depth = [], [], []

    def walk(node, par, dep):
        idx = len(decs)
        decs.append(node.decoration)
        parent.append(par)
        depth.append(dep)
        for c in node.children:
            walk(c, idx, dep + 1)

    walk(t, -1, 0)
    return decs, parent, depth


def automorphism_count(t: Tree) -> int:
    """Order of the root-fixing automorphism group, by explicit search.

    An automorphism preserves distance from the root, so only
    depth-preserving vertex bijections are searched; within that restriction
    the search is exhaustive.
    """
    decs, parent, depth = _flatten(t)
    levels = {}
    for v in range(len(decs)):
        levels.setdefault(depth[v], []).append(v)
    blocks = [levels[d] for d in sorted(levels)]
    count = 0
    for images in itertools.product(*(itertools.permutations(b) for b in blocks)):
        sigma = {}
        for block, img in zip(blocks, images):
            for v, w in zip(block, img):
                sigma[v] = w
        ok = all(decs[sigma[v]] == decs[v] for v in sigma)
        ok = ok and all(
            (sigma[parent[v]] if parent[v] >= 0 else -1) == parent[sigma[v]]
            for v in sigma)
        if ok:
            count += 1
    return count


def forest_automorphism_count(f: Forest) -> int:
    # hanging the forest under one fresh root turns its symmetries into
    # root-fixing tree automorphisms, and adds nothing else
    return automorphism_count(Tree(Decoration(0, 1), f.trees))


# ----------------------------------------------------------- cut coproduct

def _tree_cuts(t: Tree) -> TensorSum:
    """All admissible cuts of one tree, as pruned-part (x) root-part.

    A cut keeps or severs each edge; admissibility means no severed edge
    sits above another.  The recursion enumerates exactly those subsets:
    per child, either sever its edge (the whole subtree moves left) or
    recurse into it.  The cut above the root is appended separately.
    """

    def options(node):
        per_child = []
        for c in node.children:
            choices = [((c,), None)]
            choices.extend(options(c))
            per_child.append(choices)
        out = []
        for combo in itertools.product(*per_child):
            pruned = tuple(itertools.chain.from_iterable(p for p, _ in combo))
            kept = tuple(k for _, k in combo if k is not None)
            out.append((pruned, Tree(node.decoration, kept)))
        return out

    acc = TensorSum.of(single(t), EMPTY_FOREST)
    for pruned, kept in options(t):
        acc = acc + TensorSum.of(Forest(pruned), single(kept))
    return acc


def cut_coproduct(f: Forest) -> TensorSum:
    """Coproduct by brute enumeration, extended multiplicatively."""
    acc = TensorSum.of(EMPTY_FOREST, EMPTY_FOREST)
    for t in f.trees:
        acc = acc * _tree_cuts(t)
    return acc


# ------------------------------------------------------- structure constants

def graft_candidates(t: Tree, dec: Decoration):
    """Distinct trees obtained by hanging a fresh dec leaf on some vertex."""
    new_leaf = Tree(dec)

    def attach(node):
        res = [Tree(node.decoration, node.children + (new_leaf,))]
        for idx, c in enumerate(node.children):
            for sub in attach(c):
                kids = node.children[:idx] + (sub,) + node.children[idx + 1:]
                res.append(Tree(node.decoration, kids))
        return res

    return set(attach(t))


def leaf_removals(t2: Tree, dec: Decoration):
    """Trees left by deleting one dec-decorated leaf, one per leaf position."""
    def strip(node):
        res = []
        for idx, c in enumerate(node.children):
            rest = node.children[:idx] + node.children[idx + 1:]
            if not c.children and c.decoration == dec:
                res.append(Tree(node.decoration, rest))
            for sub in strip(c):
                res.append(Tree(node.decoration,
                                node.children[:idx] + (sub,) + node.children[idx + 1:]))
        return res

    if not t2.children:
        return []
    return strip(t2)


def lambda_by_surgery(sol, i: int, ip: int, q: int, n: int):
    """Structure constant recomputed without the coproduct.

    For each tree t of x_i(n), graft a fresh (ip, q) leaf onto every vertex,
    deduplicate, weight each candidate by how many of its (ip, q) leaves cut
    back to t, and sum the candidate coefficients of x_i(n+q) with those
    weights.  The ratio against a_t must agree across the component; the
    markers mirror the production table.
    """
    comp = sol.component(i, n)
    upper = sol.component(i, n + q)
    dec = Decoration(ip, q)
    if not comp:
        return "vacuous"
    ratios = set()
    for f, a_t in comp.terms.items():
        t = f.trees[0]
        total = Fraction(0)
        for t2 in graft_candidates(t, dec):
            hits = sum(1 for r in leaf_removals(t2, dec) if r == t)
            if hits:
                total += hits * upper.coeff(single(t2))
        ratios.add(total / a_t)
    return ratios.pop() if len(ratios) == 1 else "inconsistent"


# ------------------------------------------------------------- enumeration

def forests_up_to(decorations, bound: int):
    out = [EMPTY_FOREST]
    for n in range(1, bound + 1):
        out.extend(forests_of_degree(decorations, n))
    return out


def trees_up_to(decorations, bound: int):
    out = []
    for n in range(1, bound + 1):
        out.extend(trees_of_degree(decorations, n))
    return out
