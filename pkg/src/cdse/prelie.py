"""Grafting pre-Lie products on forests and their word-side shadows.

Two products live here.  On decorated forests: circ, the extension of
single-vertex grafting to the symmetric algebra, and star, the associative
composition product built from it.  On words in commuting letters e_1, e_2,
...: the two-parameter family e_i circ e_j = (lam*j - mu) e_{i+j} and its
extension, plus the degenerate letter product with a divisibility gate.

Most products come in two independently coded routes, a closed combinatorial
sum and a structural recursion; the test suite plays them against each other.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

from .linear import ForestSum, WordSum
from .trees import (Decoration, Forest, Tree, single, tree_symmetry,
                    trees_of_degree)


def _as_forest_sum(a) -> ForestSum:
    if isinstance(a, ForestSum):
        return a
    if isinstance(a, Tree):
        return ForestSum.of_tree(a)
    if isinstance(a, Forest):
        return ForestSum.term(a)
    raise TypeError(f"expected a forest-like value, got {type(a).__name__}")


def _bilinear(fn, a, b) -> ForestSum:
    a, b = _as_forest_sum(a), _as_forest_sum(b)
    out = {}
    for fa, ca in a.terms.items():
        for fb, cb in b.terms.items():
            for f, c in fn(fa, fb).terms.items():
                out[f] = out.get(f, Fraction(0)) + ca * cb * c
    return ForestSum(out)


def _attach(base: Forest, assignment) -> Forest:
    """Rebuild base with assignment[v] grafted below vertex v.

    Vertices are numbered in preorder: tree by tree, root before children,
    children in stored order.
    """
    counter = itertools.count()

    def rebuild(t: Tree) -> Tree:
        idx = next(counter)
        kids = [rebuild(c) for c in t.children]
        kids.extend(assignment.get(idx, ()))
        return Tree(t.decoration, kids)

    return Forest(tuple(rebuild(t) for t in base.trees))


def _vertex_count(f: Forest) -> int:
    return sum(t.vertices for t in f.trees)


def _graft_all(t: Tree, target: Forest) -> ForestSum:
    """Sum over vertices of target of attaching t below that vertex."""
    out = {}
    for v in range(_vertex_count(target)):
        f = _attach(target, {v: (t,)})
        out[f] = out.get(f, Fraction(0)) + 1
    return ForestSum(out)


def graft(t: Tree, target: Tree) -> ForestSum:
    """Pre-Lie product of single trees: t grafted at each vertex of target."""
    return _graft_all(t, single(target))


def _circ_closed(F: Forest, G: Forest) -> ForestSum:
    # every map from the trees of F (as positions) to the vertices of G
    # contributes one simultaneous grafting
    nv = _vertex_count(G)
    k = len(F.trees)
    if k == 0:
        return ForestSum.term(G)
    if nv == 0:
        return ForestSum.zero()
    out = {}
    for targets in itertools.product(range(nv), repeat=k):
        assignment = {}
        for t, v in zip(F.trees, targets):
            assignment.setdefault(v, []).append(t)
        f = _attach(G, assignment)
        out[f] = out.get(f, Fraction(0)) + 1
    return ForestSum(out)


def circ(a, b) -> ForestSum:
    """Extended grafting product, as the closed sum over vertex assignments."""
    return _bilinear(_circ_closed, a, b)


def _circ_rec(F: Forest, G: Forest) -> ForestSum:
    # peel one tree x off F:  (x F') circ G = x circ (F' circ G)
    #                                        - (x circ F') circ G
    if not F.trees:
        return ForestSum.term(G)
    x = F.trees[0]
    rest = Forest(F.trees[1:])
    inner = _circ_rec(rest, G)
    out = {}
    for H, c in inner.terms.items():
        for f, c2 in _graft_all(x, H).terms.items():
            out[f] = out.get(f, Fraction(0)) + c * c2
    for K, c in _graft_all(x, rest).terms.items():
        for f, c2 in _circ_rec(K, G).terms.items():
            out[f] = out.get(f, Fraction(0)) - c * c2
    return ForestSum(out)


def circ_recursive(a, b) -> ForestSum:
    """Same product as circ, computed by the peeling recursion instead."""
    return _bilinear(_circ_rec, a, b)


def _splits(F: Forest):
    """Unshuffles of a forest: (left, right, multiplicity) triples."""
    groups = F.grouped()
    out = []
    for choice in itertools.product(*(range(m + 1) for _, m in groups)):
        mult = 1
        left = []
        right = []
        for c, (t, m) in zip(choice, groups):
            mult *= math.comb(m, c)
            left.extend([t] * c)
            right.extend([t] * (m - c))
        out.append((Forest(tuple(left)), Forest(tuple(right)), mult))
    return out


def _star_forests(F: Forest, G: Forest) -> ForestSum:
    out = {}
    for left, right, mult in _splits(F):
        grafted = _circ_closed(right, G)
        for f, c in grafted.terms.items():
            key = left * f
            out[key] = out.get(key, Fraction(0)) + mult * c
    return ForestSum(out)


def star(a, b) -> ForestSum:
    """Composition product: split a, graft one part into b, keep the rest.

    Associative, with the empty forest as unit; dual to the coproduct under
    the symmetry pairing.
    """
    return _bilinear(_star_forests, a, b)


# ------------------------------------------------------------- word algebra

def _check_word_sum(a) -> WordSum:
    if not isinstance(a, WordSum):
        raise TypeError(f"expected WordSum, got {type(a).__name__}")
    return a


def _word_bilinear(fn, a, b) -> WordSum:
    out = {}
    for wa, ca in _check_word_sum(a).terms.items():
        for wb, cb in _check_word_sum(b).terms.items():
            for w, c in fn(wa, wb).terms.items():
                out[w] = out.get(w, Fraction(0)) + ca * cb * c
    return WordSum(out)


def falling_product(lam, mu, m: int, j: int) -> Fraction:
    """Coefficient picked up when an m-letter word grafts onto e_j:

    (lam j - mu) (lam j) (lam j + mu) ... (lam j + (m-2) mu),  m factors.
    """
    lam, mu = Fraction(lam), Fraction(mu)
    if m == 0:
        return Fraction(1)
    out = lam * j - mu
    for k in range(m - 1):
        out *= lam * j + k * mu
    return out


def _word_on_letters_closed(lam, mu, w, v) -> WordSum:
    # distribute the letters of w over the positions of v; each block of
    # size m landing on e_j contributes falling_product(m, j) and advances
    # that letter by the block sum
    n = len(v)
    if n == 0:
        return WordSum.one() if not w else WordSum.zero()
    out = {}
    for targets in itertools.product(range(n), repeat=len(w)):
        sums = [0] * n
        sizes = [0] * n
        for letter, pos in zip(w, targets):
            sums[pos] += letter
            sizes[pos] += 1
        coeff = Fraction(1)
        for pos in range(n):
            coeff *= falling_product(lam, mu, sizes[pos], v[pos])
            if not coeff:
                break
        if not coeff:
            continue
        key = tuple(sorted(v[pos] + sums[pos] for pos in range(n)))
        out[key] = out.get(key, Fraction(0)) + coeff
    return WordSum(out)


def fdb_circ(lam, mu, a, b) -> WordSum:
    """Extended product for e_i circ e_j = (lam j - mu) e_{i+j}, closed form."""
    return _word_bilinear(lambda w, v: _word_on_letters_closed(lam, mu, w, v),
                          a, b)


def _letter_on_word(lam, mu, i: int, u) -> WordSum:
    # single letter acts as a derivation over the word u
    out = {}
    for pos in range(len(u)):
        coeff = Fraction(lam) * u[pos] - Fraction(mu)
        if not coeff:
            continue
        key = tuple(sorted(u[:pos] + (u[pos] + i,) + u[pos + 1:]))
        out[key] = out.get(key, Fraction(0)) + coeff
    return WordSum(out)


def _word_circ_rec(lam, mu, w, v) -> WordSum:
    if not w:
        return WordSum.term(v)
    if not v:
        return WordSum.zero()
    x, rest = w[0], w[1:]
    out = {}
    for u, c in _word_circ_rec(lam, mu, rest, v).terms.items():
        for key, c2 in _letter_on_word(lam, mu, x, u).terms.items():
            out[key] = out.get(key, Fraction(0)) + c * c2
    for u, c in _letter_on_word(lam, mu, x, rest).terms.items():
        for key, c2 in _word_circ_rec(lam, mu, u, v).terms.items():
            out[key] = out.get(key, Fraction(0)) - c * c2
    return WordSum(out)


def fdb_circ_recursive(lam, mu, a, b) -> WordSum:
    """Same word product, by peeling letters instead of the closed sum."""
    return _word_bilinear(lambda w, v: _word_circ_rec(lam, mu, w, v), a, b)


# ------------------------------------------------- trees to words and back

def tree_weight(lam, mu, t: Tree) -> Fraction:
    """Multiplier sending a tree to a letter: leaves weigh 1, an inner
    vertex of degree j with m children contributes falling_product(m, j)."""
    out = falling_product(lam, mu, len(t.children), t.decoration.degree)
    for c in t.children:
        out *= tree_weight(lam, mu, c)
    return out


def fdb_image(lam, mu, x) -> WordSum:
    """Algebra map to words: a tree of degree n goes to tree_weight * e_n."""
    out = {}
    for f, c in _as_forest_sum(x).terms.items():
        coeff = Fraction(c)
        for t in f.trees:
            coeff *= tree_weight(lam, mu, t)
        if not coeff:
            continue
        key = tuple(sorted(t.degree for t in f.trees))
        out[key] = out.get(key, Fraction(0)) + coeff
    return WordSum(out)


def _decorations(J) -> tuple:
    return tuple(Decoration(1, j) for j in sorted(J))


def fdb_solution(lam, mu, J, n: int) -> ForestSum:
    """Degree-n slice of the tree series with weights tree_weight / symmetry.

    For the one-equation systems whose structure constants are affine with
    slope lam and intercept -mu this reproduces the solution components.
    """
    out = {}
    for t in trees_of_degree(_decorations(J), n):
        c = tree_weight(lam, mu, t) / tree_symmetry(t)
        if c:
            out[single(t)] = c
    return ForestSum(out)


def fdb_solution_recursive(lam, mu, J, n: int) -> ForestSum:
    """Same series through the direct coefficient recursion on trees."""
    memo = {}

    def nu(t: Tree) -> Fraction:
        got = memo.get(t)
        if got is not None:
            return got
        m = len(t.children)
        val = falling_product(lam, mu, m, t.decoration.degree)
        for sub, mult in Forest(t.children).grouped():
            val *= nu(sub) ** mult / math.factorial(mult)
        memo[t] = val
        return val

    out = {}
    for t in trees_of_degree(_decorations(J), n):
        c = nu(t)
        if c:
            out[single(t)] = c
    return ForestSum(out)


def fdb_surjective(J, lam, mu, all_degrees: bool = False) -> bool:
    """Whether fdb_image maps the span of trees over J onto all letters.

    all_degrees says J stands for every positive integer, not just the
    listed finite part.
    """
    lam, mu = Fraction(lam), Fraction(mu)
    if lam != 0:
        return 1 in J and (2 in J or mu != lam)
    return (mu != 0 and 1 in J) or all_degrees


# ------------------------------------------------ gated letter product

def affine_circ(modulus: int, alpha, a, b) -> WordSum:
    """Letter product e_i e_j -> alpha [modulus divides j] e_{i+j}.

    Defined on single letters only; unlike the two-parameter family it is
    associative on the nose.
    """
    alpha = Fraction(alpha)
    out = {}
    for wa, ca in _check_word_sum(a).terms.items():
        for wb, cb in _check_word_sum(b).terms.items():
            if len(wa) != 1 or len(wb) != 1:
                raise ValueError("gated product is defined on letters only")
            if wb[0] % modulus:
                continue
            key = (wa[0] + wb[0],)
            out[key] = out.get(key, Fraction(0)) + ca * cb * alpha
    return WordSum(out)


def reachable_degrees(J, modulus: int, bound: int):
    """Degrees where a gated system can have nonzero components, up to bound.

    Closure of the multiples of modulus inside J under addition, plus one
    optional final step by any element of J.
    """
    J = sorted(set(J))
    base = [j for j in J if j % modulus == 0]
    semigroup = set()
    frontier = set(base)
    while frontier:
        semigroup |= frontier
        frontier = {s + b for s in frontier for b in base
                    if s + b <= bound} - semigroup
    out = set(semigroup)
    for s in semigroup | {0}:
        for j in J:
            if s + j <= bound:
                out.add(s + j)
    return sorted(x for x in out if 1 <= x <= bound)
