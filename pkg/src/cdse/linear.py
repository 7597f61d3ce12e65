"""Linear combinations with rational coefficients over a hashable basis.

One small class covers forest sums, tensors of forests, and commutative
words; subclasses only say how two basis elements multiply.  Zero
coefficients are dropped eagerly so equality is dictionary equality.
"""

from __future__ import annotations

from fractions import Fraction

from .trees import EMPTY_FOREST, Forest, Tree, forest_text, single


class LinComb:
    """Finite formal sum c_1 b_1 + ... + c_k b_k, coefficients in Q."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        data = {}
        if terms:
            for key, coeff in (terms.items() if isinstance(terms, dict) else terms):
                coeff = Fraction(coeff)
                if coeff:
                    acc = data.get(key, 0) + coeff
                    if acc:
                        data[key] = acc
                    else:
                        del data[key]
        self.terms = data

    @classmethod
    def term(cls, key, coeff=1):
        return cls({key: Fraction(coeff)})

    @classmethod
    def zero(cls):
        return cls()

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, LinComb) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        out = dict(self.terms)
        for key, coeff in other.terms.items():
            acc = out.get(key, 0) + coeff
            if acc:
                out[key] = acc
            else:
                del out[key]
        res = type(self).__new__(type(self))
        res.terms = out
        return res

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "LinComb":
        c = Fraction(c)
        res = type(self).__new__(type(self))
        res.terms = {k: v * c for k, v in self.terms.items()} if c else {}
        return res

    def __neg__(self):
        return self.scale(-1)

    def coeff(self, key) -> Fraction:
        return self.terms.get(key, Fraction(0))

    # subclasses define how basis elements multiply
    def _mul_key(self, a, b):
        raise NotImplementedError

    def __mul__(self, other):
        res = type(self).__new__(type(self))
        out = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                key = self._mul_key(ka, kb)
                acc = out.get(key, 0) + ca * cb
                if acc:
                    out[key] = acc
                else:
                    del out[key]
        res.terms = out
        return res

    def map_keys(self, fn) -> "LinComb":
        """Linear extension of a basis map; fn returns a key."""
        res = type(self).__new__(type(self))
        out = {}
        for key, coeff in self.terms.items():
            new = fn(key)
            acc = out.get(new, 0) + coeff
            if acc:
                out[new] = acc
            else:
                del out[new]
        res.terms = out
        return res

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for key in sorted(self.terms, key=_sort_key):
            bits.append(f"{self.terms[key]}*{key!r}")
        return " + ".join(bits)


def proportionality(a: LinComb, b: LinComb):
    """The scalar c with a = c*b, if one exists; None otherwise.

    Zero a gives 0 when b is anything nonzero; a nonzero next to a zero b has
    no scalar.
    """
    if not b.terms:
        return Fraction(0) if not a.terms else None
    key, val = next(iter(b.terms.items()))
    c = a.coeff(key) / val
    return c if a == b.scale(c) else None


def _sort_key(key):
    if isinstance(key, (Forest, Tree)):
        return (0, key.key)
    if isinstance(key, tuple):
        return (1, tuple(_sort_key(k) for k in key))
    return (2, key)


class ForestSum(LinComb):
    """Element of the polynomial algebra on trees; keys are forests."""

    __slots__ = ()

    def _mul_key(self, a: Forest, b: Forest) -> Forest:
        return a * b

    @classmethod
    def one(cls):
        return cls.term(EMPTY_FOREST)

    @classmethod
    def of_tree(cls, t: Tree, coeff=1):
        return cls.term(single(t), coeff)

    def homogeneous(self, n: int) -> "ForestSum":
        return ForestSum({k: v for k, v in self.terms.items() if k.degree == n})

    def truncate(self, n: int) -> "ForestSum":
        return ForestSum({k: v for k, v in self.terms.items() if k.degree <= n})


def forest_sum_text(x: ForestSum) -> str:
    """`coeff * forest` terms joined by ` + `, in canonical forest order."""
    if not x.terms:
        return "0"
    return " + ".join(f"{x.terms[f]} * {forest_text(f)}"
                      for f in sorted(x.terms, key=lambda f: f.key))


class TensorSum(LinComb):
    """Two-sided tensors of forests; keys are pairs (left, right)."""

    __slots__ = ()

    def _mul_key(self, a, b):
        return (a[0] * b[0], a[1] * b[1])

    @classmethod
    def of(cls, left: Forest, right: Forest, coeff=1):
        return cls.term((left, right), coeff)

    def bidegree(self, m: int, n: int) -> "TensorSum":
        return TensorSum({k: v for k, v in self.terms.items()
                          if k[0].degree == m and k[1].degree == n})


def tensor(a: ForestSum, b: ForestSum) -> TensorSum:
    out = {}
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            out[(ka, kb)] = ca * cb
    return TensorSum(out)


class WordSum(LinComb):
    """Commutative words in abstract generators; keys are sorted int tuples."""

    __slots__ = ()

    def _mul_key(self, a, b):
        return tuple(sorted(a + b))

    @classmethod
    def gen(cls, i: int, coeff=1):
        return cls.term((i,), coeff)

    @classmethod
    def one(cls):
        return cls.term(())
