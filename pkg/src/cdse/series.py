"""Truncated multivariate power series over Q and a small expression language.

Arguments of grafting operators are stored as expression trees so a whole
family of operators (one per degree q) can share a single template with the
placeholder ``q`` inside exponents and coefficients.  Instantiating ``q`` and
evaluating gives an exact TruncatedSeries; everything is Fraction arithmetic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .linear import ForestSum
from .trees import EMPTY_FOREST


class EvaluationError(ValueError):
    pass


class ParseError(ValueError):
    pass


class TruncatedSeries:
    """Power series in nvars variables, kept to total degree <= trunc."""

    __slots__ = ("nvars", "trunc", "coeffs")

    def __init__(self, nvars: int, trunc: int, coeffs=None):
        data = {}
        if coeffs:
            for p, c in (coeffs.items() if isinstance(coeffs, dict) else coeffs):
                if len(p) != nvars:
                    raise EvaluationError(f"exponent {p} has wrong arity")
                c = Fraction(c)
                if c and sum(p) <= trunc:
                    acc = data.get(p, 0) + c
                    if acc:
                        data[p] = acc
                    else:
                        del data[p]
        self.nvars = nvars
        self.trunc = trunc
        self.coeffs = data

    # ------------------------------------------------------------ builders

    @classmethod
    def const(cls, nvars, trunc, value):
        return cls(nvars, trunc, {(0,) * nvars: Fraction(value)})

    @classmethod
    def zero(cls, nvars, trunc):
        return cls(nvars, trunc)

    @classmethod
    def var(cls, nvars, trunc, j):
        """The series h_j, 1-based index."""
        if not 1 <= j <= nvars:
            raise EvaluationError(f"variable h{j} out of range (nvars={nvars})")
        e = tuple(1 if k == j - 1 else 0 for k in range(nvars))
        return cls(nvars, trunc, {e: Fraction(1)})

    # ------------------------------------------------------------- queries

    def coeff(self, p) -> Fraction:
        if isinstance(p, int):
            if self.nvars != 1:
                raise EvaluationError("integer exponent only for one variable")
            p = (p,)
        return self.coeffs.get(tuple(p), Fraction(0))

    def constant_term(self) -> Fraction:
        return self.coeffs.get((0,) * self.nvars, Fraction(0))

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        # truncation bounds are bookkeeping, not data: equal maps, equal series
        return (isinstance(other, TruncatedSeries)
                and self.nvars == other.nvars
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.nvars, frozenset(self.coeffs.items())))

    def __repr__(self):
        if not self.coeffs:
            return "<series 0>"
        bits = [f"{c}*h^{p}" for p, c in sorted(self.coeffs.items())]
        return "<series " + " + ".join(bits) + f" +O({self.trunc + 1})>"

    # ---------------------------------------------------------- arithmetic

    def _compatible(self, other):
        if self.nvars != other.nvars or self.trunc != other.trunc:
            raise EvaluationError("mixed series spaces")

    def __add__(self, other):
        self._compatible(other)
        out = dict(self.coeffs)
        for p, c in other.coeffs.items():
            acc = out.get(p, 0) + c
            if acc:
                out[p] = acc
            else:
                del out[p]
        res = TruncatedSeries.__new__(TruncatedSeries)
        res.nvars, res.trunc, res.coeffs = self.nvars, self.trunc, out
        return res

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        res = TruncatedSeries.__new__(TruncatedSeries)
        res.nvars, res.trunc = self.nvars, self.trunc
        res.coeffs = {p: v * c for p, v in self.coeffs.items()} if c else {}
        return res

    def __mul__(self, other):
        self._compatible(other)
        out = {}
        trunc = self.trunc
        for p, cp in self.coeffs.items():
            dp = sum(p)
            for r, cr in other.coeffs.items():
                if dp + sum(r) > trunc:
                    continue
                key = tuple(a + b for a, b in zip(p, r))
                acc = out.get(key, 0) + cp * cr
                if acc:
                    out[key] = acc
                else:
                    del out[key]
        res = TruncatedSeries.__new__(TruncatedSeries)
        res.nvars, res.trunc, res.coeffs = self.nvars, trunc, out
        return res

    def restrict(self, trunc: int) -> "TruncatedSeries":
        if trunc > self.trunc:
            raise EvaluationError("cannot extend a truncated series")
        return TruncatedSeries(self.nvars, trunc, self.coeffs)

    def pow_int(self, n: int) -> "TruncatedSeries":
        if n < 0:
            return self.pow_rational(Fraction(n))
        out = TruncatedSeries.const(self.nvars, self.trunc, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def _binomial(self, u: "TruncatedSeries", r: Fraction) -> "TruncatedSeries":
        # u has zero constant term, so u^k starts in degree k
        out = TruncatedSeries.const(self.nvars, self.trunc, 1)
        power = out
        coeff = Fraction(1)
        for k in range(1, self.trunc + 1):
            power = power * u
            if power.is_zero():
                break
            coeff *= Fraction(r - (k - 1), k)
            if coeff:
                out = out + power.scale(coeff)
        return out

    def pow_rational(self, r) -> "TruncatedSeries":
        r = Fraction(r)
        c = self.constant_term()
        one = TruncatedSeries.const(self.nvars, self.trunc, 1)
        if c == 1:
            # binomial route even for integer r, so pow_int stays an
            # independent cross-check
            return self._binomial(self - one, r)
        if r.denominator == 1:
            if r >= 0:
                return self.pow_int(r.numerator)
            if c == 0:
                raise EvaluationError("negative power needs a nonzero constant term")
            u = self.scale(Fraction(1, 1) / c) - one
            return self._binomial(u, r).scale(c ** r.numerator)
        raise EvaluationError("fractional power needs constant term 1")

    def exp(self) -> "TruncatedSeries":
        if self.constant_term() != 0:
            raise EvaluationError("exp needs zero constant term")
        out = TruncatedSeries.const(self.nvars, self.trunc, 1)
        power = out
        for k in range(1, self.trunc + 1):
            power = power * self
            if power.is_zero():
                break
            out = out + power.scale(Fraction(1, math.factorial(k)))
        return out

    def log(self) -> "TruncatedSeries":
        if self.constant_term() != 1:
            raise EvaluationError("log needs constant term 1")
        u = self - TruncatedSeries.const(self.nvars, self.trunc, 1)
        out = TruncatedSeries.zero(self.nvars, self.trunc)
        power = TruncatedSeries.const(self.nvars, self.trunc, 1)
        for k in range(1, self.trunc + 1):
            power = power * u
            if power.is_zero():
                break
            out = out + power.scale(Fraction((-1) ** (k + 1), k))
        return out

def substitute(f: TruncatedSeries, args, bound: int) -> ForestSum:
    """Evaluate f at forest-valued arguments, truncated to tree degree <= bound.

    args maps 1-based variable indices to ForestSums of valuation >= 1 (no
    empty-forest term); a sequence of length num_vars works too.  Variables
    that f never uses may be omitted from a dict.
    """
    if not isinstance(args, dict):
        if len(args) != f.nvars:
            raise EvaluationError("wrong number of substitution arguments")
        args = {j + 1: a for j, a in enumerate(args)}
    for a in args.values():
        if a.coeff(EMPTY_FOREST) != 0:
            raise EvaluationError("substitution needs zero constant terms")

    one = ForestSum.one()
    caches = {j: [one] for j in args}

    def power(j, e):
        cache = caches.get(j)
        if cache is None:
            raise EvaluationError(f"no argument supplied for h{j}")
        while len(cache) <= e:
            cache.append((cache[-1] * args[j]).truncate(bound))
        return cache[e]

    out = ForestSum.zero()
    for p, c in f.coeffs.items():
        if sum(p) > bound:
            continue
        term = one.scale(c)
        for j, e in enumerate(p, start=1):
            if e:
                term = (term * power(j, e)).truncate(bound)
        out = out + term
    return out


def _rising_coeffs(first_step, step, scale, trunc):
    # h^n coefficient: first_step (first_step+step) ... (first_step+(n-1)step) / n!
    out = [Fraction(1)]
    run = Fraction(1)
    for n in range(1, trunc + 1):
        run *= first_step + (n - 1) * step
        out.append(run * scale ** n / math.factorial(n))
    return out


def geometric_family(beta, nvars: int, var: int, scale, trunc: int) -> TruncatedSeries:
    """(1 - beta*scale*h_var)^(-1/beta), continued across beta = 0 as exp.

    The h^n coefficient is (1)(1+beta)...(1+(n-1)beta)/n! times scale^n.
    """
    beta = Fraction(beta)
    cs = _rising_coeffs(Fraction(1), beta, Fraction(scale), trunc)
    e0 = [0] * nvars
    coeffs = {}
    for n, c in enumerate(cs):
        e = list(e0)
        if n:
            e[var - 1] = n
        coeffs[tuple(e)] = c
    return TruncatedSeries(nvars, trunc, coeffs)


def geometric_family_shifted(beta, nvars: int, var: int, scale, trunc: int) -> TruncatedSeries:
    """Series with h^n coefficient (1+beta)(1+2beta)...(1+n*beta)/n! scale^n.

    Away from beta = -1 this is geometric_family(beta/(1+beta)) evaluated at
    (1+beta)*scale*h; at beta = -1 every n >= 1 coefficient vanishes and the
    series is the constant 1, which is exactly what the running product gives.
    """
    beta = Fraction(beta)
    cs = _rising_coeffs(1 + beta, beta, Fraction(scale), trunc)
    coeffs = {}
    for n, c in enumerate(cs):
        e = [0] * nvars
        if n:
            e[var - 1] = n
        coeffs[tuple(e)] = c
    return TruncatedSeries(nvars, trunc, coeffs)


# ------------------------------------------------------------- expressions

@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Param:
    pass


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: object  # must stay variable-free


@dataclass(frozen=True)
class Exp:
    arg: object


@dataclass(frozen=True)
class Log:
    arg: object


def num(v) -> Num:
    return Num(Fraction(v))


def ast_sum(terms, empty=None):
    terms = list(terms)
    if not terms:
        return empty if empty is not None else Num(Fraction(0))
    out = terms[0]
    for t in terms[1:]:
        out = Add(out, t)
    return out


def ast_product(factors):
    factors = list(factors)
    if not factors:
        return Num(Fraction(1))
    out = factors[0]
    for f in factors[1:]:
        out = Mul(out, f)
    return out


def expr_const(e, q: Optional[int] = None) -> Fraction:
    """Value of a variable-free expression, with q substituted for the parameter."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        raise EvaluationError("variable inside a constant context")
    if isinstance(e, Param):
        if q is None:
            raise EvaluationError("parameter q left uninstantiated")
        return Fraction(q)
    if isinstance(e, Neg):
        return -expr_const(e.arg, q)
    if isinstance(e, Add):
        return expr_const(e.left, q) + expr_const(e.right, q)
    if isinstance(e, Sub):
        return expr_const(e.left, q) - expr_const(e.right, q)
    if isinstance(e, Mul):
        return expr_const(e.left, q) * expr_const(e.right, q)
    if isinstance(e, Pow):
        c = expr_const(e.base, q)
        r = expr_const(e.exponent, q)
        if r.denominator == 1:
            n = r.numerator
            if n >= 0:
                return c ** n
            if c == 0:
                raise EvaluationError("negative power of zero")
            return Fraction(1) / c ** (-n)
        if c == 1:
            return Fraction(1)
        if c == 0 and r > 0:
            return Fraction(0)
        raise EvaluationError(f"irrational constant {c}^{r}")
    if isinstance(e, Exp):
        if expr_const(e.arg, q) == 0:
            return Fraction(1)
        raise EvaluationError("irrational constant exp value")
    if isinstance(e, Log):
        if expr_const(e.arg, q) == 1:
            return Fraction(0)
        raise EvaluationError("irrational constant log value")
    raise EvaluationError(f"unknown node {e!r}")


def expr_series(e, nvars: int, trunc: int, q: Optional[int] = None) -> TruncatedSeries:
    if isinstance(e, Num):
        return TruncatedSeries.const(nvars, trunc, e.value)
    if isinstance(e, Var):
        return TruncatedSeries.var(nvars, trunc, e.index)
    if isinstance(e, Param):
        if q is None:
            raise EvaluationError("parameter q left uninstantiated")
        return TruncatedSeries.const(nvars, trunc, q)
    if isinstance(e, Neg):
        return expr_series(e.arg, nvars, trunc, q).scale(-1)
    if isinstance(e, Add):
        return expr_series(e.left, nvars, trunc, q) + expr_series(e.right, nvars, trunc, q)
    if isinstance(e, Sub):
        return expr_series(e.left, nvars, trunc, q) - expr_series(e.right, nvars, trunc, q)
    if isinstance(e, Mul):
        return expr_series(e.left, nvars, trunc, q) * expr_series(e.right, nvars, trunc, q)
    if isinstance(e, Pow):
        r = expr_const(e.exponent, q)
        return expr_series(e.base, nvars, trunc, q).pow_rational(r)
    if isinstance(e, Exp):
        return expr_series(e.arg, nvars, trunc, q).exp()
    if isinstance(e, Log):
        return expr_series(e.arg, nvars, trunc, q).log()
    raise EvaluationError(f"unknown node {e!r}")


def expr_uses_param(e) -> bool:
    if isinstance(e, (Num, Var)):
        return False
    if isinstance(e, Param):
        return True
    if isinstance(e, (Neg, Exp, Log)):
        return expr_uses_param(e.arg)
    if isinstance(e, (Add, Sub, Mul)):
        return expr_uses_param(e.left) or expr_uses_param(e.right)
    if isinstance(e, Pow):
        return expr_uses_param(e.base) or expr_uses_param(e.exponent)
    raise EvaluationError(f"unknown node {e!r}")


def expr_map_vars(e, fn):
    """Rebuild the expression with each Var node replaced by fn(index)."""
    if isinstance(e, (Num, Param)):
        return e
    if isinstance(e, Var):
        return fn(e.index)
    if isinstance(e, Neg):
        return Neg(expr_map_vars(e.arg, fn))
    if isinstance(e, Add):
        return Add(expr_map_vars(e.left, fn), expr_map_vars(e.right, fn))
    if isinstance(e, Sub):
        return Sub(expr_map_vars(e.left, fn), expr_map_vars(e.right, fn))
    if isinstance(e, Mul):
        return Mul(expr_map_vars(e.left, fn), expr_map_vars(e.right, fn))
    if isinstance(e, Pow):
        return Pow(expr_map_vars(e.base, fn), expr_map_vars(e.exponent, fn))
    if isinstance(e, Exp):
        return Exp(expr_map_vars(e.arg, fn))
    if isinstance(e, Log):
        return Log(expr_map_vars(e.arg, fn))
    raise EvaluationError(f"unknown node {e!r}")


def expr_rescale_var(e, j: int, factor):
    """Substitute h_j -> factor * h_j."""
    c = Fraction(factor)
    return expr_map_vars(e, lambda k: Mul(Num(c), Var(k)) if k == j else Var(k))


def expr_instantiate(e, q: int):
    """Replace the parameter q by a concrete integer, returning a new tree."""
    if isinstance(e, (Num, Var)):
        return e
    if isinstance(e, Param):
        return Num(Fraction(q))
    if isinstance(e, Neg):
        return Neg(expr_instantiate(e.arg, q))
    if isinstance(e, Add):
        return Add(expr_instantiate(e.left, q), expr_instantiate(e.right, q))
    if isinstance(e, Sub):
        return Sub(expr_instantiate(e.left, q), expr_instantiate(e.right, q))
    if isinstance(e, Mul):
        return Mul(expr_instantiate(e.left, q), expr_instantiate(e.right, q))
    if isinstance(e, Pow):
        return Pow(expr_instantiate(e.base, q), expr_instantiate(e.exponent, q))
    if isinstance(e, Exp):
        return Exp(expr_instantiate(e.arg, q))
    if isinstance(e, Log):
        return Log(expr_instantiate(e.arg, q))
    raise EvaluationError(f"unknown node {e!r}")


def expr_at_zero(e):
    """Substitute every variable by 0, leaving q intact."""
    return expr_map_vars(e, lambda k: Num(Fraction(0)))


# ------------------------------------------------------------------ syntax
#
# expr   := term (('+'|'-') term)*
# term   := factor ('*' factor)*
# factor := atom ('^' atom)?
# atom   := '-' atom | NUMBER | 'q' | hJ | '(' expr ')' | ('exp'|'log') '(' expr ')'
#
# NUMBER is INT or INT/INT; '/' appears only inside such literals.  Exponents
# must be variable-free (checked at evaluation, not at parse time).

_TOKEN = re.compile(r"\s*(?:(\d+(?:\s*/\s*\d+)?)|(h\d+)|(q\b)|(exp\b)|(log\b)|([()^*+-]))")


def _tokenize(s: str):
    pos, out = 0, []
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m:
            if s[pos:].strip():
                raise ParseError(f"bad character at position {pos} in {s!r}")
            break
        if m.group(1):
            out.append(("num", Fraction(m.group(1).replace(" ", ""))))
        elif m.group(2):
            out.append(("var", int(m.group(2)[1:])))
        elif m.group(3):
            out.append(("param", None))
        elif m.group(4):
            out.append(("exp", None))
        elif m.group(5):
            out.append(("log", None))
        else:
            out.append((m.group(6), None))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens, source):
        self.tokens = tokens
        self.pos = 0
        self.source = source

    def peek(self):
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def take(self, kind=None):
        if self.pos >= len(self.tokens):
            raise ParseError(f"unexpected end of expression: {self.source!r}")
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind!r}, got {tok[0]!r} in {self.source!r}")
        self.pos += 1
        return tok

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()[0]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek() == "*":
            self.take()
            node = Mul(node, self.factor())
        return node

    def factor(self):
        node = self.atom()
        if self.peek() == "^":
            self.take()
            node = Pow(node, self.atom())
        return node

    def atom(self):
        kind = self.peek()
        if kind == "-":
            self.take()
            inner = self.atom()
            if isinstance(inner, Num):
                return Num(-inner.value)
            return Neg(inner)
        if kind == "num":
            return Num(self.take()[1])
        if kind == "var":
            return Var(self.take()[1])
        if kind == "param":
            self.take()
            return Param()
        if kind in ("exp", "log"):
            self.take()
            self.take("(")
            inner = self.expr()
            self.take(")")
            return Exp(inner) if kind == "exp" else Log(inner)
        if kind == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        raise ParseError(f"unexpected token {kind!r} in {self.source!r}")


def parse_expr(s: str):
    p = _Parser(_tokenize(s), s)
    node = p.expr()
    if p.pos != len(p.tokens):
        raise ParseError(f"trailing tokens in {s!r}")
    return node


def _atomic(e) -> bool:
    return isinstance(e, (Var, Param)) or (isinstance(e, Num) and e.value >= 0)


def expr_text(e) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Var):
        return f"h{e.index}"
    if isinstance(e, Param):
        return "q"
    if isinstance(e, Neg):
        return f"-({expr_text(e.arg)})"
    if isinstance(e, Add):
        return f"({expr_text(e.left)}+{expr_text(e.right)})"
    if isinstance(e, Sub):
        return f"({expr_text(e.left)}-{expr_text(e.right)})"
    if isinstance(e, Mul):
        return f"({expr_text(e.left)}*{expr_text(e.right)})"
    if isinstance(e, Pow):
        base = expr_text(e.base) if _atomic(e.base) else f"({expr_text(e.base)})"
        if _atomic(e.exponent) or isinstance(e.exponent, Num):
            ex = expr_text(e.exponent)
        else:
            ex = f"({expr_text(e.exponent)})"
        return f"{base}^{ex}"
    if isinstance(e, Exp):
        return f"exp({expr_text(e.arg)})"
    if isinstance(e, Log):
        return f"log({expr_text(e.arg)})"
    raise EvaluationError(f"unknown node {e!r}")
