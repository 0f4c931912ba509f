"""Truncated multivariate Taylor jets.

A :class:`Jet` stores the Taylor coefficients ``c[alpha] = d^alpha f / alpha!``
of a function of ``nvars`` variables, truncated at total degree ``degree``,
in graded-lexicographic order. The coefficient array may carry leading
axes, so one ``Jet`` can hold a whole vector or matrix of jets; arithmetic
broadcasts over those axes like numpy does.

>>> h = Jet.seed(2.0, 0, nvars=1, degree=2)
>>> (h * h).coeffs
array([4., 4., 1.])
"""

from __future__ import annotations

import functools
import itertools
import math
import string
from typing import Callable, Sequence

import numpy as np

from .errors import DivisionByZeroJet, DomainError, MismatchedJets, OrderExceeded

MAX_DEGREE = 4
DIV_GUARD = 1e-300


def _monomials(nvars: int, degree: int) -> list[tuple[int, ...]]:
    out = []
    for d in range(degree + 1):
        # lexicographically descending within a degree: x0^d first
        level = [c for c in itertools.product(range(d, -1, -1), repeat=nvars) if sum(c) == d]
        out.extend(level)
    return out


class JetTables:
    """Index tables shared by every jet with the same ``(nvars, degree)``."""

    def __init__(self, nvars: int, degree: int):
        self.nvars = nvars
        self.degree = degree
        self.monomials = _monomials(nvars, degree)
        self.size = len(self.monomials)
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self.orders = np.array([sum(m) for m in self.monomials])
        self.factorials = np.array(
            [math.prod(math.factorial(k) for k in m) for m in self.monomials], dtype=float
        )

        pairs = []
        for i, a in enumerate(self.monomials):
            for j, b in enumerate(self.monomials):
                if self.orders[i] + self.orders[j] <= degree:
                    k = self.index[tuple(p + q for p, q in zip(a, b))]
                    pairs.append((k, i, j))
        pairs.sort()
        k, i, j = (np.array(col, dtype=np.intp) for col in zip(*pairs))
        self.mul_left = i
        self.mul_right = j
        self.mul_starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])
        assert len(self.mul_starts) == self.size

    @functools.cached_property
    def derivative_maps(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per variable: (source index, factor) producing the degree-1 jet."""
        if self.degree == 0:
            raise OrderExceeded("cannot differentiate a degree-0 jet")
        lower = tables(self.nvars, self.degree - 1)
        maps = []
        for v in range(self.nvars):
            src = np.empty(lower.size, dtype=np.intp)
            fac = np.empty(lower.size)
            for n, beta in enumerate(lower.monomials):
                up = list(beta)
                up[v] += 1
                src[n] = self.index[tuple(up)]
                fac[n] = up[v]
            maps.append((src, fac))
        return maps


@functools.lru_cache(maxsize=None)
def tables(nvars: int, degree: int) -> JetTables:
    if not 0 <= degree <= MAX_DEGREE:
        raise OrderExceeded(f"jet degree must be in 0..{MAX_DEGREE}, got {degree}")
    if nvars < 1:
        raise ValueError("nvars must be >= 1")
    return JetTables(nvars, degree)


def jet_size(nvars: int, degree: int) -> int:
    return math.comb(nvars + degree, degree)


class Jet:
    """Immutable truncated Taylor expansion (possibly array-valued)."""

    __slots__ = ("coeffs", "nvars", "degree")
    __array_priority__ = 1000

    def __init__(self, coeffs, nvars: int, degree: int):
        coeffs = np.asarray(coeffs, dtype=float)
        t = tables(nvars, degree)
        if coeffs.ndim == 0 or coeffs.shape[-1] != t.size:
            raise MismatchedJets(
                f"coefficient axis has length {coeffs.shape[-1:]} but "
                f"C({nvars}+{degree},{degree}) = {t.size}"
            )
        coeffs.setflags(write=False)
        self.coeffs = coeffs
        self.nvars = nvars
        self.degree = degree

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, value, nvars: int, degree: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (jet_size(nvars, degree),))
        c[..., 0] = value
        return cls(c, nvars, degree)

    @classmethod
    def seed(cls, value: float, var: int, nvars: int, degree: int) -> "Jet":
        """The independent variable ``var`` expanded about ``value``."""
        c = np.zeros(jet_size(nvars, degree))
        c[0] = value
        if degree >= 1:
            c[1 + var] = 1.0
        return cls(c, nvars, degree)

    @classmethod
    def seeds(cls, values: Sequence[float], nvars: int, degree: int, offset: int = 0) -> "Jet":
        """Vector jet whose entries seed variables ``offset, offset+1, ...``."""
        return cls.stack(
            [cls.seed(v, offset + i, nvars, degree) for i, v in enumerate(values)]
        )

    @classmethod
    def stack(cls, jets: Sequence["Jet"], axis: int = 0) -> "Jet":
        first = jets[0]
        for j in jets[1:]:
            first._check(j)
        if axis < 0:
            axis += first.coeffs.ndim
        return cls(np.stack([j.coeffs for j in jets], axis=axis), first.nvars, first.degree)

    # -- array-like access ------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def value(self):
        """Constant term: the value at the base point."""
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.coeffs[key + (Ellipsis, slice(None))], self.nvars, self.degree)

    def __len__(self) -> int:
        return self.shape[0]

    def sum(self, axis=None) -> "Jet":
        nd = len(self.shape)
        if axis is None:
            axis = tuple(range(nd))
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(a + nd if a < 0 else a for a in axes)
        return Jet(self.coeffs.sum(axis=axes), self.nvars, self.degree)

    def transpose(self, *axes) -> "Jet":
        nd = len(self.shape)
        if not axes:
            axes = tuple(reversed(range(nd)))
        return Jet(self.coeffs.transpose(*axes, nd), self.nvars, self.degree)

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, degree={self.degree}, shape={self.shape})"

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "Jet"):
        if self.nvars != other.nvars or self.degree != other.degree:
            raise MismatchedJets(
                f"jets differ: ({self.nvars} vars, degree {self.degree}) vs "
                f"({other.nvars} vars, degree {other.degree})"
            )

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            self._check(other)
            return other
        return Jet.constant(other, self.nvars, self.degree)

    def _wrap(self, coeffs) -> "Jet":
        return Jet(coeffs, self.nvars, self.degree)

    def __add__(self, other):
        other = self._lift(other)
        return self._wrap(self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return self._wrap(self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return self._wrap(-self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return self._wrap(self.coeffs * other[..., None])
        self._check(other)
        t = tables(self.nvars, self.degree)
        prod = self.coeffs[..., t.mul_left] * other.coeffs[..., t.mul_right]
        return self._wrap(np.add.reduceat(prod, t.mul_starts, axis=-1))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if np.any(np.abs(other) < DIV_GUARD):
                raise DivisionByZeroJet("division by a zero constant")
            return self._wrap(self.coeffs / other[..., None])
        self._check(other)
        q = self * reciprocal(other)
        # exact quotient for the constant term rather than a0 * (1/b0)
        c = np.array(q.coeffs)
        c[..., 0] = self.coeffs[..., 0] / other.coeffs[..., 0]
        return self._wrap(c)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)):
            return int_power(self, int(n))
        return pow_const(self, float(n))

    # -- calculus -----------------------------------------------------------

    def derivative(self, var: int) -> "Jet":
        """Exact partial derivative in ``var``; the result has degree - 1."""
        if not 0 <= var < self.nvars:
            raise IndexError(f"variable {var} out of range for {self.nvars} vars")
        if self.degree == 0:
            raise OrderExceeded("cannot differentiate a degree-0 jet")
        src, fac = tables(self.nvars, self.degree).derivative_maps[var]
        return Jet(self.coeffs[..., src] * fac, self.nvars, self.degree - 1)

    def truncate(self, degree: int) -> "Jet":
        if degree > self.degree:
            raise OrderExceeded(f"cannot raise degree {self.degree} to {degree}")
        if degree == self.degree:
            return self
        return Jet(self.coeffs[..., : jet_size(self.nvars, degree)], self.nvars, degree)

    def derivative_value(self, alpha: Sequence[int]):
        return extract_derivative(self, alpha)


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    """Named-operation entry point; ``op`` is one of add, sub, mul, div."""
    if not isinstance(a, Jet) or not isinstance(b, Jet):
        raise TypeError("jet_arith expects two jets")
    a._check(b)
    try:
        fn = {"add": Jet.__add__, "sub": Jet.__sub__, "mul": Jet.__mul__, "div": Jet.__truediv__}[op]
    except KeyError:
        raise ValueError(f"unknown jet operation {op!r}") from None
    return fn(a, b)


def extract_derivative(a: Jet, alpha: Sequence[int]):
    """Raw partial derivative ``d^alpha f`` at the base point."""
    alpha = tuple(int(k) for k in alpha)
    if len(alpha) != a.nvars or min(alpha) < 0:
        raise ValueError(f"multi-index {alpha} does not match {a.nvars} variables")
    if sum(alpha) > a.degree:
        raise OrderExceeded(f"|alpha| = {sum(alpha)} exceeds jet degree {a.degree}")
    t = tables(a.nvars, a.degree)
    k = t.index[alpha]
    v = a.coeffs[..., k] * t.factorials[k]
    return float(v) if np.ndim(v) == 0 else v


# -- univariate composition -----------------------------------------------


def compose(a: Jet, coeffs: Sequence) -> Jet:
    """``f(a)`` given the Taylor coefficients ``f^(k)(a0)/k!`` of f at a0.

    Horner evaluation in the nilpotent part ``a - a0``; exact at the
    truncation degree.
    """
    c = np.array(a.coeffs)
    c[..., 0] = 0.0
    nil = Jet(c, a.nvars, a.degree)
    out = Jet.constant(coeffs[a.degree], a.nvars, a.degree)
    for k in range(a.degree - 1, -1, -1):
        out = out * nil + Jet.constant(coeffs[k], a.nvars, a.degree)
    return out


def _series_exp(a0, d):
    e = np.exp(a0)
    return [e / math.factorial(k) for k in range(d + 1)]


def _series_ln(a0, d):
    if np.any(a0 <= 0):
        raise DomainError("ln requires a positive argument")
    return [np.log(a0)] + [(-1.0) ** (k + 1) / (k * a0**k) for k in range(1, d + 1)]


def _series_pow(a0, d, p):
    is_int = float(p).is_integer()
    if not is_int and np.any(a0 <= 0):
        raise DomainError(f"power {p} requires a positive argument")
    if is_int and p < 0 and np.any(a0 == 0):
        raise DomainError(f"power {p} is singular at zero")
    out = []
    binom = 1.0
    for k in range(d + 1):
        if is_int and p >= 0 and k > p:
            out.append(np.zeros_like(a0))
        else:
            out.append(binom * np.power(a0, p - k))
        binom *= (p - k) / (k + 1)
    return out


def _series_sqrt(a0, d):
    if np.any(a0 <= 0):
        raise DomainError("sqrt requires a positive argument")
    r = np.sqrt(a0)
    out = [r]
    binom = 0.5
    for k in range(1, d + 1):
        out.append(binom * r / a0**k)
        binom *= (0.5 - k) / (k + 1)
    return out


def _series_sin(a0, d):
    s, c = np.sin(a0), np.cos(a0)
    cycle = [s, c, -s, -c]
    return [cycle[k % 4] / math.factorial(k) for k in range(d + 1)]


def _series_cos(a0, d):
    s, c = np.sin(a0), np.cos(a0)
    cycle = [c, -s, -c, s]
    return [cycle[k % 4] / math.factorial(k) for k in range(d + 1)]


def _series_arctan(a0, d):
    # arctan' = 1/q with q(t) = (1 + a0^2) + 2 a0 t + t^2; integrate the
    # reciprocal series term by term
    q0, q1 = 1.0 + a0 * a0, 2.0 * a0
    w = [1.0 / q0]
    for m in range(1, d):
        prev2 = w[m - 2] if m >= 2 else 0.0
        w.append(-(q1 * w[m - 1] + prev2) / q0)
    return [np.arctan(a0)] + [w[k - 1] / k for k in range(1, d + 1)]


def _series_recip(a0, d):
    if np.any(np.abs(a0) < DIV_GUARD):
        raise DivisionByZeroJet("division by a jet with zero constant term")
    return [(-1.0) ** k / a0 ** (k + 1) for k in range(d + 1)]


def _elementary(series: Callable) -> Callable[[Jet], Jet]:
    def apply(a: Jet) -> Jet:
        return compose(a, series(a.coeffs[..., 0], a.degree))

    apply.__name__ = series.__name__.replace("_series_", "")
    return apply


exp = _elementary(_series_exp)
ln = _elementary(_series_ln)
sqrt = _elementary(_series_sqrt)
sin = _elementary(_series_sin)
cos = _elementary(_series_cos)
arctan = _elementary(_series_arctan)
reciprocal = _elementary(_series_recip)


def pow_const(a: Jet, p: float) -> Jet:
    return compose(a, _series_pow(a.coeffs[..., 0], a.degree, float(p)))


def int_power(a: Jet, n: int) -> Jet:
    """Integer power by repeated squaring; negative powers go through 1/a."""
    if n < 0:
        return reciprocal(int_power(a, -n))
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return result if result is not None else Jet.constant(np.ones(a.shape), a.nvars, a.degree)


ELEMENTARY = {
    "sqrt": sqrt,
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "ln": ln,
    "arctan": arctan,
}


def jet_elementary(a: Jet, fn: str, p: float | None = None) -> Jet:
    if fn == "pow_const":
        if p is None:
            raise ValueError("pow_const needs an exponent")
        return pow_const(a, p)
    try:
        return ELEMENTARY[fn](a)
    except KeyError:
        raise ValueError(f"unknown elementary function {fn!r}") from None


# -- jet tensor algebra -----------------------------------------------------


def einsum(subscripts: str, a, b) -> Jet:
    """Two-operand einsum where either operand may be a jet.

    ``einsum("il,ljk->ijk", ginv, dg)`` multiplies entries as jets and sums
    the contracted index. Plain numpy operands act as constants.
    """
    lhs, out = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    free = next(c for c in string.ascii_letters if c not in subscripts)
    if isinstance(a, Jet) and isinstance(b, Jet):
        a._check(b)
        t = tables(a.nvars, a.degree)
        prod = np.einsum(
            f"{sa}{free},{sb}{free}->{out}{free}",
            a.coeffs[..., t.mul_left],
            b.coeffs[..., t.mul_right],
        )
        return Jet(np.add.reduceat(prod, t.mul_starts, axis=-1), a.nvars, a.degree)
    if isinstance(a, Jet):
        return Jet(np.einsum(f"{sa}{free},{sb}->{out}{free}", a.coeffs, np.asarray(b, float)), a.nvars, a.degree)
    if isinstance(b, Jet):
        return Jet(np.einsum(f"{sa},{sb}{free}->{out}{free}", np.asarray(a, float), b.coeffs), b.nvars, b.degree)
    raise TypeError("einsum needs at least one jet operand")


def inverse(m: Jet, singular=np.linalg.LinAlgError) -> Jet:
    """Inverse of a square jet matrix.

    With ``M = M0 + E`` and ``E`` nilpotent, ``M^-1 = sum_k (-M0^-1 E)^k M0^-1``
    terminates at the truncation degree.
    """
    n = m.shape[-1]
    m0 = m.coeffs[..., 0]
    try:
        m0inv = np.linalg.inv(m0)
    except np.linalg.LinAlgError as exc:
        if singular is np.linalg.LinAlgError:
            raise
        raise singular(str(exc)) from None
    c = np.array(m.coeffs)
    c[..., 0] = 0.0
    nil = einsum("ij,jk->ik", -m0inv, Jet(c, m.nvars, m.degree))
    ident = Jet.constant(np.eye(n), m.nvars, m.degree)
    acc = ident
    for _ in range(m.degree):
        acc = ident + einsum("ij,jk->ik", nil, acc)
    return einsum("ij,jk->ik", acc, m0inv)


# -- finite-difference oracle -------------------------------------------------

_STENCILS = {
    0: ((0, 1.0),),
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
}


def fd_oracle(
    f: Callable[[np.ndarray], float],
    x,
    alpha: Sequence[int],
    step: float | None = None,
    richardson: bool = False,
) -> float:
    """Central finite-difference estimate of ``d^alpha f`` at ``x``.

    Tensor product of per-axis central stencils. The default step is
    ``eps**(1/(|alpha|+2)) * (max|x| + 1)``. With ``richardson`` the
    estimates at ``h`` and ``h/2`` are combined to cancel the ``h^2`` error.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != x.size:
        raise ValueError("alpha must have one entry per coordinate")
    order = sum(alpha)
    if order > 3:
        raise OrderExceeded("fd_oracle supports |alpha| <= 3")
    if step is None:
        step = np.finfo(float).eps ** (1.0 / (order + 2)) * (np.max(np.abs(x)) + 1.0)
    if richardson and order > 0:
        coarse = fd_oracle(f, x, alpha, step)
        fine = fd_oracle(f, x, alpha, step / 2)
        return (4.0 * fine - coarse) / 3.0
    total = 0.0
    for combo in itertools.product(*(_STENCILS[a] for a in alpha)):
        offset = np.array([s for s, _ in combo], dtype=float)
        weight = math.prod(w for _, w in combo)
        total += weight * f(x + step * offset)
    return total / step**order
