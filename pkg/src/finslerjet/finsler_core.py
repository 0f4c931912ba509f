"""Metric declarations and the pointwise Finsler tensors.

Families:

* ``riemannian``: ``F = sqrt(a_ij(x) y^i y^j)``
* ``randers``:    ``F = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i``
* ``numata``:     ``F = |y| + f_{x^i}(x) y^i`` (Euclidean ``a``, exact ``b = df``)
* ``numata1d``:   ``F = (f'(x) +- 1) y`` on one half-line of directions
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import exprdsl, jets
from .errors import (
    ConeMismatch,
    FinslerError,
    NotPositiveDefinite,
    OutsideDomain,
    ZeroDirection,
)
from .exprdsl import Expr
from .jets import Jet

FAMILIES = ("riemannian", "randers", "numata", "numata1d")

# Numata domain is sum f_i^2 <= 1 - margin, kept away from the boundary
DOMAIN_MARGIN = 1e-9
ZERO_DIRECTION = 1e-12


class SpecError(FinslerError, ValueError):
    code = "E_SPEC"


def _parse_entry(src, dim: int) -> Expr:
    if isinstance(src, (int, float)):
        return exprdsl.const(float(src))
    return exprdsl.parse(str(src), dim)


@dataclass(frozen=True)
class MetricSpec:
    """Declarative Finsler metric; build with the family classmethods."""

    dim: int
    family: str
    a: tuple[tuple[Expr, ...], ...] | None = None
    b: tuple[Expr, ...] | None = None
    f: Expr | None = None
    cone: int = 1
    grad_f: tuple[Expr, ...] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.dim < 1:
            raise SpecError("dimension must be >= 1")
        if self.family == "numata1d" and self.dim != 1:
            raise SpecError("numata1d is one-dimensional")
        if self.family in ("riemannian", "randers"):
            if self.a is None or len(self.a) != self.dim or any(len(r) != self.dim for r in self.a):
                raise SpecError(f"a must be a {self.dim}x{self.dim} array")
            for i in range(self.dim):
                for j in range(i):
                    if self.a[i][j] != self.a[j][i]:
                        raise SpecError(f"a is not symmetric at ({i + 1},{j + 1})")
        if self.family == "randers" and (self.b is None or len(self.b) != self.dim):
            raise SpecError(f"b must have {self.dim} entries")
        if self.family in ("numata", "numata1d"):
            if self.f is None:
                raise SpecError("numata families need f")
            if self.cone not in (1, -1):
                raise SpecError("cone must be +1 or -1")
            object.__setattr__(self, "grad_f", exprdsl.gradient(self.f, self.dim))
        exprs = [e for row in (self.a or ()) for e in row] + list(self.b or ()) + [self.f] * (self.f is not None)
        for e in exprs:
            if exprdsl.max_variable(e) > self.dim:
                raise SpecError(f"coefficient uses a variable beyond dimension {self.dim}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def riemannian(cls, a: Sequence[Sequence], dim: int | None = None) -> "MetricSpec":
        dim = dim or len(a)
        return cls(dim, "riemannian", a=tuple(tuple(_parse_entry(s, dim) for s in row) for row in a))

    @classmethod
    def randers(cls, a: Sequence[Sequence] | None, b: Sequence, dim: int | None = None) -> "MetricSpec":
        dim = dim or len(b)
        if a is None:
            a = euclidean(dim)
        return cls(
            dim,
            "randers",
            a=tuple(tuple(_parse_entry(s, dim) for s in row) for row in a),
            b=tuple(_parse_entry(s, dim) for s in b),
        )

    @classmethod
    def numata(cls, f: str, dim: int) -> "MetricSpec":
        return cls(dim, "numata", f=_parse_entry(f, dim))

    @classmethod
    def numata1d(cls, f: str, cone: int | str = 1) -> "MetricSpec":
        return cls(1, "numata1d", f=_parse_entry(f, 1), cone=_cone(cone))

    def describe(self) -> dict:
        """Plain-data summary (expression strings) for reports."""
        out = {"family": self.family, "dim": self.dim}
        if self.a is not None:
            out["a"] = [[exprdsl.to_string(e) for e in row] for row in self.a]
        if self.b is not None:
            out["b"] = [exprdsl.to_string(e) for e in self.b]
        if self.f is not None:
            out["f"] = exprdsl.to_string(self.f)
        if self.family == "numata1d":
            out["cone"] = "+" if self.cone > 0 else "-"
        return out


def euclidean(dim: int) -> list[list[str]]:
    return [["1" if i == j else "0" for j in range(dim)] for i in range(dim)]


def _cone(c) -> int:
    if c in ("+", 1, "+1"):
        return 1
    if c in ("-", -1, "-1"):
        return -1
    raise SpecError(f"cone must be '+' or '-', got {c!r}")


# -- evaluation -----------------------------------------------------------------


def _check_direction(x_vals, y_vals):
    if np.linalg.norm(y_vals) <= ZERO_DIRECTION * (1.0 + np.linalg.norm(x_vals)):
        raise ZeroDirection("F is only defined on the slit tangent bundle (y != 0)")


def _quadratic(a: Jet, y: Sequence[Jet]) -> Jet:
    n = len(y)
    total = None
    for i in range(n):
        for j in range(n):
            term = a[i, j] * y[i] * y[j]
            total = term if total is None else total + term
    return total


def _matrix(rows, x: Sequence[Jet]) -> Jet:
    return Jet.stack([Jet.stack([exprdsl.eval_jet(e, x) for e in row]) for row in rows])


def eval_F(spec: MetricSpec, x: Sequence[Jet], y: Sequence[Jet]) -> Jet:
    """Jet of ``F(x, y)``; ``x`` and ``y`` are jets in a common space."""
    x_vals = np.array([j.value for j in x])
    y_vals = np.array([j.value for j in y])
    _check_direction(x_vals, y_vals)
    fam = spec.family
    if fam in ("riemannian", "randers"):
        a = _matrix(spec.a, x)
        F = jets.sqrt(_quadratic(a, y))
        if fam == "riemannian":
            return F
        b = Jet.stack([exprdsl.eval_jet(e, x) for e in spec.b])
        b0, a0 = b.value, a.value
        norm2 = float(b0 @ np.linalg.solve(a0, b0))
        if norm2 >= 1.0:
            raise OutsideDomain(f"Randers condition a^ij b_i b_j < 1 violated: {norm2:.6g}")
        by = b[0] * y[0]
        for i in range(1, spec.dim):
            by = by + b[i] * y[i]
        return F + by
    grad = [exprdsl.eval_jet(e, x) for e in spec.grad_f]
    norm2 = float(sum(g.value**2 for g in grad))
    if norm2 > 1.0 - DOMAIN_MARGIN:
        raise OutsideDomain(f"Numata domain sum f_i^2 < 1 violated: {norm2:.6g}")
    if fam == "numata1d":
        if np.sign(y_vals[0]) != spec.cone:
            raise ConeMismatch(f"direction {y_vals[0]:g} is not in the {'+' if spec.cone > 0 else '-'} cone")
        return (grad[0] + float(spec.cone)) * y[0]
    norm = jets.sqrt(sum((yi * yi for yi in y[1:]), y[0] * y[0]))
    by = grad[0] * y[0]
    for i in range(1, spec.dim):
        by = by + grad[i] * y[i]
    return norm + by


def eval_energy(spec: MetricSpec, x: Sequence[Jet], y: Sequence[Jet]) -> Jet:
    """``E = F^2 / 2``; Riemannian metrics skip the square root."""
    if spec.family == "riemannian":
        _check_direction(np.array([j.value for j in x]), np.array([j.value for j in y]))
        return 0.5 * _quadratic(_matrix(spec.a, x), y)
    F = eval_F(spec, x, y)
    return 0.5 * F * F


def F_value(spec: MetricSpec, x, y) -> float:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = spec.dim
    xj = [Jet.constant(v, 1, 0) for v in x]
    yj = [Jet.constant(v, 1, 0) for v in y]
    if len(x) != n or len(y) != n:
        raise SpecError(f"point and direction must have {n} components")
    return eval_F(spec, xj, yj).value


def check_posdef(g: np.ndarray) -> None:
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(f"fundamental tensor is not positive definite: eigenvalues {np.linalg.eigvalsh(g)}") from None


def symmetrize(t: np.ndarray) -> np.ndarray:
    """Average over all permutations of the (2 or 3) indices."""
    if t.ndim == 2:
        return 0.5 * (t + t.T)
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    return sum(t.transpose(p) for p in perms) / 6.0


# -- tensor frame -----------------------------------------------------------------


@dataclass(frozen=True)
class TensorFrame:
    x: np.ndarray
    y: np.ndarray
    F: float
    g: np.ndarray
    ell: np.ndarray
    ell_lower: np.ndarray
    h: np.ndarray
    C: np.ndarray

    def residuals(self) -> dict:
        """Sizes of the identities every frame should satisfy."""
        return {
            "g_ell_ell": abs(self.ell @ self.g @ self.ell - 1.0),
            "C_dot_y": float(np.max(np.abs(self.C @ self.y))),
            "h_dot_ell": float(np.max(np.abs(self.h @ self.ell))),
            "g_asym": float(np.max(np.abs(self.g - self.g.T))),
        }

    def h_rank(self, tol: float = 1e-9) -> int:
        w = np.linalg.eigvalsh(self.h)
        return int(np.sum(np.abs(w) > tol * max(1.0, np.max(np.abs(w)))))


def _as_point(spec: MetricSpec, x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != (spec.dim,) or y.shape != (spec.dim,):
        raise SpecError(f"point and direction must have {spec.dim} components")
    return x, y


def tensor_frame(spec: MetricSpec, x, y) -> TensorFrame:
    """Evaluate F, g, l, l_lower, h and the Cartan tensor at ``(x, y)``.

    Only ``y`` is seeded (degree 3), ``x`` enters as constants.
    """
    x, y = _as_point(spec, x, y)
    n = spec.dim
    xj = [Jet.constant(v, n, 3) for v in x]
    yj = [Jet.seed(v, i, n, 3) for i, v in enumerate(y)]
    F = eval_F(spec, xj, yj)
    E = 0.5 * F * F
    dE = [E.derivative(i) for i in range(n)]
    g_jet = Jet.stack([Jet.stack([dE[i].derivative(j) for j in range(n)]) for i in range(n)])
    g = symmetrize(g_jet.value)
    check_posdef(g)
    C = 0.5 * np.stack([g_jet.derivative(k).value for k in range(n)], axis=-1)
    C = symmetrize(C) if n > 1 else C
    Fv = F.value
    ell = y / Fv
    ell_lower = g @ ell
    h = g - np.outer(ell_lower, ell_lower)
    return TensorFrame(x=x, y=y, F=Fv, g=g, ell=ell, ell_lower=ell_lower, h=h, C=C)


def fundamental_tensor(spec: MetricSpec, x, y) -> np.ndarray:
    """Just g, from degree-2 jets in y."""
    x, y = _as_point(spec, x, y)
    n = spec.dim
    xj = [Jet.constant(v, n, 2) for v in x]
    yj = [Jet.seed(v, i, n, 2) for i, v in enumerate(y)]
    E = eval_energy(spec, xj, yj)
    g = np.array([[jets.extract_derivative(E, _unit2(n, i, j)) for j in range(n)] for i in range(n)])
    return symmetrize(g)


def _unit2(n, i, j):
    a = [0] * n
    a[i] += 1
    a[j] += 1
    return a


def check_homogeneity(spec: MetricSpec, x, y, lam: float) -> dict:
    """Residuals of ``F(x, l y) = l F(x, y)`` and ``g(x, l y) = g(x, y)``."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    x, y = _as_point(spec, x, y)
    F1 = F_value(spec, x, y)
    F2 = F_value(spec, x, lam * y)
    g1 = fundamental_tensor(spec, x, y)
    g2 = fundamental_tensor(spec, x, lam * y)
    return {
        "lambda": lam,
        "F_residual": abs(F2 - lam * F1),
        "g_residual": float(np.max(np.abs(g2 - g1))),
    }
