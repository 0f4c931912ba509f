"""Closed-form flag curvature of ``F = |y| + f_{x^i} y^i``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import exprdsl, jets
from .curvature import scalar_curvature_check
from .errors import OutsideDomain, ZeroDirection
from .exprdsl import Expr
from .finsler_core import DOMAIN_MARGIN, ZERO_DIRECTION, MetricSpec
from .jets import Jet


@dataclass(frozen=True)
class NumataData:
    n: int
    f: Expr

    @classmethod
    def from_string(cls, f: str, n: int) -> "NumataData":
        return cls(n, exprdsl.parse(f, n))

    @classmethod
    def from_spec(cls, spec: MetricSpec) -> "NumataData":
        if spec.f is None:
            raise ValueError(f"{spec.family} metric has no potential f")
        return cls(spec.dim, spec.f)

    def spec(self) -> MetricSpec:
        return MetricSpec(self.n, "numata", f=self.f)

    def derivatives(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gradient, Hessian and third-derivative array of f at ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = self.n
        fj = exprdsl.eval_jet(self.f, [Jet.seed(v, i, n, 3) for i, v in enumerate(x)])
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        third = np.zeros((n, n, n))
        for i in range(n):
            grad[i] = jets.extract_derivative(fj, _alpha(n, i))
            for j in range(n):
                hess[i, j] = jets.extract_derivative(fj, _alpha(n, i, j))
                for k in range(n):
                    third[i, j, k] = jets.extract_derivative(fj, _alpha(n, i, j, k))
        return grad, hess, third

    def in_domain(self, x) -> bool:
        grad, _, _ = self.derivatives(x)
        return float(grad @ grad) <= 1.0 - DOMAIN_MARGIN


def _alpha(n, *idx):
    a = [0] * n
    for i in idx:
        a[i] += 1
    return a


def numata_K(data: NumataData, x, y) -> float:
    """Flag curvature from the potential's second and third derivatives.

    ``K = 3/4 (f_ij y^i y^j)^2 / F^4 - 1/2 f_ijk y^i y^j y^k / F^3``,
    evaluated term by term as written. Valid for every n >= 1.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.linalg.norm(y) <= ZERO_DIRECTION * (1.0 + np.linalg.norm(x)):
        raise ZeroDirection("y must be nonzero")
    grad, hess, third = data.derivatives(x)
    if float(grad @ grad) > 1.0 - DOMAIN_MARGIN:
        raise OutsideDomain(f"sum f_i^2 = {float(grad @ grad):.6g} is not < 1")
    F = np.sqrt(np.sum(y * y)) + grad @ y
    quad = np.einsum("ij,i,j->", hess, y, y)
    cubic = np.einsum("ijk,i,j,k->", third, y, y, y)
    return float(3.0 / 4.0 * (1.0 / F**4) * quad**2 - 1.0 / 2.0 * (1.0 / F**3) * cubic)


def verify_scalar_flag(data: NumataData, x, y, samples: int = 16, seed: int = 0) -> dict:
    """Compare the curvature pipeline's fitted K with the closed form."""
    report = scalar_curvature_check(data.spec(), x, y, samples=samples, seed=seed)
    closed = numata_K(data, x, y)
    report["K_closed_form"] = closed
    report["difference"] = abs(report["K_fit"] - closed)
    return report
