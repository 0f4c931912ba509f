"""One-dimensional Numata metrics, circle maps and the Schwarzian derivative.

On a half-line of directions ``F = (f'(x) +- 1) y = phi'(x) y``; the closed
form flag curvature then reduces to ``K = -S(phi) / (2 phi'^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import exprdsl, jets
from .errors import BadDeterminant, CriticalPoint, DomainError, OutsideDomain, PoleInDomain
from .exprdsl import BinOp, Call, Expr, Var, const
from .jets import Jet
from .numata import NumataData, numata_K

CRITICAL = 1e-12
DET_TOL = 1e-12


def _expr(e) -> Expr:
    return exprdsl.parse(e, 1) if isinstance(e, str) else e


@dataclass(frozen=True)
class CircleMap:
    """A map ``phi`` on an interval chart of the circle."""

    phi: Expr
    orientation: int = 1
    domain: tuple[float, float] | None = None

    @classmethod
    def from_string(cls, phi: str, orientation: int = 1, domain=None) -> "CircleMap":
        return cls(exprdsl.parse(phi, 1), orientation, None if domain is None else tuple(domain))

    def derivatives(self, x: float) -> np.ndarray:
        """``(phi, phi', phi'', phi''')`` at ``x``."""
        pj = exprdsl.eval_jet(self.phi, [Jet.seed(float(x), 0, 1, 3)])
        return pj.coeffs * np.array([1.0, 1.0, 2.0, 6.0])

    def __call__(self, x: float) -> float:
        return exprdsl.eval_float(self.phi, [x])

    def derivative(self, x: float) -> float:
        return float(self.derivatives(x)[1])

    def check_domain(self, points: Sequence[float]) -> list[float]:
        """Points where ``0 < orientation * phi' < 2`` fails."""
        bad = []
        for p in points:
            d = self.orientation * self.derivative(p)
            if not 0.0 < d < 2.0:
                bad.append(float(p))
        return bad


def phi_from_f(f, sign: int | str = 1, domain=None, samples: int = 65) -> CircleMap:
    """``phi = f + sign * x`` so that ``phi' = f' + sign`` and ``phi(0) = f(0)``."""
    f = _expr(f)
    s = 1 if sign in (1, "+", "+1") else -1 if sign in (-1, "-", "-1") else None
    if s is None:
        raise ValueError(f"sign must be + or -, got {sign!r}")
    phi = CircleMap(BinOp("+" if s > 0 else "-", f, Var(1)), s, None if domain is None else tuple(domain))
    if domain is not None:
        lo, hi = domain
        fmap = CircleMap(f)
        for p in np.linspace(lo, hi, samples):
            if abs(fmap.derivative(p)) >= 1.0:
                raise OutsideDomain(f"|f'({p:g})| >= 1")
    return phi


def schwarzian(m: CircleMap, x: float) -> float:
    """``S(phi) = phi'''/phi' - 3/2 (phi''/phi')^2`` from a degree-3 jet."""
    _, d1, d2, d3 = m.derivatives(x)
    if abs(d1) < CRITICAL:
        raise CriticalPoint(f"phi'({x:g}) = {d1:g}")
    return float(d3 / d1 - 1.5 * (d2 / d1) ** 2)


def metric_coefficient(m: CircleMap, x: float) -> float:
    """Coefficient of the induced Riemannian metric ``phi'(x)^2 dx^2``."""
    return m.derivative(x) ** 2


def one_dim_K(m: CircleMap, x: float) -> float:
    """``K = -S(phi) / (2 phi'^2)``."""
    _, d1, d2, d3 = m.derivatives(x)
    if abs(d1) < CRITICAL:
        raise CriticalPoint(f"phi'({x:g}) = {d1:g}")
    S = d3 / d1 - 1.5 * (d2 / d1) ** 2
    return float(-0.5 * (1.0 / d1**2) * S)


def mobius(a: float, b: float, c: float, d: float) -> CircleMap:
    num = BinOp("+", BinOp("*", const(a), Var(1)), const(b))
    den = BinOp("+", BinOp("*", const(c), Var(1)), const(d))
    return CircleMap(BinOp("/", num, den), 1 if a * d - b * c > 0 else -1)


def constant_K_map(K: float, a: float, b: float, c: float, d: float, domain=None) -> CircleMap:
    """``phi(x) = K^-1/2 arctan(K^1/2 (a x + b) / (c x + d))`` with ``ad - bc = +-1``."""
    if not K > 0:
        raise DomainError("constant-curvature family is only available for K > 0")
    det = a * d - b * c
    if abs(abs(det) - 1.0) > DET_TOL:
        raise BadDeterminant(f"ad - bc = {det:g}, expected +-1")
    if domain is not None:
        lo, hi = domain
        if c != 0.0 and lo <= -d / c <= hi:
            raise PoleInDomain(f"cx + d vanishes at x = {-d / c:g}")
        if c == 0.0 and d == 0.0:
            raise PoleInDomain("cx + d vanishes identically")
    rk = float(np.sqrt(K))
    inner = BinOp("*", const(rk), mobius(a, b, c, d).phi)
    phi = BinOp("*", const(1.0 / rk), Call("arctan", inner))
    return CircleMap(phi, 1 if det > 0 else -1, None if domain is None else tuple(domain))


def admissible_interval(m: CircleMap, lo: float, hi: float, count: int = 201):
    """Longest grid run inside ``[lo, hi]`` where ``0 < orientation*phi' < 2``.

    Returns ``(start, stop)`` or ``None``.
    """
    xs = np.linspace(lo, hi, count)
    ok = []
    for p in xs:
        try:
            d = m.orientation * m.derivative(p)
        except (ZeroDivisionError, ValueError):
            ok.append(False)
            continue
        ok.append(0.0 < d < 2.0)
    best, start = None, None
    for i, flag in enumerate(ok + [False]):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if best is None or i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    if best is None:
        return None
    return float(xs[best[0]]), float(xs[best[1] - 1])


def compose_maps(phi: CircleMap, psi: CircleMap) -> CircleMap:
    return CircleMap(exprdsl.substitute(phi.phi, psi.phi), phi.orientation * psi.orientation)


def cocycle_check(phi: CircleMap, psi: CircleMap, x: float) -> float:
    """``|S(phi o psi) - S(phi)(psi) psi'^2 - S(psi)|`` at ``x``."""
    comp = compose_maps(phi, psi)
    px, dpsi = psi.derivatives(x)[:2]
    return abs(schwarzian(comp, x) - schwarzian(phi, float(px)) * dpsi**2 - schwarzian(psi, x))


def theorem_bridge(f, x: float, y_samples: Sequence[float]) -> dict:
    """Closed-form Numata curvature at n = 1 versus ``-S(phi)/(2 phi'^2)``.

    The + cone uses ``y > 0`` and ``phi = f + x``; the - cone uses ``-y`` and
    the orientation-reversing ``phi = f - x``.
    """
    f = _expr(f)
    data = NumataData(1, f)
    out = {"x": float(x)}
    for name, sign in (("plus", 1), ("minus", -1)):
        ys = [sign * abs(float(v)) for v in y_samples]
        vals = np.array([numata_K(data, [x], [yv]) for yv in ys])
        K_s = one_dim_K(phi_from_f(f, sign), x)
        out[name] = {
            "K_closed_form": vals.tolist(),
            "K_schwarzian": K_s,
            "y_spread": float(vals.max() - vals.min()),
            "route_difference": float(np.max(np.abs(vals - K_s))),
        }
    out["max_deviation"] = max(
        max(out[c]["y_spread"], out[c]["route_difference"]) for c in ("plus", "minus")
    )
    return out
