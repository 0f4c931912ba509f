"""Geodesic spray, nonlinear connection and Chern connection.

Everything is computed from one jet of ``E = F^2/2`` seeded over all ``2n``
variables ``(x, y)``. Variables ``0..n-1`` are ``x``, ``n..2n-1`` are ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from . import jets
from .errors import ConnectionConsistency, SingularMetric
from .finsler_core import MetricSpec, _as_point, check_posdef, eval_energy
from .jets import Jet

SYMMETRY_TOL = 1e-10
SPRAY_TOL = 1e-8
COMPAT_TOL = 1e-8


def _jet_symmetrize(t: Jet) -> Jet:
    return 0.5 * (t + t.transpose())


def chern_jets(spec: MetricSpec, x, y, degree: int) -> SimpleNamespace:
    """Jet-valued g, G, N and Gamma at ``(x, y)``.

    With total degree ``d`` the outputs carry degrees: g, ginv, G -> d-2;
    N, delta g, Gamma -> d-3. ``d = 3`` yields pointwise values, ``d = 4``
    additionally the first derivatives of Gamma needed for curvature.
    """
    if degree < 3:
        raise ValueError("the Chern connection needs jets of degree >= 3")
    x, y = _as_point(spec, x, y)
    n = spec.dim
    nv = 2 * n
    xj = [Jet.seed(v, i, nv, degree) for i, v in enumerate(x)]
    yj = [Jet.seed(v, n + i, nv, degree) for i, v in enumerate(y)]
    E = eval_energy(spec, xj, yj)
    F2 = 2.0 * E

    dy = lambda t, i: t.derivative(n + i)  # noqa: E731
    dE = [dy(E, i) for i in range(n)]
    g = _jet_symmetrize(Jet.stack([Jet.stack([dy(dE[i], j) for j in range(n)]) for i in range(n)]))
    check_posdef(g.value)
    ginv = jets.inverse(g, singular=SingularMetric)

    # G^i = 1/4 g^il ((F^2)_{x^k y^l} y^k - (F^2)_{x^l})
    d2 = degree - 2
    y_low = Jet.stack([t.truncate(d2) for t in yj])
    Fy = [dy(F2, l) for l in range(n)]
    mixed = Jet.stack([Jet.stack([Fy[l].derivative(k) for k in range(n)]) for l in range(n)])
    A = jets.einsum("lk,k->l", mixed, y_low)
    B = Jet.stack([F2.derivative(l).truncate(d2) for l in range(n)])
    G = 0.25 * jets.einsum("il,l->i", ginv, A - B)

    # N^i_j = dG^i/dy^j
    N = Jet.stack([dy(G, j) for j in range(n)], axis=-1)

    # delta_k g_ij = d_{x^k} g_ij - N^m_k d_{y^m} g_ij
    dxg = Jet.stack([g.derivative(k) for k in range(n)], axis=-1)
    dyg = Jet.stack([dy(g, m) for m in range(n)], axis=-1)
    dg = dxg - jets.einsum("mk,ijm->ijk", N, dyg)

    # Gamma^i_jk = 1/2 g^il (delta_k g_lj + delta_j g_lk - delta_l g_jk)
    low = dg + dg.transpose(0, 2, 1) - dg.transpose(2, 0, 1)
    Gamma = 0.5 * jets.einsum("il,ljk->ijk", ginv.truncate(degree - 3), low)
    return SimpleNamespace(
        x=x, y=y, n=n, E=E, g=g, ginv=ginv, G=G, N=N, dyg=dyg, dxg=dxg, delta_g=dg, Gamma=Gamma
    )


@dataclass(frozen=True)
class ConnectionFrame:
    x: np.ndarray
    y: np.ndarray
    G: np.ndarray
    N: np.ndarray  # N[i, j] = N^i_j
    Gamma: np.ndarray  # Gamma[i, j, k] = Gamma^i_jk
    g: np.ndarray
    residuals: dict


def spray(spec: MetricSpec, x, y) -> np.ndarray:
    """Geodesic spray coefficients ``G^i`` (degree-2 jets over (x, y))."""
    x, y = _as_point(spec, x, y)
    n = spec.dim
    nv = 2 * n
    xj = [Jet.seed(v, i, nv, 2) for i, v in enumerate(x)]
    yj = [Jet.seed(v, n + i, nv, 2) for i, v in enumerate(y)]
    E = eval_energy(spec, xj, yj)

    def d2(i, j):
        alpha = [0] * nv
        alpha[i] += 1
        alpha[j] += 1
        return jets.extract_derivative(E, alpha)

    def d1(i):
        alpha = [0] * nv
        alpha[i] = 1
        return jets.extract_derivative(E, alpha)

    g = np.array([[d2(n + i, n + j) for j in range(n)] for i in range(n)])
    check_posdef(g)
    # F^2 = 2E
    mixed = np.array([[2.0 * d2(k, n + l) for k in range(n)] for l in range(n)])
    rhs = mixed @ y - np.array([2.0 * d1(l) for l in range(n)])
    return 0.25 * np.linalg.solve(g, rhs)


def _compat_residual(g, dxg, dyg, Gamma, N, dx, dy) -> float:
    lhs = np.einsum("ijm,m->ij", dxg, dx) + np.einsum("ijm,m->ij", dyg, dy)
    omega = np.einsum("kim,m->ki", Gamma, dx)  # omega^k_i
    lhs -= np.einsum("ki,jk->ij", omega, g) + np.einsum("kj,ik->ij", omega, g)
    delta_y = dy + N @ dx
    C = 0.5 * dyg
    rhs = 2.0 * np.einsum("ijk,k->ij", C, delta_y)
    return float(np.max(np.abs(lhs - rhs)))


def check_compatibility(spec: MetricSpec, x, y, dx, dy) -> float:
    """Max-abs defect of ``dg_ij - w^k_i g_jk - w^k_j g_ik = 2 C_ijk dy^k``
    on the tangent vector ``(dx, dy)``, with ``dy^k = dy^k + N^k_j dx^j``.
    """
    J = chern_jets(spec, x, y, 3)
    return _compat_residual(
        J.g.value,
        J.dxg.value,
        J.dyg.value,
        J.Gamma.value,
        J.N.value,
        np.asarray(dx, float),
        np.asarray(dy, float),
    )


def _frame_from_jets(J, check: bool = True) -> ConnectionFrame:
    n = J.n
    Gamma = J.Gamma.value
    N = J.N.value
    G = J.G.value
    g = J.g.value
    dxg, dyg = J.dxg.value, J.dyg.value
    scale = 1.0 + float(np.max(np.abs(Gamma)))
    basis = np.eye(n)
    zero = np.zeros(n)
    compat = max(
        max(_compat_residual(g, dxg, dyg, Gamma, N, e, zero) for e in basis),
        max(_compat_residual(g, dxg, dyg, Gamma, N, zero, e) for e in basis),
    )
    residuals = {
        "gamma_symmetry": float(np.max(np.abs(Gamma - Gamma.transpose(0, 2, 1)))),
        "N_vs_Gamma_y": float(np.max(np.abs(N - np.einsum("ijk,k->ij", Gamma, J.y)))),
        "N_y_vs_2G": float(np.max(np.abs(N @ J.y - 2.0 * G))),
        "compatibility": compat,
    }
    if check:
        if residuals["gamma_symmetry"] > SYMMETRY_TOL * scale:
            raise ConnectionConsistency("Chern connection not symmetric", residuals["gamma_symmetry"])
        if residuals["N_vs_Gamma_y"] > SPRAY_TOL * scale:
            raise ConnectionConsistency("N^i_j != Gamma^i_jk y^k", residuals["N_vs_Gamma_y"])
        if residuals["compatibility"] > COMPAT_TOL * scale:
            raise ConnectionConsistency("almost metric-compatibility fails", residuals["compatibility"])
    return ConnectionFrame(x=J.x, y=J.y, G=G, N=N, Gamma=Gamma, g=g, residuals=residuals)


def chern_gamma(spec: MetricSpec, x, y, check: bool = True) -> ConnectionFrame:
    """Chern connection at ``(x, y)`` with its defining identities verified."""
    return _frame_from_jets(chern_jets(spec, x, y, 3), check=check)
