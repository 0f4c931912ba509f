"""hh-part of the Chern curvature and flag curvature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import chern_jets
from .errors import DegenerateFlag, OneDimensional
from .finsler_core import MetricSpec

FLAG_DENOM_MIN = 1e-10
SAMPLE_DENOM_MIN = 1e-6


@dataclass(frozen=True)
class CurvatureFrame:
    x: np.ndarray
    y: np.ndarray
    R4: np.ndarray  # R4[i, j, k, l] = R_j^i_kl
    Rik: np.ndarray
    g: np.ndarray
    ell: np.ndarray
    h: np.ndarray
    scalar_residual: float
    K_fit: float
    checks: dict

    def K_of_v(self, v) -> float:
        return flag_curvature(self, None, v)


def hh_curvature(spec: MetricSpec, x, y) -> CurvatureFrame:
    """``R_j^i_kl = d/dx^k Gamma^i_jl + Gamma^i_mk Gamma^m_jl - (k <-> l)``
    with horizontal derivatives, from one degree-4 jet pass.
    """
    if spec.dim < 2:
        raise OneDimensional(
            "flag curvature is undefined through the curvature tensor when n = 1; "
            "use schwarz.one_dim_K"
        )
    J = chern_jets(spec, x, y, 4)
    n = J.n
    Gam_jet = J.Gamma  # degree 1
    Gam = Gam_jet.value
    N = J.N.value
    dx_gam = np.stack([Gam_jet.derivative(k).value for k in range(n)], axis=-1)
    dy_gam = np.stack([Gam_jet.derivative(n + m).value for m in range(n)], axis=-1)
    # delta[i, j, l, k] = d/dx^k Gamma^i_jl - N^m_k d/dy^m Gamma^i_jl
    delta = dx_gam - np.einsum("mk,ijlm->ijlk", N, dy_gam)
    R4 = (
        delta.transpose(0, 1, 3, 2)
        - delta
        + np.einsum("imk,mjl->ijkl", Gam, Gam)
        - np.einsum("iml,mjk->ijkl", Gam, Gam)
    )
    g = J.g.value
    # R_{jikl} = g_is R_j^s_kl, then R_ik = l^j R_{jikl} l^l
    R_low = np.einsum("is,sjkl->jikl", g, R4)
    F = float(np.sqrt(J.y @ g @ J.y))
    ell = J.y / F
    Rik = np.einsum("j,jikl,l->ik", ell, R_low, ell)
    ell_lower = g @ ell
    h = g - np.outer(ell_lower, ell_lower)
    hh = float(np.sum(h * h))
    K_fit = float(np.sum(Rik * h) / hh)
    checks = {
        "R4_antisymmetry": float(np.max(np.abs(R4 + R4.transpose(0, 1, 3, 2)))),
        "Rik_asymmetry": float(np.max(np.abs(Rik - Rik.T))),
        "Rik_dot_ell": float(np.max(np.abs(Rik @ ell))),
    }
    return CurvatureFrame(
        x=J.x,
        y=J.y,
        R4=R4,
        Rik=Rik,
        g=g,
        ell=ell,
        h=h,
        scalar_residual=float(np.max(np.abs(Rik - K_fit * h))),
        K_fit=K_fit,
        checks=checks,
    )


def flag_curvature(frame: CurvatureFrame, tensors, v) -> float:
    """``K(x, y, v) = R_ik v^i v^k / (g(v, v) - g(l, v)^2)``.

    ``tensors`` may be a TensorFrame for the same point; otherwise the metric
    data stored in the curvature frame is used.
    """
    v = np.asarray(v, dtype=float)
    g = frame.g if tensors is None else tensors.g
    ell = frame.ell if tensors is None else tensors.ell
    gl = ell @ g @ v
    denom = v @ g @ v - gl * gl
    if denom <= FLAG_DENOM_MIN * max(1.0, v @ g @ v):
        raise DegenerateFlag("flag vector is parallel to y")
    return float(v @ frame.Rik @ v / denom)


def random_flags(frame: CurvatureFrame, samples: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Unit vectors with well-conditioned flag denominators."""
    out = []
    n = len(frame.y)
    while len(out) < samples:
        v = rng.normal(size=n)
        v /= np.linalg.norm(v)
        gl = frame.ell @ frame.g @ v
        if v @ frame.g @ v - gl * gl >= SAMPLE_DENOM_MIN:
            out.append(v)
    return out


def scalar_curvature_check(spec: MetricSpec, x, y, samples: int = 16, seed: int = 0) -> dict:
    """Spread of K(x, y, v) over random flags, plus the least-squares K."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    frame = hh_curvature(spec, x, y)
    rng = np.random.default_rng(seed)
    vals = np.array([flag_curvature(frame, None, v) for v in random_flags(frame, samples, rng)])
    return {
        "K_fit": frame.K_fit,
        "K_min": float(vals.min()),
        "K_max": float(vals.max()),
        "spread": float(vals.max() - vals.min()),
        "scalar_residual": frame.scalar_residual,
        "checks": frame.checks,
    }
