"""Randomized property groups shared by ``finslerjet verify`` and the tests.

Each group draws its samples from its own seeded generator and returns a
:class:`GroupResult` with the worst residual seen per check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import exprdsl, jets
from .connection import chern_gamma, check_compatibility
from .curvature import flag_curvature, hh_curvature, random_flags
from .errors import FinslerError
from .finsler_core import MetricSpec, check_homogeneity, eval_energy, tensor_frame
from .jets import Jet
from .numata import NumataData, numata_K
from .schwarz import (
    CircleMap,
    cocycle_check,
    constant_K_map,
    mobius,
    one_dim_K,
    phi_from_f,
    schwarzian,
)

# tolerance set; keys match the check names in the group results
TOLERANCES = {
    "gamma_symmetry": 1e-10,
    "compatibility": 1e-8,
    "N_vs_Gamma_y": 1e-8,
    "N_y_vs_2G": 1e-8,
    "sphere_K": 1e-6,
    "hyperbolic_K": 1e-6,
    "numata_spread": 1e-5,
    "numata_vs_closed_form": 1e-5,
    "theorem_y_spread": 1e-9,
    "theorem_route_difference": 1e-8,
    "constant_K_spread": 1e-7,
    "constant_K_error": 1e-7,
    "arctan_K": 1e-9,
    "mobius_S": 1e-10,
    "cocycle": 1e-8,
    "jet_vs_fd_relative": 1e-4,
    "homogeneity_F": 1e-12,
    "homogeneity_g": 1e-12,
    "g_ell_ell": 1e-10,
}


@dataclass
class GroupResult:
    name: str
    samples: int
    worst: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def record(self, key: str, value: float, tol: float | None = None):
        tol = TOLERANCES[key] if tol is None else tol
        self.tolerances[key] = tol
        value = float(value)
        if not math.isfinite(value) or value >= tol:
            if len(self.failures) < 10:
                self.failures.append(f"{key}: {value:.3e} >= {tol:.1e}")
            value = value if math.isfinite(value) else float("inf")
        self.worst[key] = max(self.worst.get(key, 0.0), value)

    def error(self, where: str, exc: Exception):
        code = getattr(exc, "code", "E_INTERNAL")
        if len(self.failures) < 10:
            self.failures.append(f"{where}: {code}: {exc}")
        else:
            self.failures.append(code)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "samples": self.samples,
            "worst": dict(sorted(self.worst.items())),
            "tolerances": dict(sorted(self.tolerances.items())),
            "failures": self.failures[:10],
        }


# -- random specimens ----------------------------------------------------------


def _num(v: float) -> str:
    return repr(round(float(v), 4))


def _term(rng: np.random.Generator, n: int, amp: float) -> str:
    """A random smooth term of amplitude <= amp in variables x1..xn."""
    c = _num(rng.uniform(-amp, amp))
    i, j = rng.integers(1, n + 1, size=2)
    k = _num(rng.uniform(0.5, 1.5))
    p = _num(rng.uniform(0.0, 3.0))
    kind = rng.integers(0, 6)
    if kind == 0:
        return f"{c}*sin({k}*x{i} + {p})"
    if kind == 1:
        return f"{c}*cos({k}*x{i} - {p})"
    if kind == 2:
        return f"{c}*x{i}*x{j}"
    if kind == 3:
        return f"{c}*exp(-x{i}^2)"
    if kind == 4:
        return f"{c}*x{i}^2*x{j}"
    return f"{c}*arctan(x{i} + {k}*x{j})"


def random_riemannian(rng: np.random.Generator, n: int) -> MetricSpec:
    """Diagonally dominant a_ij with entries varying by at most 0.5."""
    a = [["0"] * n for _ in range(n)]
    for i in range(n):
        a[i][i] = f"1 + {_term(rng, n, 0.25)}"
        for j in range(i + 1, n):
            a[i][j] = a[j][i] = _term(rng, n, 0.4 / n)
    return MetricSpec.riemannian(a)


def random_randers(rng: np.random.Generator, n: int) -> MetricSpec:
    base = random_riemannian(rng, n)
    a = [[exprdsl.to_string(e) for e in row] for row in base.a]
    b = [_term(rng, n, 0.5 / math.sqrt(n)) for _ in range(n)]
    return MetricSpec.randers(a, b)


def random_numata_f(rng: np.random.Generator, n: int, terms: int = 3) -> str:
    return " + ".join(_term(rng, n, 0.5 / terms) for _ in range(terms))


def random_numata(rng: np.random.Generator, n: int) -> MetricSpec:
    return MetricSpec.numata(random_numata_f(rng, n), n)


def random_f1d(rng: np.random.Generator) -> str:
    """Potential on the line with |f'| < 1 near the origin."""
    terms = [
        f"{_num(rng.uniform(-0.3, 0.3))}*sin({_num(rng.uniform(0.5, 2.0))}*x + {_num(rng.uniform(0, 3))})",
        f"{_num(rng.uniform(-0.2, 0.2))}*x^2",
        f"{_num(rng.uniform(-0.1, 0.1))}*x^3",
        f"{_num(rng.uniform(-0.2, 0.2))}*arctan({_num(rng.uniform(0.5, 2.0))}*x)",
        f"{_num(rng.uniform(-0.2, 0.2))}*exp({_num(rng.uniform(-1, 1))}*x)",
    ]
    pick = rng.choice(len(terms), size=3, replace=False)
    return " + ".join(terms[i] for i in sorted(pick))


def random_point(rng: np.random.Generator, n: int, box: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    x = rng.uniform(-box, box, size=n)
    y = rng.normal(size=n)
    y /= np.linalg.norm(y)
    return x, y * rng.uniform(0.5, 2.0)


def random_mobius(rng: np.random.Generator) -> tuple[float, float, float, float]:
    while True:
        a, b, c, d = rng.uniform(-2.0, 2.0, size=4)
        if abs(a * d - b * c) > 0.1:
            return a, b, c, d


def _mobius_point(rng, a, b, c, d):
    while True:
        x = rng.uniform(-2.0, 2.0)
        if abs(c * x + d) > 0.3:
            return x


_MAP_TEMPLATES = (
    lambda r: f"exp({_num(r.uniform(0.3, 1.2))}*x)",
    lambda r: f"arctan({_num(r.uniform(0.5, 2))}*x + {_num(r.uniform(-1, 1))})",
    lambda r: f"x + {_num(r.uniform(0.05, 0.4))}*sin(x)",
    lambda r: f"x^3 + {_num(r.uniform(0.5, 2))}*x",
    lambda r: f"{_num(r.uniform(0.5, 2))}*x + {_num(r.uniform(-1, 1))}",
    lambda r: f"({_num(r.uniform(0.5, 2))}*x + 1)/({_num(r.uniform(0.1, 0.5))}*x + 3)",
    lambda r: f"ln({_num(r.uniform(2, 4))} + x)",
)


def random_map(rng: np.random.Generator) -> CircleMap:
    tmpl = _MAP_TEMPLATES[rng.integers(len(_MAP_TEMPLATES))]
    return CircleMap.from_string(tmpl(rng))


def random_composable_pair(rng: np.random.Generator):
    while True:
        phi, psi = random_map(rng), random_map(rng)
        x = rng.uniform(-1.0, 1.0)
        try:
            px = psi(x)
            if abs(px) > 1.5 or abs(psi.derivative(x)) < 0.05 or abs(phi.derivative(px)) < 0.05:
                continue
            schwarzian(phi, px)
            schwarzian(psi, x)
        except (FinslerError, ZeroDivisionError, ValueError):
            continue
        return phi, psi, x


def random_constant_K(rng: np.random.Generator):
    """(K, a, b, c, d, domain) with ad - bc = +-1 and a pole-free domain."""
    while True:
        K = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        a = rng.uniform(0.3, 1.5) * rng.choice([-1, 1])
        b, c = rng.uniform(-1.5, 1.5, size=2)
        det = float(rng.choice([-1.0, 1.0]))
        d = (det + b * c) / a
        lo = rng.uniform(-1.0, 0.5)
        hi = lo + 0.5
        xs = np.linspace(lo, hi, 9)
        if np.min(np.abs(c * xs + d)) < 0.3:
            continue
        m = (a * xs + b) / (c * xs + d)
        if np.max(K * m * m) > 25.0:
            continue
        return K, float(a), float(b), float(c), float(d), (float(lo), float(hi))


# -- groups ----------------------------------------------------------------------


def _seeded(seed: int, group: str) -> np.random.Generator:
    return np.random.default_rng([seed, sum(ord(ch) * (i + 1) for i, ch in enumerate(group))])


def _random_spec(rng, family: str, n: int) -> MetricSpec:
    return {"riemannian": random_riemannian, "randers": random_randers, "numata": random_numata}[family](rng, n)


def _admissible_sample(rng, family: str, n: int, tries: int = 50):
    for _ in range(tries):
        spec = _random_spec(rng, family, n)
        x, y = random_point(rng, n)
        try:
            tensor_frame(spec, x, y)
        except FinslerError:
            continue
        return spec, x, y
    raise RuntimeError(f"could not draw an admissible {family} sample")


def group_chern_axioms(samples: int = 500, seed: int = 0) -> GroupResult:
    """Symmetry, N = Gamma y, spray homogeneity and almost metric-compatibility."""
    res = GroupResult("chern_axioms", samples)
    rng = _seeded(seed, res.name)
    families = ("riemannian", "randers", "numata")
    for k in range(samples):
        family = families[k % 3]
        n = 2 + (k // 3) % 2
        spec, x, y = _admissible_sample(rng, family, n)
        try:
            fr = chern_gamma(spec, x, y, check=False)
            dx, dy = rng.normal(size=n), rng.normal(size=n)
            res.record("gamma_symmetry", fr.residuals["gamma_symmetry"])
            res.record("N_vs_Gamma_y", fr.residuals["N_vs_Gamma_y"])
            res.record("N_y_vs_2G", fr.residuals["N_y_vs_2G"])
            res.record("compatibility", max(fr.residuals["compatibility"], check_compatibility(spec, x, y, dx, dy)))
        except FinslerError as exc:
            res.error(f"{family} sample {k}", exc)
    return res


SPHERE = MetricSpec.riemannian(
    [["4/(1 + x1^2 + x2^2)^2", "0"], ["0", "4/(1 + x1^2 + x2^2)^2"]]
)
HYPERBOLIC = MetricSpec.riemannian(
    [["4/(1 - x1^2 - x2^2)^2", "0"], ["0", "4/(1 - x1^2 - x2^2)^2"]]
)


def group_riemannian_reduction(samples: int = 100, seed: int = 0) -> GroupResult:
    """Flag curvature of the round sphere and Poincare disc charts."""
    res = GroupResult("riemannian_reduction", samples)
    rng = _seeded(seed, res.name)
    for k in range(samples):
        for key, spec, target, radius in (("sphere_K", SPHERE, 1.0, 2.0), ("hyperbolic_K", HYPERBOLIC, -1.0, 0.8)):
            r = radius * math.sqrt(rng.uniform())
            t = rng.uniform(0, 2 * math.pi)
            x = np.array([r * math.cos(t), r * math.sin(t)])
            y = rng.normal(size=2)
            try:
                frame = hh_curvature(spec, x, y)
                v = random_flags(frame, 1, rng)[0]
                res.record(key, abs(flag_curvature(frame, None, v) - target))
            except FinslerError as exc:
                res.error(f"{key} sample {k}", exc)
    return res


def group_numata_scalar(samples: int = 100, seed: int = 0, flags: int = 8) -> GroupResult:
    """Numata metrics are of scalar flag curvature, equal to the closed form."""
    res = GroupResult("numata_scalar", samples)
    rng = _seeded(seed, res.name)
    for k in range(samples):
        n = 2 + k % 2
        spec, x, y = _admissible_sample(rng, "numata", n)
        try:
            frame = hh_curvature(spec, x, y)
            vals = [flag_curvature(frame, None, v) for v in random_flags(frame, flags, rng)]
            res.record("numata_spread", max(vals) - min(vals))
            closed = numata_K(NumataData(n, spec.f), x, y)
            res.record("numata_vs_closed_form", abs(frame.K_fit - closed))
        except FinslerError as exc:
            res.error(f"numata sample {k}", exc)
    return res


def _admissible_f1d(rng):
    while True:
        f = random_f1d(rng)
        data = NumataData.from_string(f, 1)
        x = rng.uniform(-0.5, 0.5)
        grad, _, _ = data.derivatives([x])
        if abs(grad[0]) < 0.9:
            return f, x


def group_theorem_bridge(samples: int = 100, seed: int = 0) -> GroupResult:
    """Closed-form K at n = 1 is y-independent and equals -S(phi)/(2 phi'^2)."""
    res = GroupResult("theorem_bridge", samples)
    rng = _seeded(seed, res.name)
    ys = np.geomspace(0.01, 100.0, 9)
    for k in range(samples):
        f, x = _admissible_f1d(rng)
        data = NumataData.from_string(f, 1)
        try:
            for sign in (1, -1):
                vals = np.array([numata_K(data, [x], [sign * yv]) for yv in ys])
                K_s = one_dim_K(phi_from_f(data.f, sign), x)
                res.record("theorem_y_spread", vals.max() - vals.min())
                res.record("theorem_route_difference", np.max(np.abs(vals - K_s)))
        except FinslerError as exc:
            res.error(f"f = {f}", exc)
    return res


def group_constant_curvature(samples: int = 50, seed: int = 0, points: int = 9) -> GroupResult:
    """``K^-1/2 arctan(K^1/2 Mobius)`` has constant one-dimensional curvature K."""
    res = GroupResult("constant_curvature", samples)
    rng = _seeded(seed, res.name)
    for k in range(samples):
        K, a, b, c, d, dom = random_constant_K(rng)
        try:
            m = constant_K_map(K, a, b, c, d, domain=dom)
            vals = np.array([one_dim_K(m, x) for x in np.linspace(dom[0], dom[1], points)])
            res.record("constant_K_spread", vals.max() - vals.min())
            res.record("constant_K_error", np.max(np.abs(vals - K)))
        except FinslerError as exc:
            res.error(f"K={K:g} ({a:g},{b:g},{c:g},{d:g})", exc)
    arctan = constant_K_map(1.0, 1.0, 0.0, 0.0, 1.0)
    for x in np.linspace(-3.0, 3.0, 13):
        res.record("arctan_K", abs(one_dim_K(arctan, x) - 1.0))
    return res


def group_schwarzian(samples: int = 100, seed: int = 0) -> GroupResult:
    """S vanishes on Mobius maps and satisfies the composition cocycle."""
    res = GroupResult("schwarzian", samples)
    rng = _seeded(seed, res.name)
    for k in range(samples):
        a, b, c, d = random_mobius(rng)
        x = _mobius_point(rng, a, b, c, d)
        try:
            res.record("mobius_S", abs(schwarzian(mobius(a, b, c, d), x)))
        except FinslerError as exc:
            res.error(f"mobius sample {k}", exc)
        phi, psi, x = random_composable_pair(rng)
        try:
            res.record("cocycle", cocycle_check(phi, psi, x))
        except FinslerError as exc:
            res.error(f"cocycle sample {k}", exc)
    return res


def group_homogeneity(samples: int = 30, seed: int = 0) -> GroupResult:
    """F is 1-homogeneous and g is 0-homogeneous in y; g(l, l) = 1."""
    res = GroupResult("homogeneity", samples)
    rng = _seeded(seed, res.name)
    families = ("riemannian", "randers", "numata")
    for k in range(samples):
        spec, x, y = _admissible_sample(rng, families[k % 3], 2 + k % 2)
        try:
            for lam in (0.5, 2.0, 10.0):
                rep = check_homogeneity(spec, x, y, lam)
                res.record("homogeneity_F", rep["F_residual"], TOLERANCES["homogeneity_F"] * max(1.0, lam))
                res.record("homogeneity_g", rep["g_residual"], TOLERANCES["homogeneity_g"] * max(1.0, lam))
            res.record("g_ell_ell", tensor_frame(spec, x, y).residuals()["g_ell_ell"])
        except FinslerError as exc:
            res.error(f"sample {k}", exc)
    return res


# -- jets versus finite differences ------------------------------------------------


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


def _energy_float(spec: MetricSpec, z: np.ndarray) -> float:
    n = spec.dim
    pts = [Jet.constant(v, 1, 0) for v in z]
    return eval_energy(spec, pts[:n], pts[n:]).value


def _energy_jet(spec: MetricSpec, z: np.ndarray, degree: int) -> Jet:
    n = spec.dim
    nv = 2 * n
    pts = [Jet.seed(v, i, nv, degree) for i, v in enumerate(z)]
    return eval_energy(spec, pts[:n], pts[n:])


def audit_energy(spec: MetricSpec, x, y) -> float:
    """Worst relative jet/FD gap over all derivatives of F^2/2 up to order 4.

    Orders <= 3 are checked against finite differences of the plain-float
    energy; order 4 against a one-step difference of jet third derivatives.
    """
    z = np.concatenate([x, y])
    nv = z.size
    E3 = _energy_jet(spec, z, 3)
    E4 = _energy_jet(spec, z, 4)
    worst = 0.0
    t3 = jets.tables(nv, 3)
    for alpha in t3.monomials[1:]:
        fd = jets.fd_oracle(lambda p: _energy_float(spec, p), z, alpha, richardson=True)
        worst = max(worst, _rel(jets.extract_derivative(E3, alpha), fd))
    h = np.finfo(float).eps ** (1 / 3) * (np.max(np.abs(z)) + 1.0)
    third = [m for m in t3.monomials if sum(m) == 3]
    for v in range(nv):
        e = np.zeros(nv)
        e[v] = h
        plus = _energy_jet(spec, z + e, 3)
        minus = _energy_jet(spec, z - e, 3)
        for beta in third:
            fd = (jets.extract_derivative(plus, beta) - jets.extract_derivative(minus, beta)) / (2 * h)
            alpha = list(beta)
            alpha[v] += 1
            worst = max(worst, _rel(jets.extract_derivative(E4, alpha), fd))
    return worst


def audit_map(m: CircleMap, x: float) -> float:
    """Worst relative gap between jet phi', phi'', phi''' and finite differences."""
    d = m.derivatives(x)
    worst = 0.0
    for order in (1, 2, 3):
        fd = jets.fd_oracle(lambda p: m(float(p[0])), [x], (order,), richardson=True)
        worst = max(worst, _rel(d[order], fd))
    return worst


def audit_potential(data: NumataData, x) -> float:
    grad, hess, third = data.derivatives(x)
    n = data.n
    f = lambda p: exprdsl.eval_float(data.f, p)  # noqa: E731
    worst = 0.0
    for alpha in itertools.chain.from_iterable(
        itertools.combinations_with_replacement(range(n), k) for k in (1, 2, 3)
    ):
        mi = [0] * n
        for i in alpha:
            mi[i] += 1
        jet_val = {1: grad, 2: hess, 3: third}[len(alpha)][alpha]
        worst = max(worst, _rel(jet_val, jets.fd_oracle(f, x, mi, richardson=True)))
    return worst


def group_jets_vs_fd(samples: int = 50, seed: int = 0) -> GroupResult:
    """Audit the derivatives feeding every other group against finite differences."""
    res = GroupResult("jets_vs_fd", samples)
    rng = _seeded(seed, res.name)
    families = ("riemannian", "randers", "numata")
    for k in range(samples):
        try:
            family = families[k % 3]
            n = 2 + (k // 3) % 2
            spec, x, y = _admissible_sample(rng, family, n)
            res.record("jet_vs_fd_relative", audit_energy(spec, x, y))
            if family == "numata":
                res.record("jet_vs_fd_relative", audit_potential(NumataData(n, spec.f), x))
            res.record("jet_vs_fd_relative", audit_energy(SPHERE, *random_point(rng, 2)))
            f, x1 = _admissible_f1d(rng)
            res.record("jet_vs_fd_relative", audit_potential(NumataData.from_string(f, 1), [x1]))
            res.record("jet_vs_fd_relative", audit_map(phi_from_f(f, 1), x1))
            K, a, b, c, d, dom = random_constant_K(rng)
            res.record("jet_vs_fd_relative", audit_map(constant_K_map(K, a, b, c, d), rng.uniform(*dom)))
            phi, psi, xc = random_composable_pair(rng)
            res.record("jet_vs_fd_relative", audit_map(psi, xc))
        except FinslerError as exc:
            res.error(f"sample {k}", exc)
    return res


GROUPS = {
    "jets_vs_fd": group_jets_vs_fd,
    "homogeneity": group_homogeneity,
    "chern_axioms": group_chern_axioms,
    "riemannian_reduction": group_riemannian_reduction,
    "numata_scalar": group_numata_scalar,
    "theorem_bridge": group_theorem_bridge,
    "schwarzian": group_schwarzian,
    "constant_curvature": group_constant_curvature,
}


def group_config_metric(spec: MetricSpec, points, directions) -> GroupResult:
    """Frame, homogeneity and Chern checks on a user-declared metric."""
    res = GroupResult("config_metric", len(points) * len(directions))
    for i, x in enumerate(points):
        for j, y in enumerate(directions):
            where = f"x[{i}] y[{j}]"
            try:
                fr = tensor_frame(spec, x, y)
                res.record("g_ell_ell", fr.residuals()["g_ell_ell"])
                rep = check_homogeneity(spec, x, y, 2.0)
                res.record("homogeneity_F", rep["F_residual"], 2 * TOLERANCES["homogeneity_F"])
                res.record("homogeneity_g", rep["g_residual"], 2 * TOLERANCES["homogeneity_g"])
                cf = chern_gamma(spec, x, y, check=False)
                for key in ("gamma_symmetry", "N_vs_Gamma_y", "compatibility"):
                    res.record(key, cf.residuals[key])
            except FinslerError as exc:
                res.error(where, exc)
    return res


def run_suite(samples: int | None = None, seed: int = 0, groups=None) -> list[GroupResult]:
    """Run the named groups (all by default); ``samples`` overrides each default."""
    out = []
    for name in groups or GROUPS:
        fn = GROUPS[name]
        out.append(fn(seed=seed) if samples is None else fn(samples=samples, seed=seed))
    return out
