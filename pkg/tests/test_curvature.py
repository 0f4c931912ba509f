import numpy as np
import pytest

from finslerjet.curvature import flag_curvature, hh_curvature, random_flags, scalar_curvature_check
from finslerjet.errors import DegenerateFlag, OneDimensional
from finslerjet.finsler_core import MetricSpec, euclidean, tensor_frame
from finslerjet.numata import NumataData, numata_K
from finslerjet.verification import HYPERBOLIC, SPHERE, random_point, random_riemannian

from sympy_oracle import RiemannOracle

SPHERE_A = [["4/(1+x1^2+x2^2)^2", "0"], ["0", "4/(1+x1^2+x2^2)^2"]]
A3 = [
    ["1 + 0.2*x1^2", "0.1*sin(x3)", "0"],
    ["0.1*sin(x3)", "1.5 + 0.1*x2*x1", "0.05*x3"],
    ["0", "0.05*x3", "exp(0.2*x1)"],
]


def test_euclidean_curvature_vanishes():
    fr = hh_curvature(MetricSpec.riemannian(euclidean(2)), [0.2, 0.3], [1.0, 2.0])
    assert np.max(np.abs(fr.R4)) == 0.0
    assert fr.K_of_v([1.0, -1.0]) == 0.0


def test_one_dimensional_is_rejected():
    with pytest.raises(OneDimensional):
        hh_curvature(MetricSpec.numata1d("0.5*sin(x)"), [0.0], [1.0])


def test_degenerate_flag():
    fr = hh_curvature(SPHERE, [0.1, 0.2], [1.0, 2.0])
    with pytest.raises(DegenerateFlag):
        flag_curvature(fr, None, [2.0, 4.0])


def test_sphere_and_hyperbolic():
    rng = np.random.default_rng(4)
    for _ in range(20):
        x, y = random_point(rng, 2)
        v = np.array([-y[1], y[0]])
        assert flag_curvature(hh_curvature(SPHERE, x, y), None, v) == pytest.approx(1.0, abs=1e-6)
        assert flag_curvature(hh_curvature(HYPERBOLIC, x, y), None, v) == pytest.approx(-1.0, abs=1e-6)
        rep = scalar_curvature_check(SPHERE, x, y, samples=8)
        assert rep["spread"] < 1e-8 and rep["K_fit"] == pytest.approx(1.0, abs=1e-8)


def test_sphere_with_tensor_frame_argument():
    x, y = np.array([0.3, -0.1]), np.array([0.2, 0.9])
    fr = hh_curvature(SPHERE, x, y)
    tf = tensor_frame(SPHERE, x, y)
    assert flag_curvature(fr, tf, [1.0, 0.0]) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("a", [SPHERE_A, A3])
def test_riemannian_matches_sectional_oracle(a):
    oracle = RiemannOracle(a)
    spec = MetricSpec.riemannian(a)
    rng = np.random.default_rng(8)
    n = len(a)
    for _ in range(8):
        x, y = random_point(rng, n)
        fr = hh_curvature(spec, x, y)
        for v in random_flags(fr, 3, rng):
            assert flag_curvature(fr, None, v) == pytest.approx(oracle.sectional(x, y, v), abs=1e-6)


def test_random_riemannian_is_not_scalar():
    # negative control: a generic 3D metric has v-dependent flag curvature
    rng = np.random.default_rng(9)
    spreads = []
    for _ in range(5):
        spec = random_riemannian(rng, 3)
        x, y = random_point(rng, 3)
        spreads.append(scalar_curvature_check(spec, x, y, samples=32)["spread"])
    assert max(spreads) > 1e-3


def test_numata_examples():
    spec = MetricSpec.numata("(0.5/2)*(x1^2+x2^2)", 2)
    fr = hh_curvature(spec, [0.0, 0.0], [1.0, 0.0])
    assert fr.K_fit == pytest.approx(0.1875, abs=1e-6)
    assert fr.scalar_residual < 1e-6
    spec3 = MetricSpec.numata("0.2*sin(x1)", 3)
    x, y = [0.1, -0.2, 0.3], [0.5, 0.4, -0.7]
    rep = scalar_curvature_check(spec3, x, y, samples=16)
    assert rep["spread"] < 1e-6
    assert rep["K_fit"] == pytest.approx(numata_K(NumataData(3, spec3.f), x, y), abs=1e-6)


def test_structural_checks():
    rng = np.random.default_rng(10)
    spec = MetricSpec.randers(SPHERE_A, ["0.2*x2", "0.1*sin(x1)"])
    for _ in range(10):
        x, y = random_point(rng, 2)
        fr = hh_curvature(spec, x, y)
        assert fr.checks["R4_antisymmetry"] < 1e-8
        assert fr.checks["Rik_dot_ell"] < 1e-8


def test_flag_invariance_and_homogeneity():
    rng = np.random.default_rng(11)
    spec = MetricSpec.randers(SPHERE_A, ["0.2*x2", "0.1*sin(x1)"])
    for _ in range(10):
        x, y = random_point(rng, 2)
        fr = hh_curvature(spec, x, y)
        v = random_flags(fr, 1, rng)[0]
        K = flag_curvature(fr, None, v)
        for t in (-2.0, 0.5, 3.0):
            assert flag_curvature(fr, None, v + t * y) == pytest.approx(K, abs=1e-9)
            assert flag_curvature(fr, None, t * v) == pytest.approx(K, abs=1e-9)
        for lam in (0.3, 4.0):
            assert flag_curvature(hh_curvature(spec, x, lam * y), None, v) == pytest.approx(K, abs=1e-7)
