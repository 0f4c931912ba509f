import numpy as np
import pytest

from finslerjet import jets
from finslerjet.connection import chern_gamma, check_compatibility, spray
from finslerjet.errors import OutsideDomain
from finslerjet.finsler_core import F_value, MetricSpec, euclidean
from finslerjet.verification import random_numata, random_point, random_randers, random_riemannian

from sympy_oracle import RiemannOracle

A2 = [["1 + 0.3*sin(x1)*x2", "0.1*x1"], ["0.1*x1", "2 + 0.2*cos(x2)"]]
A3 = [
    ["1 + 0.2*x1^2", "0.1*sin(x3)", "0"],
    ["0.1*sin(x3)", "1.5 + 0.1*x2*x1", "0.05*x3"],
    ["0", "0.05*x3", "exp(0.2*x1)"],
]


def test_euclidean_connection_vanishes():
    cf = chern_gamma(MetricSpec.riemannian(euclidean(3)), [0.1, 0.2, 0.3], [1.0, -1.0, 0.5])
    assert np.max(np.abs(cf.Gamma)) == 0.0
    assert np.max(np.abs(cf.N)) == 0.0
    assert np.max(np.abs(cf.G)) == 0.0
    assert check_compatibility(MetricSpec.riemannian(euclidean(2)), [0, 0], [1, 0], [0.3, 0.1], [1, 2]) < 1e-12


@pytest.mark.parametrize("a", [A2, A3])
def test_riemannian_gamma_is_christoffel(a):
    spec = MetricSpec.riemannian(a)
    oracle = RiemannOracle(a)
    rng = np.random.default_rng(1)
    n = len(a)
    for _ in range(10):
        x, y = random_point(rng, n)
        want = oracle.christoffel(x)
        cf = chern_gamma(spec, x, y)
        np.testing.assert_allclose(cf.Gamma, want, atol=1e-12)
        # 2 G^i = gamma^i_jk y^j y^k
        np.testing.assert_allclose(2 * spray(spec, x, y), np.einsum("ijk,j,k->i", want, y, y), atol=1e-12)
        # y-independence
        np.testing.assert_allclose(chern_gamma(spec, x, -3 * y + 0.1).Gamma, want, atol=1e-12)


def test_spray_numata_against_fd():
    spec = MetricSpec.numata("0.1*x1*x2", 2)
    x, y = np.zeros(2), np.array([1.0, 1.0])
    F2 = lambda z: F_value(spec, z[:2], z[2:]) ** 2
    z = np.concatenate([x, y])
    mixed = np.array([[jets.fd_oracle(F2, z, [int(i == k) for i in range(2)] + [int(i == l) for i in range(2)], richardson=True)
                       for k in range(2)] for l in range(2)])
    grad = np.array([jets.fd_oracle(F2, z, [int(i == l) for i in range(2)] + [0, 0], richardson=True) for l in range(2)])
    g = np.array([[jets.fd_oracle(lambda w: 0.5 * F2(np.concatenate([x, w])), y, [int(i == a) + int(i == b) for i in range(2)], richardson=True)
                   for b in range(2)] for a in range(2)])
    want = 0.25 * np.linalg.solve(g, mixed @ y - grad)
    np.testing.assert_allclose(spray(spec, x, y), want, atol=1e-6)


def test_numata1d_connection_consistent():
    spec = MetricSpec.numata1d("0.5*sin(x)", "+")
    cf = chern_gamma(spec, [0.3], [2.0])
    assert np.all(np.isfinite(cf.Gamma))
    assert abs(cf.N[0, 0] - cf.Gamma[0, 0, 0] * 2.0) < 1e-8


def test_compatibility_riemannian_and_randers():
    rng = np.random.default_rng(2)
    riem = MetricSpec.riemannian(A2)
    randers = MetricSpec.randers(None, ["0.4", "0"])
    randers_var = MetricSpec.randers(A2, ["0.2*sin(x2)", "0.1*x1"])
    for _ in range(20):
        x, y = random_point(rng, 2)
        dx, dy = rng.normal(size=2), rng.normal(size=2)
        assert check_compatibility(riem, x, y, dx, dy) < 1e-9
        assert check_compatibility(randers, x, y, dx, dy) < 1e-8
        assert check_compatibility(randers_var, x, y, dx, dy) < 1e-8


def test_axioms_on_random_specs():
    rng = np.random.default_rng(3)
    makers = (random_riemannian, random_randers, random_numata)
    checked = 0
    for k in range(120):
        n = 2 + k % 2
        spec = makers[k % 3](rng, n)
        x, y = random_point(rng, n)
        try:
            cf = chern_gamma(spec, x, y, check=False)
        except OutsideDomain:
            continue
        checked += 1
        r = cf.residuals
        assert r["gamma_symmetry"] < 1e-10
        assert r["compatibility"] < 1e-8
        assert r["N_vs_Gamma_y"] < 1e-8
        assert r["N_y_vs_2G"] < 1e-8
        np.testing.assert_allclose(cf.N @ y, 2 * spray(spec, x, y), atol=1e-8)
    assert checked > 100


def test_compatibility_detects_a_wrong_connection():
    # negative control: perturbing Gamma must break the relation
    from finslerjet.connection import _compat_residual, chern_jets

    spec = MetricSpec.numata("0.2*x1*x2 + 0.1*sin(x1)", 2)
    J = chern_jets(spec, [0.1, 0.2], [0.6, -0.8], 3)
    bad = J.Gamma.value + 1e-3
    r = _compat_residual(J.g.value, J.dxg.value, J.dyg.value, bad, J.N.value, np.array([1.0, 0.0]), np.zeros(2))
    assert r > 1e-5
