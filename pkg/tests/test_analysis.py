import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from kuhnnet import (InputError, SampleGrid, VerifyOptions, bound_terms, build_approximator, build_global,
                     c_d, empirical_lipschitz, encode, extrapolation_excess, generalization_bound,
                     sup_error_scan, verify_all)
from kuhnnet.analysis import lattice_scan_points, median_input_check, scan_points
from kuhnnet.errors import ParseError
from kuhnnet.net import Layer, ReluNet
from kuhnnet.report import Check, VerificationReport, flag, loads_report
from kuhnnet.targets import TARGET_NAMES, get_target


def c_d_oracle(d):
    mpmath.mp.dps = 50
    d = mpmath.mpf(d)
    first = (8 * (d + 1) ** 2 * mpmath.mpf(16) ** d) ** (1 / (d + 3))
    second = 4 * mpmath.sqrt(2) * mpmath.mpf(16) ** (d / (d + 3)) / (18 * (d + 1)) ** ((d + 1) / (d + 3))
    return first + second


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5, 8])
def test_c_d_matches_oracle(d):
    assert abs(c_d(d) - float(c_d_oracle(d))) <= 1e-12 * float(c_d_oracle(d))


def test_c_d_domain():
    with pytest.raises(InputError):
        c_d(0)


def test_bound_non_explosion():
    a = bound_terms(50, 10**4, 1.0, 1.0, 2, 1000, 0.05)
    b = bound_terms(500, 10**6, 1.0, 1.0, 2, 1000, 0.05)
    assert a.active == b.active == "function"
    assert a.total == b.total
    assert math.isinf(b.parameter_space)


def test_bound_small_network_uses_parameter_term():
    t = bound_terms(1, 2, 100.0, 1.0, 5, 10**6, 0.05)
    assert t.active == "parameter"
    assert t.total == pytest.approx(t.confidence + 2 * t.parameter_space)


def test_bound_total_formula():
    t = bound_terms(3, 20, 2.0, 0.5, 2, 500, 0.1)
    assert t.confidence == pytest.approx(math.sqrt(8 * math.log(40)) / math.sqrt(500))
    assert t.function_space == pytest.approx(c_d(2) * 2.0 ** 0.4 / 500 ** 0.2)
    assert generalization_bound(3, 20, 2.0, 0.5, 2, 500, 0.1) == t.total


@pytest.mark.parametrize("kw", [dict(Delta=0), dict(W=1.5), dict(delta=1.0), dict(L=-1.0), dict(C_dX=0.0)])
def test_bound_validation(kw):
    args = dict(Delta=3, W=20, L=1.0, L_loss=1.0, d=2, N=100, delta=0.05)
    args.update(kw)
    with pytest.raises(InputError):
        bound_terms(**args)


@given(st.integers(1, 6), st.integers(2, 10**6), st.integers(2, 10**6))
def test_bound_decreases_in_N_for_function_term(d, n1, n2):
    lo, hi = sorted((n1, n2))
    a = bound_terms(400, 10**6, 1.0, 1.0, d, lo, 0.05)
    b = bound_terms(400, 10**6, 1.0, 1.0, d, hi, 0.05)
    assert b.total <= a.total + 1e-15


def test_scan_points_cover_lattice():
    pts = scan_points(2, 10, n=2)
    assert pts.shape[0] == 10 + len(lattice_scan_points(2, 2))
    assert np.all((pts >= 0) & (pts <= 1))
    np.testing.assert_array_equal(scan_points(2, 50, seed=3), scan_points(2, 50, seed=3))


def test_sup_error_of_exact_net():
    target = get_target("linear", 2)
    net = build_approximator(encode(target, 2, 3, vectorized=True)).net
    assert sup_error_scan(net, target, 2, 2000, n=3) <= 1e-12


def test_sup_error_dimension_check():
    net = build_approximator(SampleGrid(1, 1, [0, 1])).net
    with pytest.raises(InputError):
        sup_error_scan(net, lambda x: x[:, 0], d=2)


def test_empirical_lipschitz_of_linear():
    net = ReluNet((Layer(np.array([[2.0, -1.0]]), np.zeros(1)),), 2)
    assert empirical_lipschitz(net, 1000) <= 2.0 + 1e-12
    assert empirical_lipschitz(net, 1000, n=3) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("name", TARGET_NAMES)
def test_targets_respect_modulus(name, rng):
    t = get_target(name, 2)
    x, y = rng.random((2, 5000, 2))
    dist = np.abs(x - y).sum(axis=1)
    assert np.all(np.abs(t(x) - t(y)) <= t.modulus(2)(dist) + 1e-12)


def test_unknown_target():
    with pytest.raises(InputError):
        get_target("sinc", 2)


@pytest.mark.parametrize("name", ["min-coords", "heaviside-perturbed"])
def test_verify_all_passes(name):
    t = get_target(name, 2)
    grid = encode(t, 2, 4, vectorized=True)
    rep = verify_all(build_approximator(grid).net, grid, t.modulus(2), t,
                     VerifyOptions(scan_points=3000, pairs=3000))
    assert rep.passed, rep.table()
    names = [c.name for c in rep.checks]
    assert {"interpolation", "oracle_agreement", "error_bound", "lipschitz", "support"} <= set(names)


def test_verify_all_catches_wrong_grid(rng):
    grid = SampleGrid(2, 2, rng.random(9))
    other = SampleGrid(2, 2, grid.values + 0.1)
    rep = verify_all(build_approximator(other).net, grid, options=VerifyOptions(scan_points=500, pairs=500))
    assert not rep.passed
    assert "interpolation" in rep.failures()


def test_verify_global():
    t = get_target("ridge", 2)
    grid = encode(t, 2, 4, vectorized=True)
    rep = verify_all(build_global(grid).net, grid, t.modulus(2), t,
                     VerifyOptions(scan_points=2000, pairs=2000, kind="global"))
    assert rep.passed, rep.table()
    assert "clamp" in [c.name for c in rep.checks]


def test_extrapolation_excess():
    t = get_target("min-coords", 2)
    grid = encode(t, 2, 4, vectorized=True)
    ex = extrapolation_excess(build_global(grid).net, t, t.modulus(2), 2, 5000)
    assert ex <= 0.25 + 1e-9


def test_median_input_check():
    assert median_input_check([[0, 1], [2, 3]]).passed
    assert not median_input_check([[0, -1]]).passed


def test_report_round_trip():
    rep = VerificationReport()
    rep.add(Check("a", 0.1, 0.2, samples=5, seed=1))
    rep.add(Check("b", math.inf, 1.0))
    rep.add(flag("c", True, "ok"))
    assert not rep.passed and rep.failures() == ["b"]
    back = loads_report(rep.to_json())
    assert back.to_json() == rep.to_json()
    assert "FAIL" in rep.table() or "fail" in rep.table().lower()
    with pytest.raises(ParseError):
        loads_report("{}")
