import numpy as np
import pytest
from hypothesis import given, strategies as st

from kuhnnet import (CapacityError, InputError, Samples1D, build_max_net, build_median_net,
                     build_memorizer_2layer, build_memorizer_deep, build_memorizer_sqrt, count_nonzero_params,
                     deep_capacity, depth, evaluate, width, widthvec)
from kuhnnet.errors import ParseError
from kuhnnet.gadgets import dumps_samples, loads_samples, sqrt_shape, two_layer_plan
from kuhnnet.pwl1d import exact_lipschitz_1d, pieces


def random_samples(rng, k, spread=1.0):
    xs = np.sort(rng.choice(np.arange(10 * k + 10), size=k, replace=False)) / 10.0
    return Samples1D(xs, spread * rng.normal(size=k))


def memorized(net, s):
    return np.abs(evaluate(net, s.xs[:, None])[:, 0] - s.ys).max(initial=0.0)


def fd_lipschitz(s):
    if len(s) < 2:
        return 0.0
    return float(np.abs(np.diff(s.ys) / np.diff(s.xs)).max())


@pytest.mark.parametrize("k,m", [(1, 2), (2, 3), (3, 8), (2, 4)])
def test_max_net(k, m, rng):
    net = build_max_net(k, m)
    x = rng.normal(size=(200, m))
    np.testing.assert_allclose(evaluate(net, x)[:, 0], x.max(axis=1), atol=1e-12)
    assert depth(net) == k


def test_max_net_domain():
    with pytest.raises(InputError):
        build_max_net(2, 5)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_median_net(d, rng):
    net = build_median_net(d)
    assert width(net) == 6 * d + 3
    assert depth(net) == 11 * d + 3
    x = rng.random((500, 2 * d + 1)) * 10
    np.testing.assert_allclose(evaluate(net, x)[:, 0], np.median(x, axis=1), atol=1e-9)


def test_median_ties():
    net = build_median_net(2)
    x = np.array([[1, 1, 1, 1, 1], [0, 0, 3, 3, 3], [0, 0, 0, 5, 5.0]])
    np.testing.assert_allclose(evaluate(net, x)[:, 0], [1, 3, 0], atol=1e-12)


def test_sqrt_shape():
    assert sqrt_shape(1) == (2, 1)
    assert sqrt_shape(9) == (6, 2)
    assert sqrt_shape(10) == (8, 2)
    assert sqrt_shape(100) == (20, 5)


def test_capacity_error_2layer():
    s = Samples1D(np.arange(10.0), np.zeros(10))
    with pytest.raises(CapacityError) as e:
        build_memorizer_2layer(s, 2, 2)
    assert e.value.capacity == 4


@pytest.mark.parametrize("k", [1, 2, 3, 9, 25, 40, 100])
def test_sqrt_memorizer(k, rng):
    s = random_samples(rng, k)
    net = build_memorizer_sqrt(s)
    c = int(np.ceil(np.sqrt(k)))
    assert memorized(net, s) <= 1e-9
    assert depth(net) == 2
    assert width(net) <= 2 * c
    assert count_nonzero_params(net) <= 2 * k + 8 * c
    assert exact_lipschitz_1d(net) <= fd_lipschitz(s) * (1 + 1e-9) + 1e-9


def test_interval_slopes_match_chords(rng):
    s = random_samples(rng, 30)
    p = pieces(build_memorizer_sqrt(s))
    for a, b in zip(s.xs[:-1], s.xs[1:]):
        mid = 0.5 * (a + b)
        slope = p.slopes[np.searchsorted(p.breaks, mid), 0]
        assert slope == pytest.approx(s.slope_at(mid), abs=1e-9)
    assert p.slopes[0, 0] == 0.0 and abs(p.slopes[-1, 0]) <= 1e-9


def test_plan_rows(rng):
    s = random_samples(rng, 12)
    plan = two_layer_plan(s, 6, 3)
    assert plan.init.size == 4 * 3 - 2
    assert plan.knots.size == 4


def test_deep_capacity():
    assert deep_capacity([20, 20, 20]) == 32
    assert deep_capacity([13, 13, 13]) == 0


def test_deep_rejects():
    s = Samples1D(np.arange(40.0), np.zeros(40))
    with pytest.raises(CapacityError):
        build_memorizer_deep(s, [20, 20, 20])
    with pytest.raises(InputError):
        build_memorizer_deep(s, [20, 20])


@pytest.mark.parametrize("widths,k", [((20, 20, 20), 32), ((16, 24, 16, 20), 12), ((30, 20, 25), 5)])
def test_deep_memorizer(widths, k, rng):
    s = random_samples(rng, k)
    net = build_memorizer_deep(s, widths)
    assert memorized(net, s) <= 1e-7
    wv = widthvec(net)
    assert len(wv) == len(widths) + 1
    assert all(a <= b for a, b in zip(wv, list(widths) + [8]))


def test_samples_io():
    s = loads_samples("x,y\n0,1\n1,3\n")
    assert s.xs.tolist() == [0, 1] and s.ys.tolist() == [1, 3]
    assert loads_samples(dumps_samples(s)).ys.tolist() == [1, 3]
    with pytest.raises(ParseError):
        loads_samples("0,1\n0,2\n")
    with pytest.raises(ParseError):
        loads_samples("0,1\n1,x\n")


sample_sets = st.integers(1, 40).flatmap(
    lambda k: st.tuples(st.lists(st.integers(-200, 200), min_size=k, max_size=k, unique=True),
                        st.lists(st.floats(-50, 50, allow_nan=False), min_size=k, max_size=k)))


@given(sample_sets)
def test_sqrt_memorizer_property(data):
    xs, ys = data
    order = np.argsort(xs)
    s = Samples1D(np.array(xs, float)[order] / 7.0, np.array(ys)[order])
    net = build_memorizer_sqrt(s)
    scale = max(1.0, np.abs(s.ys).max())
    assert memorized(net, s) <= 1e-9 * scale * 10
    c = int(np.ceil(np.sqrt(len(s))))
    assert count_nonzero_params(net) <= 2 * len(s) + 8 * c
    assert exact_lipschitz_1d(net) <= fd_lipschitz(s) * (1 + 1e-8) + 1e-8
