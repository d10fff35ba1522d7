import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kuhnnet import DomainError, InputError, SampleGrid, eval_modulus, holder_modulus, lipschitz_modulus
from kuhnnet import min_concave_from_grid
from kuhnnet.modulus import (UNDEFINED, Modulus, affine_jump_modulus, dumps, lattice_increments, loads,
                             majorant_gaps, upper_hull)
from kuhnnet.errors import ParseError
from kuhnnet.kuhn import lattice_points


def test_lipschitz_value():
    assert eval_modulus(lipschitz_modulus(2, 1), 0.25) == 0.5
    assert eval_modulus(lipschitz_modulus(3, 1), 1 / 3) == pytest.approx(1.0, abs=1e-15)


def test_jump_modulus():
    w = affine_jump_modulus(1.0, 0.0, 1.0)
    assert eval_modulus(w, 0.0) == 0.0
    assert eval_modulus(w, 0.1) == 1.0


def test_clamped_extension():
    w = lipschitz_modulus(1, 2)
    assert eval_modulus(w, 5.0) == 2.0


def test_undefined_extension():
    w = Modulus(2.0, 0.0, ((2.0, 2.0),), UNDEFINED)
    with pytest.raises(DomainError):
        eval_modulus(w, 5.0)
    assert eval_modulus(w.clamped(), 5.0) == 2.0


def test_negative_argument():
    with pytest.raises(DomainError):
        eval_modulus(lipschitz_modulus(1, 1), -0.1)


def test_holder_knot():
    assert eval_modulus(holder_modulus(1, 0.5, 1), 0.25) == pytest.approx(0.5, abs=1e-15)


def test_holder_alpha_one():
    a, b = holder_modulus(1, 1, 1), lipschitz_modulus(1, 1)
    t = np.linspace(0, 1.5, 31)
    np.testing.assert_array_equal(eval_modulus(a, t), eval_modulus(b, t))


def test_holder_domain():
    with pytest.raises(DomainError):
        holder_modulus(1, 0, 1)
    with pytest.raises(DomainError):
        lipschitz_modulus(-1, 1)


def test_rejects_convex_knots():
    with pytest.raises(InputError):
        Modulus(1.0, 0.0, ((0.5, 0.1), (1.0, 1.0)))


def test_rejects_decreasing_knots():
    with pytest.raises(InputError):
        Modulus(1.0, 0.0, ((0.5, 1.0), (1.0, 0.5)))


def test_constant_grid_zero_modulus():
    w = min_concave_from_grid(SampleGrid(2, 3, np.full(16, 4.2)))
    assert np.all(eval_modulus(w, np.linspace(0, 3, 13)) == 0)


def _pairwise_table(values, n):
    # all ordered pairs of lattice points in one dimension
    m = {}
    for i, j in itertools.product(range(n + 1), repeat=2):
        k = abs(i - j)
        if k:
            m[k] = max(m.get(k, 0.0), abs(values[i] - values[j]))
    return m


def test_identity_grid():
    m = _pairwise_table([0, 0.5, 1], 2)
    assert m == {1: 0.5, 2: 1.0}
    w = min_concave_from_grid(SampleGrid(1, 2, [0, 0.5, 1]))
    for t in (0.25, 0.5, 0.75, 1.0):
        assert eval_modulus(w, t) == pytest.approx(t, abs=1e-15)


def test_plateau_grid():
    m = _pairwise_table([0, 1, 1], 2)
    assert m == {1: 1.0, 2: 1.0}
    w = min_concave_from_grid(SampleGrid(1, 2, [0, 1, 1]))
    assert eval_modulus(w, 0.25) == pytest.approx(0.5)
    assert eval_modulus(w, 0.5) == pytest.approx(1.0)
    assert eval_modulus(w, 1.0) == pytest.approx(1.0)


def test_majorant_gaps_nonconcave():
    # increments (1, 1, 2): the hull through (1/3, 1) and (1, 2) passes above m_2
    grid = SampleGrid(1, 3, [0, 1, 1, 2])
    assert lattice_increments(grid).tolist() == [1.0, 1.0, 2.0]
    assert majorant_gaps(grid) == [2]
    assert majorant_gaps(SampleGrid(1, 2, [0, 0.5, 1])) == []


def test_upper_hull_drops_collinear():
    assert upper_hull([(0, 0), (1, 1), (2, 2)]) == [(0, 0), (2, 2)]


def test_modulus_json_round_trip():
    w = holder_modulus(2, 0.5, 1.5, num_knots=8)
    back = loads(dumps(w))
    assert back.knots == w.knots and back.T == w.T


def test_modulus_bad_document():
    with pytest.raises(ParseError):
        loads('{"format": "nope"}')


def _increments_oracle(grid):
    pts = lattice_points(grid.d, grid.n)
    m = np.zeros(grid.n * grid.d)
    for a in range(grid.size):
        for b in range(grid.size):
            k = int(np.abs(pts[a] - pts[b]).sum())
            if k:
                m[k - 1] = max(m[k - 1], abs(grid.values[a] - grid.values[b]))
    return m


grids = st.tuples(st.integers(1, 2), st.integers(1, 3)).flatmap(
    lambda dn: st.builds(lambda v: SampleGrid(dn[0], dn[1], v),
                         st.lists(st.floats(-5, 5, allow_nan=False), min_size=(dn[1] + 1) ** dn[0],
                                  max_size=(dn[1] + 1) ** dn[0])))


@given(grids)
def test_increments_match_brute_force(grid):
    np.testing.assert_allclose(lattice_increments(grid), _increments_oracle(grid), rtol=0, atol=0)


@given(grids, st.lists(st.floats(0, 1), min_size=2, max_size=2))
def test_fitted_modulus_monotone_concave(grid, st_pair):
    w = min_concave_from_grid(grid)
    s, t = sorted(v * grid.d for v in st_pair)
    ws, wt, wm = eval_modulus(w, s), eval_modulus(w, t), eval_modulus(w, (s + t) / 2)
    tol = 1e-12 * max(1.0, abs(wt))
    assert ws <= wt + tol
    if s > 0:
        assert wm >= (ws + wt) / 2 - tol


@given(grids)
def test_fitted_modulus_majorizes(grid):
    w = min_concave_from_grid(grid)
    m = lattice_increments(grid)
    vals = eval_modulus(w, np.arange(1, m.size + 1) / grid.n)
    assert np.all(vals >= m - 1e-12 * max(1.0, m.max(initial=0)))


@given(st.floats(0, 3), st.floats(-1, 1), st.integers(1, 2), st.integers(1, 4))
def test_lipschitz_restriction_below_Lt(L, b, d, n):
    pts = lattice_points(d, n) / n
    grid = SampleGrid(d, n, L * pts[:, 0] + b)
    w = min_concave_from_grid(grid)
    for i in range(1, n * d + 1):
        assert eval_modulus(w, i / n) <= L * i / n + 1e-12


@given(st.floats(0, 4), st.floats(0.05, 1), st.floats(0.5, 3), st.floats(0, 1), st.floats(0, 1))
def test_holder_monotone_concave(nu, alpha, T, a, c):
    w = holder_modulus(nu, alpha, T)
    s, t = sorted((a * T, c * T))
    assert eval_modulus(w, s) <= eval_modulus(w, t) + 1e-12
    assert eval_modulus(w, (s + t) / 2) >= (eval_modulus(w, s) + eval_modulus(w, t)) / 2 - 1e-12
