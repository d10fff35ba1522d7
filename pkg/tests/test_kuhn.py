import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kuhnnet import (DomainError, InputError, KuhnSimplexRef, ResourceError, SampleGrid, cpwl_eval,
                     exact_lipschitz_l1, hat_value, locate_simplex)
from kuhnnet.errors import ParseError
from kuhnnet.kuhn import (check_lattice, dumps_grid, dumps_grid_csv, lattice_points, loads_grid,
                          loads_grid_csv, simplex_vertices)


def brute_hat(y, z):
    # hat formula written out per coordinate, no vectorisation
    even = [abs(zi - yi) for zi, yi in zip(z, y) if yi % 2 == 0]
    odd = [abs(zi - yi) for zi, yi in zip(z, y) if yi % 2 == 1]
    return max(0.0, 1.0 - max(even, default=0.0) - max(odd, default=0.0))


def brute_cpwl(grid, x):
    z = [xi * grid.n for xi in x]
    return sum(v * brute_hat(y, z) for y, v in zip(lattice_points(grid.d, grid.n), grid.values))


def lstsq_cpwl(grid, x):
    # affine fit through the vertices of the containing simplex
    z = np.asarray(x) * grid.n
    verts = np.array(simplex_vertices(locate_simplex(z, grid.n)))
    idx = [np.ravel_multi_index(tuple(v), (grid.n + 1,) * grid.d) for v in verts]
    A = np.hstack([verts, np.ones((len(verts), 1))])
    coef = np.linalg.solve(A, grid.values[idx])
    return float(np.append(z, 1.0) @ coef)


def random_grid(rng, d, n):
    return SampleGrid(d, n, rng.uniform(-1, 1, (n + 1) ** d))


def test_hat_peak_and_zeros():
    for y in itertools.product(range(3), repeat=2):
        assert hat_value(y, y) == 1.0
        for z in itertools.product(range(3), repeat=2):
            if z != y:
                assert hat_value(z, y) == 0.0


def test_hat_midpoint():
    assert hat_value((0, 0), (0.5, 0.5)) == 0.5
    assert brute_hat((0, 0), (0.5, 0.5)) == 0.5


def test_locate_examples():
    assert locate_simplex((0.7, 0.2), 1) == KuhnSimplexRef((0, 0), (0, 1))
    assert locate_simplex((0.5, 0.5), 1) == KuhnSimplexRef((0, 0), (0, 1))
    ref = locate_simplex((1.2, 0.9, 0.4), 2)
    assert ref.cell == (1, 0, 0)
    assert ref.reflection == (1, 0, 0)
    assert ref.perm == (1, 0, 2)


def test_locate_top_boundary_and_domain():
    assert locate_simplex((3.0, 3.0), 3).cell == (2, 2)
    with pytest.raises(DomainError):
        locate_simplex((3.1, 0.0), 3)


def test_vertices_examples():
    assert simplex_vertices(KuhnSimplexRef((0, 0), (0, 1))) == [(0, 0), (1, 0), (1, 1)]
    assert simplex_vertices(KuhnSimplexRef((0,), (0,))) == [(0,), (1,)]
    assert simplex_vertices(KuhnSimplexRef((1, 0), (0, 1))) == [(2, 0), (1, 0), (1, 1)]


def test_cpwl_xor_value():
    grid = SampleGrid(2, 1, [0, 1, 1, 0])
    assert brute_cpwl(grid, (0.25, 0.5)) == pytest.approx(0.25)
    assert cpwl_eval(grid, (0.25, 0.5)) == pytest.approx(0.25, abs=1e-15)
    assert cpwl_eval(grid, (0.25, 0.5), method="hat") == pytest.approx(0.25, abs=1e-15)


def test_cpwl_at_grid_points(rng):
    grid = random_grid(rng, 3, 3)
    out = cpwl_eval(grid, lattice_points(3, 3) / 3)
    np.testing.assert_array_equal(out, grid.values)


def test_cpwl_reproduces_affine(rng):
    a, b = rng.normal(size=3), 0.3
    pts = lattice_points(3, 2) / 2
    grid = SampleGrid(3, 2, pts @ a + b)
    x = rng.random((500, 3))
    np.testing.assert_allclose(cpwl_eval(grid, x), x @ a + b, atol=1e-12)


def test_cpwl_domain_and_method():
    grid = SampleGrid(1, 2, [0, 1, 0])
    with pytest.raises(DomainError):
        cpwl_eval(grid, [1.5])
    with pytest.raises(InputError):
        cpwl_eval(grid, [0.5], method="spline")


def test_lipschitz_examples():
    assert exact_lipschitz_l1(SampleGrid(2, 3, np.full(16, 2.0))) == 0.0
    for d, n in [(1, 1), (2, 3), (3, 2)]:
        pts = lattice_points(d, n) / n
        assert exact_lipschitz_l1(SampleGrid(d, n, pts[:, 0])) == pytest.approx(1.0, abs=1e-12)
    pts = lattice_points(2, 2) / 2
    assert exact_lipschitz_l1(SampleGrid(2, 2, np.abs(pts[:, 0] - 0.5))) == 1.0


def test_lipschitz_matches_dense_pairs(rng):
    grid = random_grid(rng, 2, 3)
    exact = exact_lipschitz_l1(grid)
    x = rng.random((20000, 2))
    step = rng.normal(size=(20000, 2)) * 1e-5
    y = np.clip(x + step, 0, 1)
    dist = np.abs(x - y).sum(axis=1)
    ratio = np.abs(cpwl_eval(grid, x) - cpwl_eval(grid, y)) / dist
    assert ratio.max() <= exact * (1 + 1e-7)
    assert ratio.max() >= 0.95 * exact


def test_lattice_cap(monkeypatch):
    monkeypatch.setenv("KUHNNET_MAX_LATTICE", "100")
    with pytest.raises(ResourceError):
        check_lattice(3, 9)
    assert check_lattice(2, 9) == 100


def test_grid_size_checked():
    with pytest.raises(InputError):
        SampleGrid(2, 2, [1.0] * 8)
    with pytest.raises(InputError):
        SampleGrid(1, 1, [0.0, np.nan])


def test_grid_io_round_trip(rng):
    grid = random_grid(rng, 2, 2)
    assert loads_grid(dumps_grid(grid)).values.tolist() == grid.values.tolist()
    back = loads_grid_csv(dumps_grid_csv(grid))
    assert (back.d, back.n) == (2, 2)
    np.testing.assert_array_equal(back.values, grid.values)


def test_grid_bad_documents():
    with pytest.raises(ParseError):
        loads_grid("not json")
    with pytest.raises(ParseError):
        loads_grid(json.dumps({"format": "kuhnnet-grid/1", "d": 1, "n": 1, "values": [0, 1, 2]}))


dn = st.sampled_from([(1, 1), (1, 4), (2, 1), (2, 3), (3, 2)])


@given(dn, st.integers(0, 2**31))
def test_partition_of_unity(dn, seed):
    d, n = dn
    z = np.random.default_rng(seed).random((200, d)) * n
    total = sum(hat_value(y, z) for y in lattice_points(d, n))
    np.testing.assert_allclose(total, 1.0, atol=1e-9)


@given(dn, st.integers(0, 2**31))
def test_oracles_agree(dn, seed):
    d, n = dn
    rng = np.random.default_rng(seed)
    grid = random_grid(rng, d, n)
    x = rng.random((300, d))
    bary = cpwl_eval(grid, x)
    np.testing.assert_allclose(bary, cpwl_eval(grid, x, method="hat"), atol=1e-9)
    for p in x[:10]:
        assert bary[list(map(tuple, x)).index(tuple(p))] == pytest.approx(brute_cpwl(grid, p), abs=1e-9)
        assert cpwl_eval(grid, p) == pytest.approx(lstsq_cpwl(grid, p), abs=1e-9)


@given(dn, st.floats(1e-6, 3), st.integers(0, 2**31))
def test_regularity_preserved(dn, L, seed):
    d, n = dn
    rng = np.random.default_rng(seed)
    a = L * rng.uniform(-1, 1, d)
    a[np.argmax(np.abs(a))] = L  # l-infinity norm of the gradient is L
    pts = lattice_points(d, n) / n
    grid = SampleGrid(d, n, np.abs(pts - 0.3) @ a)
    assert exact_lipschitz_l1(grid) <= L * (1 + 1e-12)


@given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 2**31))
def test_error_bound_lipschitz_target(n, d, seed):
    if d == 3 and n > 3:
        n = 3
    pts = lattice_points(d, n) / n
    f = lambda x: np.abs(x - 0.37).max(axis=-1)
    grid = SampleGrid(d, n, f(pts))
    x = np.random.default_rng(seed).random((2000, d))
    assert np.abs(f(x) - cpwl_eval(grid, x)).max() <= d / (2 * n) + 1e-9


@given(st.integers(0, 2**31))
def test_face_continuity(seed):
    rng = np.random.default_rng(seed)
    grid = random_grid(rng, 2, 4)
    # points on the diagonal u1 == u2 inside a cell and on cell walls
    t = rng.random(50)
    cell = rng.integers(0, 4, (50, 2))
    on_diag = (cell + t[:, None]) / 4
    wall = np.column_stack([rng.integers(0, 5, 50), rng.random(50) * 4]) / 4
    for p in np.vstack([on_diag, wall]):
        eps = 1e-13
        a = cpwl_eval(grid, np.clip(p + [eps, 0], 0, 1))
        b = cpwl_eval(grid, np.clip(p - [eps, 0], 0, 1))
        assert abs(a - b) <= 1e-11


@given(dn, st.integers(0, 2**31))
def test_lipschitz_correctly_rounded(dn, seed):
    from fractions import Fraction
    d, n = dn
    rng = np.random.default_rng(seed)
    grid = SampleGrid(d, n, rng.uniform(-1, 1, (n + 1) ** d) / 3)
    pts = lattice_points(d, n)
    index = {tuple(p): v for p, v in zip(pts, grid.values)}
    best = Fraction(0)
    for p in pts:
        for axis in range(d):
            q = p.copy()
            q[axis] += 1
            if q[axis] <= n:
                best = max(best, abs(Fraction(float(index[tuple(q)])) - Fraction(float(index[tuple(p)]))))
    assert exact_lipschitz_l1(grid) == float(n * best)
