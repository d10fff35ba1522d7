"""Measurement oracles, the generalization-bound calculator and the verifier."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .builder import check_structure
from .errors import InputError
from .kuhn import SampleGrid, cpwl_eval, exact_lipschitz_l1, lattice_points, simplex_vertices, KuhnSimplexRef
from .modulus import Modulus, eval_modulus
from .net import ReluNet, evaluate
from .report import Check, VerificationReport

DEFAULT_SEED = 0
EXACT_TOL = 1e-9
DEEP_TOL = 1e-6
_MAX_STRUCTURED = 200_000


def _box(domain, d):
    lo, hi = domain
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), (d,))
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), (d,))
    if np.any(hi < lo):
        raise InputError("domain upper corner lies below the lower corner")
    return lo, hi


def _call(target, pts, vectorized):
    if vectorized:
        return np.asarray(target(pts), dtype=np.float64).reshape(-1)
    return np.array([float(target(p)) for p in pts])


def _out(net, pts):
    return evaluate(net, pts)[:, 0]


def lattice_scan_points(d: int, n: int) -> np.ndarray:
    """Lattice points, cell midpoints and simplex barycentres in the unit cube."""
    pts = [lattice_points(d, n) / n]
    cells = lattice_points(d, n - 1) if n > 1 else np.zeros((1, d), dtype=np.int64)
    pts.append((cells + 0.5) / n)
    if cells.shape[0] * math.factorial(d) <= _MAX_STRUCTURED:
        centers = []
        for cell in cells:
            for perm in itertools.permutations(range(d)):
                verts = simplex_vertices(KuhnSimplexRef(tuple(int(c) for c in cell), perm))
                centers.append(np.mean(verts, axis=0))
        pts.append(np.array(centers) / n)
    return np.vstack(pts)


def scan_points(d: int, num_points: int, seed: int = DEFAULT_SEED, domain=(0.0, 1.0),
                n: int | None = None) -> np.ndarray:
    lo, hi = _box(domain, d)
    parts = []
    if num_points > 0:
        halton = qmc.Halton(d, scramble=True, seed=seed)
        parts.append(lo + (hi - lo) * halton.random(num_points))
    if n is not None:
        parts.append(lo + (hi - lo) * lattice_scan_points(d, n))
    return np.vstack(parts) if parts else np.zeros((0, d))


def sup_error_scan(net: ReluNet, target, d: int | None = None, num_points: int = 10_000,
                   seed: int = DEFAULT_SEED, domain=(0.0, 1.0), n: int | None = None,
                   vectorized: bool = True) -> float:
    """Largest ``|target - net|`` over low-discrepancy points plus, when ``n`` is
    given, every lattice point, cell midpoint and simplex barycentre."""
    d = net.input_dim if d is None else d
    if d != net.input_dim:
        raise InputError("target and net dimensions disagree")
    pts = scan_points(d, num_points, seed, domain, n)
    return float(np.abs(_call(target, pts, vectorized) - _out(net, pts)).max(initial=0.0))


def _ratios(net, x, y):
    dist = np.abs(x - y).sum(axis=1)
    keep = dist > 0
    if not keep.any():
        return 0.0
    diff = np.abs(_out(net, x[keep]) - _out(net, y[keep]))
    return float((diff / dist[keep]).max())


def empirical_lipschitz(net: ReluNet, num_pairs: int = 10_000, seed: int = DEFAULT_SEED,
                        domain=(0.0, 1.0), n: int | None = None, offset: float = 1e-4) -> float:
    """Largest difference quotient in the l1 norm over sampled pairs.

    Uses uniform random pairs, near-coincident pairs ``offset`` apart and,
    when ``n`` is given, every lattice edge.  This is a lower estimate of
    the true Lipschitz constant.
    """
    if num_pairs < 1:
        raise InputError("num_pairs must be positive")
    d = net.input_dim
    lo, hi = _box(domain, d)
    rng = np.random.default_rng(seed)
    x = lo + (hi - lo) * rng.random((num_pairs, d))
    y = lo + (hi - lo) * rng.random((num_pairs, d))
    best = _ratios(net, x, y)
    near = num_pairs // 2 + 1
    base = lo + (hi - lo) * rng.random((near, d))
    step = rng.normal(size=(near, d))
    step *= offset / np.maximum(np.abs(step).sum(axis=1, keepdims=True), 1e-300)
    best = max(best, _ratios(net, base, np.clip(base + step, lo, hi)))
    if n is not None:
        grid = lattice_points(d, n)
        for axis in range(d):
            start = grid[grid[:, axis] < n]
            end = start.copy()
            end[:, axis] += 1
            best = max(best, _ratios(net, lo + (hi - lo) * start / n, lo + (hi - lo) * end / n))
    return best


# generalization bound

def c_d(d: int) -> float:
    """``(8(d+1)^2 16^d)^(1/(d+3)) + 2^(5/2) 16^(d/(d+3)) / (18(d+1))^((d+1)/(d+3))``."""
    if d < 1:
        raise InputError("d must be a positive integer")
    e = 1.0 / (d + 3)
    return (8 * (d + 1) ** 2 * 16.0 ** d) ** e + 2 ** 2.5 * 16.0 ** (d * e) / (18 * (d + 1)) ** ((d + 1) * e)


@dataclass(frozen=True)
class BoundTerms:
    confidence: float
    parameter_space: float
    function_space: float
    total: float

    @property
    def active(self) -> str:
        return "function" if self.function_space <= self.parameter_space else "parameter"


def bound_terms(Delta: int, W: int, L: float, L_loss: float, d: int, N: int, delta: float,
                C: float = 1.0, C_dX: float = 1.0) -> BoundTerms:
    """Terms of the generalization bound for depth ``Delta``, width ``W``,
    Lipschitz constant ``L`` of the hypotheses, loss Lipschitz constant
    ``L_loss``, input dimension ``d`` and ``N`` samples, at confidence
    ``1 - delta``.

    The parameter-space term is evaluated in log space and overflows to
    ``inf``.  ``C`` is accepted for interface compatibility but does not
    enter the displayed bound; ``C_dX`` is a caller-supplied constant.
    """
    for name, v in (("Delta", Delta), ("W", W), ("N", N), ("d", d)):
        if isinstance(v, bool) or int(v) != v or v < 1:
            raise InputError(f"{name} must be a positive integer")
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    if not (L >= 0 and L_loss >= 0 and math.isfinite(L) and math.isfinite(L_loss)):
        raise InputError("L and L_loss must be finite and non-negative")
    if not (C > 0 and C_dX > 0 and math.isfinite(C) and math.isfinite(C_dX)):
        raise InputError("C and C_dX must be positive")
    log_conf = math.log(4.0 / delta)
    confidence = math.sqrt(8 * log_conf) / math.sqrt(N)
    param = 4.0 / N ** 1.5
    if N > 1:
        inner = math.sqrt(d) + C_dX * math.sqrt(N) + C_dX * math.sqrt(log_conf)
        lg = (math.log(26) + math.log(math.log(N)) + math.log(math.log(2 * W)) + 1.5 * Delta * math.log(W)
              - max(0, Delta - 2) * math.log(2) - math.log(N) + math.log(inner))
        param += math.exp(lg) if lg < 700 else math.inf
    func = c_d(d) * L ** (d / (d + 3)) / N ** (1.0 / (d + 3))
    total = confidence + 2 * L_loss * min(param, func)
    return BoundTerms(confidence, param, func, total)


def generalization_bound(Delta, W, L, L_loss, d, N, delta, C=1.0, C_dX=1.0) -> float:
    return bound_terms(Delta, W, L, L_loss, d, N, delta, C, C_dX).total


# verification

@dataclass(frozen=True)
class VerifyOptions:
    seed: int = DEFAULT_SEED
    scan_points: int = 10_000
    pairs: int = 10_000
    kind: str = "flat"          # "flat", "global" or "shaped"
    structure: bool = True
    tolerance: float = EXACT_TOL


def verify_all(net: ReluNet, grid: SampleGrid, modulus: Modulus | None = None, target=None,
               options: VerifyOptions | None = None) -> VerificationReport:
    """Check a built net against its grid.

    Interpolation at the lattice, agreement with the Kuhn interpolant,
    Lipschitz constant against the exact grid value, the error bound
    ``ω(d/2n)`` when a target and modulus are supplied, and, depending on
    ``options.kind``, the weight structure and support of a flat build or
    the clamp identity of a global one.
    """
    opt = options or VerifyOptions()
    d, n, tol = grid.d, grid.n, opt.tolerance
    if net.input_dim != d:
        raise InputError(f"net takes {net.input_dim} inputs but the grid has d={d}")
    rep = VerificationReport()
    lat = lattice_points(d, n) / n
    rep.add(Check("interpolation", float(np.abs(_out(net, lat) - grid.values).max()), 0.0, tol,
                  samples=len(lat), detail="max deviation at lattice points"))

    rng = np.random.default_rng(opt.seed)
    pts = rng.random((opt.scan_points, d))
    bary = cpwl_eval(grid, pts)
    rep.add(Check("oracle_agreement", float(np.abs(_out(net, pts) - bary).max(initial=0.0)), 0.0, tol,
                  samples=len(pts), seed=opt.seed, detail="net against the Kuhn interpolant"))

    if target is not None and modulus is not None:
        err = sup_error_scan(net, target, d, opt.scan_points, opt.seed, n=n)
        bound = float(eval_modulus(modulus.clamped(), d / (2 * n)))
        rep.add(Check("error_bound", err, bound, tol, samples=opt.scan_points, seed=opt.seed,
                      detail="sup error against omega(d/2n)"))

    lip_domain = (-2.0, 3.0) if opt.kind == "global" else (0.0, 1.0)
    emp = empirical_lipschitz(net, opt.pairs, opt.seed, domain=lip_domain, n=n if opt.kind != "global" else None)
    rep.add(Check("lipschitz", emp, exact_lipschitz_l1(grid), tol, samples=opt.pairs, seed=opt.seed,
                  detail="empirical l1 Lipschitz against the exact grid constant"))

    if opt.kind == "flat":
        if opt.structure:
            rep.extend(check_structure(net, grid))
        far = _outside_points(d, n, opt.pairs, rng)
        rep.add(Check("support", float(np.abs(_out(net, far)).max(initial=0.0)), 0.0, tol,
                      samples=len(far), seed=opt.seed, detail="|net| outside [-1/n, 1+1/n]^d"))
    elif opt.kind == "global":
        wide = -2.0 + 5.0 * rng.random((opt.scan_points, d))
        gap = np.abs(_out(net, wide) - _out(net, np.clip(wide, 0.0, 1.0))).max(initial=0.0)
        rep.add(Check("clamp", float(gap), 0.0, tol, samples=len(wide), seed=opt.seed,
                      detail="net(x) against net(clamp(x)) on [-2, 3]^d"))
    return rep


def _outside_points(d, n, count, rng):
    pts = -2.0 + 5.0 * rng.random((4 * count, d))
    inside = np.all((pts >= -1.0 / n) & (pts <= 1.0 + 1.0 / n), axis=1)
    return pts[~inside][:count]


def median_input_check(points) -> Check:
    """Flags inputs outside the non-negative domain the median net is built for."""
    pts = np.asarray(points, dtype=np.float64)
    worst = float(-pts.min(initial=0.0))
    return Check("median_inputs_nonnegative", max(worst, 0.0), 0.0, samples=int(pts.shape[0]) if pts.ndim else 1,
                 detail="most negative median-net input")


def extrapolation_excess(net: ReluNet, target, modulus: Modulus, d: int, num_points: int,
                         seed: int = DEFAULT_SEED, domain=(-2.0, 3.0), vectorized: bool = True) -> float:
    """``max |f - net| - ω(dist(x, cube))`` over random points of ``domain``.

    ``dist`` is the l1 distance to the unit cube, ``Σ_i (x_i - 1)_+ + (-x_i)_+``.
    """
    lo, hi = _box(domain, d)
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((num_points, d))
    dist = (np.maximum(pts - 1.0, 0.0) + np.maximum(-pts, 0.0)).sum(axis=1)
    err = np.abs(_call(target, pts, vectorized) - _out(net, pts))
    return float((err - eval_modulus(modulus.clamped(), dist)).max(initial=-math.inf))
