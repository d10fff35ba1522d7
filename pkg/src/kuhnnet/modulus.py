"""Moduli of regularity.

A modulus is a concave, non-decreasing function on ``[0, T]`` with value 0
at 0.  It may jump at the origin: ``jump`` is the right limit at 0, which
lets discontinuous targets carry a modulus too.  Internally every modulus
is piecewise linear through its knots.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError, ParseError
from .net import loads_json

MODULUS_FORMAT = "kuhnnet-modulus/1"
CLAMPED = "clamped"
UNDEFINED = "undefined"

_REL_TOL = 1e-12


@dataclass(frozen=True)
class Modulus:
    T: float
    jump: float
    knots: tuple[tuple[float, float], ...]
    extension: str = CLAMPED
    # True when the knots sample an analytic modulus and only they are exact
    knot_exact: bool = False

    def __post_init__(self):
        knots = tuple((float(t), float(w)) for t, w in self.knots)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "jump", float(self.jump))
        if not (np.isfinite(self.T) and self.T > 0):
            raise InputError("T must be a positive real")
        if not (np.isfinite(self.jump) and self.jump >= 0):
            raise InputError("jump must be a non-negative real")
        if self.extension not in (CLAMPED, UNDEFINED):
            raise InputError(f"unknown extension mode {self.extension!r}")
        if not knots:
            raise InputError("a modulus needs at least one knot")
        ts = np.array([k[0] for k in knots])
        ws = np.array([k[1] for k in knots])
        if not (np.isfinite(ts).all() and np.isfinite(ws).all()):
            raise InputError("knots must be finite")
        if ts[0] <= 0 or np.any(np.diff(ts) <= 0) or abs(ts[-1] - self.T) > _REL_TOL * self.T:
            raise InputError("knot abscissae must increase strictly on (0, T] and end at T")
        prev_t, prev_w = 0.0, self.jump
        prev_slope = np.inf
        for t, w in knots:
            slope = (w - prev_w) / (t - prev_t)
            scale = max(1.0, abs(prev_w), abs(w))
            if w < prev_w - _REL_TOL * scale:
                raise InputError(f"modulus must be non-decreasing (knot at t={t})")
            if slope > prev_slope + _REL_TOL * max(1.0, abs(prev_slope)):
                raise InputError(f"modulus must be concave (slope increases at t={prev_t})")
            prev_t, prev_w, prev_slope = t, w, slope

    def __call__(self, t):
        return eval_modulus(self, t)

    def clamped(self) -> "Modulus":
        return Modulus(self.T, self.jump, self.knots, CLAMPED, self.knot_exact)


def eval_modulus(omega: Modulus, t):
    """Value of ``omega`` at ``t``; vectorised over arrays."""
    arr = np.asarray(t, dtype=np.float64)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("modulus arguments must be non-negative")
    if omega.extension == UNDEFINED and np.any(arr > omega.T):
        raise DomainError(f"modulus is undefined beyond T={omega.T}")
    xs = np.array([0.0] + [k[0] for k in omega.knots])
    ys = np.array([omega.jump] + [k[1] for k in omega.knots])
    out = np.interp(arr, xs, ys)  # clamps to the last knot beyond T
    out = np.where(arr == 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def lipschitz_modulus(L: float, T: float) -> Modulus:
    if not (np.isfinite(L) and L >= 0):
        raise DomainError("L must be a non-negative real")
    return Modulus(T, 0.0, ((T, L * T),))


def holder_modulus(nu: float, alpha: float, T: float, num_knots: int = 64) -> Modulus:
    """``nu * t**alpha`` sampled on ``num_knots`` equispaced knots.

    Between knots the stored interpolant lies below the true modulus, so
    guarantees derived from it hold at knot arguments.
    """
    if not (0 < alpha <= 1):
        raise DomainError("alpha must lie in (0, 1]")
    if not (np.isfinite(nu) and nu >= 0):
        raise DomainError("nu must be a non-negative real")
    if alpha == 1:
        return lipschitz_modulus(nu, T)
    ts = T * np.arange(1, num_knots + 1) / num_knots
    return Modulus(T, 0.0, tuple(zip(ts, nu * ts ** alpha)), knot_exact=True)


def affine_jump_modulus(jump: float, L: float, T: float) -> Modulus:
    """``jump + L t`` for ``t > 0``: a Lipschitz target plus bounded noise."""
    return Modulus(T, jump, ((T, jump + L * T),))


def upper_hull(points) -> list[tuple[float, float]]:
    """Upper convex hull of points sorted by abscissa (monotone chain).

    Collinear middle points are dropped.
    """
    pts = sorted((float(x), float(y)) for x, y in points)
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] unless it lies strictly above the chord hull[-2] -> p
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def lattice_increments(grid) -> np.ndarray:
    """``m[i-1]`` = largest value gap between lattice points ``i`` steps apart in l1."""
    d, n = grid.d, grid.n
    idx = np.array(np.unravel_index(np.arange(grid.size), (n + 1,) * d)).T
    vals = grid.values
    m = np.zeros(n * d)
    chunk = max(1, 2_000_000 // max(1, grid.size))
    for s in range(0, grid.size, chunk):
        dist = np.abs(idx[s:s + chunk, None, :] - idx[None, :, :]).sum(axis=2)
        gap = np.abs(vals[s:s + chunk, None] - vals[None, :])
        for i in range(1, n * d + 1):
            sel = dist == i
            if sel.any():
                m[i - 1] = max(m[i - 1], gap[sel].max())
    return m


def min_concave_from_grid(grid) -> Modulus:
    """Least concave non-decreasing majorant of the lattice increments.

    The result passes through every hull vertex of ``{(0,0)} ∪ {(i/n, m_i)}``;
    :func:`majorant_gaps` lists the indices where it lies strictly above.
    """
    n, d = grid.n, grid.d
    m = lattice_increments(grid)
    pts = [(0.0, 0.0)] + [(i / n, m[i - 1]) for i in range(1, n * d + 1)]
    # the point (d, max m) keeps the majorant non-decreasing after its peak
    pts.append((float(d), float(m.max(initial=0.0))))
    hull = upper_hull(pts)
    knots = tuple((t, w) for t, w in hull if t > 0)
    return Modulus(float(d), 0.0, knots)


def majorant_gaps(grid, omega: Modulus | None = None) -> list[int]:
    """Step counts ``i`` where the fitted modulus exceeds ``m_i``."""
    omega = omega or min_concave_from_grid(grid)
    m = lattice_increments(grid)
    vals = eval_modulus(omega, np.arange(1, len(m) + 1) / grid.n)
    return [i + 1 for i in range(len(m)) if vals[i] > m[i]]


def to_dict(omega: Modulus) -> dict:
    return {
        "format": MODULUS_FORMAT,
        "T": omega.T,
        "jump": omega.jump,
        "knots": [[t, w] for t, w in omega.knots],
        "extension": omega.extension,
    }


def dumps(omega: Modulus) -> str:
    return json.dumps(to_dict(omega), allow_nan=False)


def from_dict(doc) -> Modulus:
    if not isinstance(doc, dict) or doc.get("format") != MODULUS_FORMAT:
        raise ParseError(f"format: expected {MODULUS_FORMAT!r}")
    try:
        knots = [(float(t), float(w)) for t, w in doc["knots"]]
        return Modulus(float(doc["T"]), float(doc["jump"]), knots, doc.get("extension", CLAMPED))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"invalid modulus document: {e}") from None


def loads(data) -> Modulus:
    return from_dict(loads_json(data))
