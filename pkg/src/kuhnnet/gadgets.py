"""Small explicit networks: max trees, a median network and 1-D memorizers."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._assembly import Affine, Builder, const, total
from .errors import CapacityError, InputError, ParseError
from .net import Layer, ReluNet, loads_json
from .pwl1d import pieces


@dataclass(frozen=True, eq=False)
class Samples1D:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=np.float64).reshape(-1)
        ys = np.array(self.ys, dtype=np.float64).reshape(-1)
        if xs.shape != ys.shape:
            raise InputError("x and y need the same length")
        if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
            raise InputError("samples must be finite")
        if np.any(np.diff(xs) <= 0):
            raise InputError("sample abscissae must increase strictly")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def __len__(self):
        return self.xs.size

    @classmethod
    def from_pairs(cls, pairs) -> "Samples1D":
        pairs = list(pairs)
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    def interpolate(self, t):
        """Piecewise-linear interpolant with constant tails."""
        return np.interp(t, self.xs, self.ys)

    def slope_at(self, t: float) -> float:
        """Slope of the interpolant at a point that is not a sample."""
        i = int(np.searchsorted(self.xs, t))
        if i == 0 or i == len(self.xs):
            return 0.0
        return float((self.ys[i] - self.ys[i - 1]) / (self.xs[i] - self.xs[i - 1]))


def loads_samples(text: str) -> Samples1D:
    """Samples from CSV (``x,y`` per line, optional header) or a JSON list of pairs."""
    stripped = text.lstrip()
    if stripped.startswith("["):
        doc = loads_json(stripped)
        if not isinstance(doc, list) or any(not isinstance(p, list) or len(p) != 2 for p in doc):
            raise ParseError("expected a JSON list of [x, y] pairs")
        try:
            return Samples1D.from_pairs(doc)
        except (TypeError, ValueError) as e:
            raise ParseError(f"invalid samples: {e}") from None
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    pairs = []
    for line, r in enumerate(rows, 1):
        if len(r) != 2:
            raise ParseError(f"line {line}: expected two columns")
        try:
            pairs.append((float(r[0]), float(r[1])))
        except ValueError:
            if line == 1:
                continue  # header
            raise ParseError(f"line {line}: malformed number") from None
    if not pairs:
        raise ParseError("no samples found")
    try:
        return Samples1D.from_pairs(pairs)
    except ValueError as e:
        raise ParseError(str(e)) from None


def dumps_samples(samples: Samples1D) -> str:
    return json.dumps([[float(x), float(y)] for x, y in zip(samples.xs, samples.ys)])


def load_samples(path) -> Samples1D:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_samples(fh.read())


# max trees

def _pair_max(b: Builder, a: Affine, c: Affine) -> Affine:
    # max{a,c} = (a+c)/2 + |a-c|/2, the halves folded into the neurons
    return (b.relu(0.5 * (a + c)) - b.relu(-0.5 * (a + c))
            + b.relu(0.5 * (a - c)) + b.relu(0.5 * (c - a)))


def build_max_net(k: int, m: int | None = None) -> ReluNet:
    """Maximum of ``m <= 2**k`` reals with a ``k``-level pairwise tree.

    Elements without a partner at some level pass through ``σ(x) - σ(-x)``.
    """
    m = 2 ** k if m is None else m
    if k < 1 or m < 1 or m > 2 ** k:
        raise InputError("need k >= 1 and 1 <= m <= 2**k")
    b = Builder(m)
    elems = b.inputs()
    for _ in range(k):
        nxt = [_pair_max(b, elems[i], elems[i + 1]) for i in range(0, len(elems) - 1, 2)]
        if len(elems) % 2:
            nxt.append(b.pass_signed(elems[-1]))
        b.commit()
        elems = nxt
    return b.finish(elems)


# median of 2d+1 non-negative numbers

def _min_pair(b: Builder, a: Affine, c: Affine) -> list[Affine]:
    return [b.relu(a + c), b.relu(-a - c), b.relu(a - c), b.relu(c - a)]


def _min_from(parts: list[Affine]) -> Affine:
    return 0.5 * (parts[0] - parts[1] - parts[2] - parts[3])


def median_layers(b: Builder, inputs: list[Affine]) -> Affine:
    """Append the median network to ``b``; returns the median as a form over the last layer.

    The inputs must be non-negative.  The first stage finds the smallest
    input and the smallest total distance ``s0 = min_k sum_j |n_k - n_j|``
    in four layers per input; the second stage walks from the minimum
    towards the median along the convex total-distance function.
    """
    p = len(inputs)
    if p % 2 == 0:
        raise InputError("the median network needs an odd number of inputs")
    d = p // 2
    nv = list(inputs)
    min_n = min_d = None
    for k in range(p):
        # A: pairwise gaps to n_k
        new_n = [b.relu(v) for v in nv]
        gaps = [b.relu(nv[k] - nv[j]) for j in range(p) if j != k]
        gaps += [b.relu(nv[j] - nv[k]) for j in range(p) if j != k]
        carry_n = b.relu(min_n) if min_n is not None else None
        carry_d = b.relu(min_d) if min_d is not None else None
        b.commit()
        nv, dist = new_n, total(gaps)
        # B: total distance D(n_k) and the pieces of min(min_n, n_k)
        new_n = [b.relu(v) for v in nv]
        dist_b = b.relu(dist)
        parts_n = _min_pair(b, carry_n, nv[k]) if carry_n is not None else None
        carry_d = b.relu(carry_d) if carry_d is not None else None
        b.commit()
        nv = new_n
        # C: running min of the inputs, pieces of min(min_d, D(n_k))
        new_n = [b.relu(v) for v in nv]
        min_n = b.relu(_min_from(parts_n)) if parts_n is not None else None
        parts_d = _min_pair(b, carry_d, dist_b) if carry_d is not None else None
        dist_c = b.relu(dist_b) if carry_d is None else None
        b.commit()
        nv = new_n
        # D: running min of the total distances
        new_n = [b.relu(v) for v in nv]
        min_n = b.relu(min_n) if min_n is not None else b.relu(nv[0])
        min_d = b.relu(_min_from(parts_d)) if parts_d is not None else b.relu(dist_c)
        b.commit()
        nv = new_n
    x, s0 = min_n, min_d
    for i in range(1, d + 1):
        # A': gaps from x; the inputs themselves are recovered from x and the gaps
        up = [b.relu(x - v) for v in nv]
        down = [b.relu(v - x) for v in nv]
        x_a, s_a = b.relu(x), b.relu(s0)
        b.commit()
        # B': total distance D(x)
        nv = [b.relu(x_a - u + w) for u, w in zip(up, down)]
        dist = b.relu(total(up) + total(down))
        x_b, s_b = b.relu(x_a), b.relu(s_a)
        b.commit()
        step = x_b + (dist - s_b) / (p - 2 * i)
        if i == d:
            return step
        # C'
        nv = [b.relu(v) for v in nv]
        x, s0 = b.relu(step), b.relu(s_b)
        b.commit()
    return x  # d == 0: a single input is its own median


def build_median_net(d: int) -> ReluNet:
    """Median of ``2d+1`` non-negative inputs; width ``6d+3``, depth ``11d+3``."""
    if d < 1:
        raise InputError("d must be a positive integer")
    b = Builder(2 * d + 1)
    out = median_layers(b, b.inputs())
    return b.finish([out])


# two-hidden-layer memorizer

@dataclass(frozen=True)
class TwoLayerPlan:
    """``σ(x - knot_i)`` in the first layer, ``σ(init_r + Σ_i jumps[r,i] σ(x - knot_i))``
    in the second, and ``Σ_r out_r (...)`` at the output."""

    knots: np.ndarray
    init: np.ndarray
    jumps: np.ndarray
    out: np.ndarray

    def row_value(self, r: int, t: float) -> float:
        return float(self.init[r] + np.dot(self.jumps[r], np.maximum(t - self.knots, 0.0)))

    def row_tail_slope(self, r: int) -> float:
        return float(self.jumps[r].sum())


def _exact_jumps(xs, ys) -> list[Fraction]:
    """Derivative jumps of the interpolant at each sample, in exact arithmetic."""
    fx = [Fraction(float(v)) for v in xs]
    fy = [Fraction(float(v)) for v in ys]
    k = len(fx)
    slopes = [Fraction(0)] + [(fy[i + 1] - fy[i]) / (fx[i + 1] - fx[i]) for i in range(k - 1)] + [Fraction(0)]
    return [slopes[i + 1] - slopes[i] for i in range(k)]


def _expansion(knots, values, tail_slope):
    """``(init, jumps)`` with ``init + Σ jumps_i σ(t - knots_i)`` through ``values`` at the knots."""
    seg = [(values[i + 1] - values[i]) / (knots[i + 1] - knots[i]) for i in range(len(knots) - 1)]
    seg.append(tail_slope)
    jumps = np.array([seg[0]] + [seg[i] - seg[i - 1] for i in range(1, len(seg))])
    return values[0], jumps


def _jump_matcher(knots, members, zeros, slopes):
    """``(init, jumps)`` of the function that has the given slope on each member
    interval ``[knot_i, knot_i+1]``, vanishes at the matching zero, is linear
    in between and constant before.  Kinks appear only at member endpoints."""
    nb = len(knots)
    defined: dict[int, float] = {}
    exact: dict[int, float] = {}  # slope on [knot_i, knot_i+1] for members
    for i, z, s in zip(members, zeros, slopes):
        defined[i] = s * (knots[i] - z)
        if i + 1 < nb:
            defined[i + 1] = s * (knots[i + 1] - z)
        exact[i] = s
    idx = sorted(defined)
    seg = []
    for lo, hi in zip(idx[:-1], idx[1:]):
        seg.append(exact[lo] if lo in exact and hi == lo + 1
                   else (defined[hi] - defined[lo]) / (knots[hi] - knots[lo]))
    seg.append(slopes[-1] if members[-1] == nb - 1 else 0.0)
    jumps = np.zeros(nb)
    prev = 0.0
    for q, sl in zip(idx, seg):
        jumps[q] = sl - prev
        prev = sl
    return defined[idx[0]], jumps


def two_layer_plan(samples: Samples1D, M: int, N: int) -> TwoLayerPlan:
    k = len(samples)
    if k == 0:
        raise InputError("no samples")
    if M < 1 or N < 1:
        raise InputError("M and N must be positive")
    if k > M * N:
        raise CapacityError(f"{k} samples exceed the capacity M*N = {M * N}", M * N)
    xs, ys = samples.xs, samples.ys
    nb = -(-k // N)
    knots = np.array([xs[i * N] for i in range(nb)])
    jumps = _exact_jumps(xs, ys)

    rows, outs = [], []
    plus_minus: list[tuple[np.ndarray, float, int]] = []
    for j in range(1, N):
        for r in (0, 1):
            for sign in (1, -1):
                members = [i for i in range(r, nb, 2)
                           if i * N + j < k and (jumps[i * N + j] > 0 if sign > 0 else jumps[i * N + j] < 0)]
                if not members:
                    rows.append((0.0, np.zeros(nb)))
                    outs.append(float(sign))
                    continue
                zs = [xs[i * N + j] for i in members]
                ss = [(-1) ** (m + 1) * float(jumps[i * N + j]) for m, i in enumerate(members)]
                init, c = _jump_matcher(knots, members, zs, ss)
                rows.append((init, c))
                outs.append(float(sign))
    partial = TwoLayerPlan(knots, np.array([r[0] for r in rows]),
                           np.array([r[1] for r in rows]).reshape(len(rows), nb), np.array(outs))

    def rest(t):
        # f minus the jump-matching part; breaks only at the knots
        acc = samples.interpolate(t)
        for r in range(len(rows)):
            acc -= partial.out[r] * max(partial.row_value(r, t), 0.0)
        return acc

    far = max(xs[-1], knots[-1]) + 1.0
    vals = np.array([rest(t) for t in knots])
    tail = (rest(far) - vals[-1]) / (far - knots[-1])
    init0, c0 = _expansion(knots, vals, tail)
    init = np.concatenate([partial.init, [init0, -init0]])
    jm = np.vstack([partial.jumps, c0[None, :], -c0[None, :]])
    return TwoLayerPlan(knots, init, jm, np.concatenate([partial.out, [1.0, -1.0]]))


def build_memorizer_2layer(samples: Samples1D, M: int, N: int) -> ReluNet:
    """Interpolating net with widthvec ``[M, 4N-2]``.

    First-layer neurons beyond the ``ceil(K/N)`` needed knots are inert.
    """
    plan = two_layer_plan(samples, M, N)
    nb = plan.knots.size
    w1 = np.zeros((M, 1))
    w1[:nb, 0] = 1.0
    b1 = np.zeros(M)
    b1[:nb] = -plan.knots
    w2 = np.zeros((len(plan.init), M))
    w2[:, :nb] = plan.jumps
    return ReluNet((Layer(w1, b1), Layer(w2, plan.init), Layer(plan.out[None, :], [0.0])), 1)


def sqrt_shape(k: int) -> tuple[int, int]:
    c = math.isqrt(k - 1) + 1 if k > 1 else 1
    return 2 * c, -(-c // 2)


def build_memorizer_sqrt(samples: Samples1D) -> ReluNet:
    """Width ``<= 2 ceil(sqrt K)``, depth 2."""
    if len(samples) == 0:
        raise InputError("no samples")
    M, N = sqrt_shape(len(samples))
    return build_memorizer_2layer(samples, M, N)


# deep memorizer

def deep_capacity(widths) -> int:
    """``Σ_b ((n_b - 11) floor((n_{b+1} - 9)/4) - 2)`` over consecutive width pairs."""
    w = list(widths)
    return sum((w[b] - 11) * ((w[b + 1] - 9) // 4) - 2 for b in range(len(w) - 1))


def _separation_points(batches, L, xs):
    """Triples ``X_t < Y_t < Z_t``; triple ``t`` precedes batch ``t``, the last one follows all batches."""
    span = float(xs[-1] - xs[0]) if len(xs) > 1 else 1.0
    span = span if span > 0 else 1.0
    groups: dict[tuple, list[int]] = {}
    for t in range(L):
        before = [s for bt in batches[:t] for s in bt]
        after = [s for bt in batches[t:] for s in bt]
        lo = float(xs[before[-1]]) if before else None
        hi = float(xs[after[0]]) if after else None
        groups.setdefault((lo, hi), []).append(t)
    trip = {}
    for (lo, hi), ts in groups.items():
        if lo is None and hi is None:
            lo, hi = 0.0, 1.0
        elif lo is None:
            lo = hi - span
        elif hi is None:
            hi = lo + span
        count = 3 * len(ts)
        pts = [lo + (hi - lo) * (q + 1) / (count + 1) for q in range(count)]
        for r, t in enumerate(ts):
            trip[t] = tuple(pts[3 * r:3 * r + 3])
    return [trip[t] for t in range(L)]


@dataclass
class _Batch:
    plan: TwoLayerPlan | None
    lo: float          # Z of the preceding triple
    hi: float          # X of the following triple
    tail: float        # slope of the chord removed from the target on [lo, hi]


def build_memorizer_deep(samples: Samples1D, widths) -> ReluNet:
    """Interpolating net with widthvec at most ``[n_1, ..., n_L, 8]``.

    Samples are split into ``L-1`` batches.  Batch ``b`` is memorised on
    its own interval, relative to the chord of the target across that
    interval, by a two-layer net whose second layer doubles, after a small
    correction, as the first layer of the next batch's net.  Adding a steep
    linear term makes each batch net increasing, a clamp confines it to its
    interval, and a final combination of ReLUs at the separation points
    restores the target.
    """
    widths = [int(w) for w in widths]
    L = len(widths)
    if L < 3 or any(w <= 11 for w in widths):
        raise InputError("need at least three widths, all greater than 11")
    k = len(samples)
    cap = deep_capacity(widths)
    if k > cap:
        raise CapacityError(f"{k} samples exceed the capacity {cap} of widths {tuple(widths)}", cap)
    if k == 0:
        return _constant_net(0.0, [1] * (L + 1))
    ks = [w - 11 for w in widths]
    ns = [(ks[b + 1] + 2) // 4 for b in range(L - 1)]
    caps = [max(0, ks[b] * ns[b] - 2) for b in range(L - 1)]
    batches, pos = [], 0
    for c in caps:
        batches.append(list(range(pos, min(k, pos + c))))
        pos = min(k, pos + c)
    xs, ys = samples.xs, samples.ys
    trip = _separation_points(batches, L, xs)

    info = []
    for b in range(L - 1):
        lo, hi = trip[b][2], trip[b + 1][0]
        flo, fhi = float(samples.interpolate(lo)), float(samples.interpolate(hi))
        tail = (fhi - flo) / (hi - lo)
        if not batches[b]:
            info.append(_Batch(None, lo, hi, tail))
            continue
        bx = [lo] + [float(xs[i]) for i in batches[b]] + [hi]
        by = [0.0] + [float(ys[i] - (flo + tail * (xs[i] - lo))) for i in batches[b]] + [0.0]
        info.append(_Batch(two_layer_plan(Samples1D(bx, by), ks[b], ns[b]), lo, hi, tail))

    _, measured = _deep_assemble(samples, trip, info, L, None)
    net, _ = _deep_assemble(samples, trip, info, L, measured)
    return net


def _constant_net(value: float, widthvec) -> ReluNet:
    layers, cols = [], 1
    for w in widthvec:
        layers.append(Layer(np.zeros((w, cols)), np.zeros(w)))
        cols = w
    layers.append(Layer(np.zeros((1, cols)), [value]))
    return ReluNet(tuple(layers), 1)


def _deep_assemble(samples, trip, info, L, known):
    """One assembly pass.  Without ``known`` the monotonizing slopes are measured
    and returned; with them the separation-point corrections are included."""
    ws: dict[int, float] = {} if known is None else dict(known[0])
    anchors: dict[int, tuple[float, float]] = {} if known is None else dict(known[1])
    measuring = known is None

    def jump_x(t):  # derivative jump of the remainder at X_t
        src = info[t - 1]
        if measuring or src.plan is None:
            return 0.0
        return ws[t - 1] + samples.slope_at(trip[t][0]) - src.tail

    def jump_z(t):  # derivative jump of the remainder at Z_t
        if t >= L - 1 or measuring or info[t].plan is None:
            return 0.0
        return -(samples.slope_at(trip[t][2]) - info[t].tail + ws[t])

    b_ = Builder(1)
    x = b_.inputs()[0]
    first = info[0].plan
    h1 = [b_.relu(x - kn) for kn in first.knots] if first is not None else []
    x = b_.pass_signed(x)
    seps = _sep_channels(b_, b_.inputs()[0], trip[1], jump_x(1), jump_z(1))
    b_.commit()

    sum_q: Affine | None = None
    q_prev: Affine | None = None        # Q of batch b-2, over the current layer
    phi_prev: Affine | None = None      # batch net output of batch b-1, over the current layer
    uv: Affine | None = None
    for b in range(L - 1):
        cur, nxt = info[b], info[b + 1] if b + 1 < L - 1 else None
        xt, yt = trip[b + 1][0], trip[b + 1][1]
        rows = []
        if cur.plan is not None:
            p = cur.plan
            rows = [p.init[r] + total(p.jumps[r, i] * h1[i] for i in range(len(h1))) for r in range(len(p.init))]
        need = len(nxt.plan.knots) if nxt is not None and nxt.plan is not None else 0
        while len(rows) < need:
            rows.append(const(0.0))
        hidden, mimic = [], []
        for r, g in enumerate(rows):
            if r < need:
                if cur.plan is not None and r < len(cur.plan.init):
                    gx, sg = cur.plan.row_value(r, xt), cur.plan.row_tail_slope(r)
                else:
                    gx, sg = 0.0, 0.0
                knot = nxt.plan.knots[r]
                lam = max(1.0, abs(sg))
                s = -lam if gx > 0 else lam
                v = -s * (knot - yt)
                pcoef = (v - gx) / (yt - xt) - sg
                qcoef = s - sg - pcoef
                g = g + pcoef * seps["x"] + qcoef * seps["y"]
                hidden.append(b_.relu(g))
                mimic.append((s, knot))
            else:
                hidden.append(b_.relu(g))
        phi = None
        if cur.plan is not None:
            phi = total(cur.plan.out[r] * hidden[r] for r in range(len(cur.plan.init)))
        x_next = b_.pass_signed(x)
        if b + 2 <= L - 1:
            new_seps = _sep_channels(b_, x, trip[b + 2], jump_x(b + 2), jump_z(b + 2))
        else:
            new_seps = _sep_channels(b_, x, trip[0], 0.0, jump_z(0))
        q_pair = _monotone_clamp(b_, phi_prev, x, b - 1, info, ws, anchors, measuring)
        sum_q = _carry_sum(b_, sum_q, q_prev)
        uv = _carry_sum(b_, uv, seps["uv"])
        b_.commit()
        h1 = [(hd / s) if s > 0 else (x_next - knot - hd / s) for hd, (s, knot) in zip(hidden, mimic)]
        x, seps, phi_prev = x_next, new_seps, phi
        q_prev = q_pair(x) if q_pair is not None else None

    q_pair = _monotone_clamp(b_, phi_prev, x, L - 2, info, ws, anchors, measuring)
    sum_q = _carry_sum(b_, sum_q, q_prev)
    uv = _carry_sum(b_, uv, seps["uv"])
    x_last = b_.pass_signed(x)
    b_.commit()
    out = const(0.0)
    for part in (sum_q, uv, q_pair(x_last) if q_pair is not None else None):
        if part is not None:
            out = out + part
    if not measuring:
        y0 = float(samples.ys[0])
        slope = sum(ws.values())
        offset = y0 - sum(anchors[b][0] + ws[b] * info[b].lo for b in ws)
        out = out + slope * x_last + offset
    return b_.finish([out]), ((ws, anchors) if measuring else None)


def _sep_channels(b: Builder, x: Affine, triple, ux: float, vz: float) -> dict:
    X, Y, Z = triple
    sx, sy, sz = b.relu(x - X), b.relu(x - Y), b.relu(x - Z)
    return {"x": sx, "y": sy, "uv": ux * sx + vz * sz}


def _carry_sum(b: Builder, acc: Affine | None, add: Affine | None) -> Affine | None:
    if acc is None and add is None:
        return None
    s = (acc if acc is not None else const(0.0)) + (add if add is not None else const(0.0))
    if not s.terms:
        return None if s.const == 0 else s
    return b.pass_signed(s)


def _monotone_clamp(b: Builder, phi: Affine | None, x: Affine, idx: int, info, ws, anchors, measuring):
    """Queue the clamp neurons for batch ``idx``; returns a function giving its
    clamped, de-trended contribution over the next layer."""
    if idx < 0 or phi is None:
        return None
    bt = info[idx]
    if measuring:
        probe = b.peek([phi])
        w = pieces(probe).lipschitz() + 1.0
        ws[idx] = w
        anchors[idx] = (float(probe(np.array([bt.lo]))[0]), float(probe(np.array([bt.hi]))[0]))
    w = ws[idx]
    a_lo = anchors[idx][0] + w * bt.lo
    a_hi = anchors[idx][1] + w * bt.hi
    q = phi + w * x
    up, top = b.relu(q - a_lo), b.relu(q - a_hi)
    return lambda xn: up - top + a_lo - w * xn
