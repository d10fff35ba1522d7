"""Exact memorisation of 1-D samples with the slope of the linear interpolant."""

import numpy as np

from kuhnnet import (CapacityError, Samples1D, build_memorizer_deep, build_memorizer_sqrt, count_nonzero_params,
                     deep_capacity, evaluate, widthvec)
from kuhnnet.pwl1d import exact_lipschitz_1d


def main():
    rng = np.random.default_rng(1)
    for k in (9, 25, 100):
        xs = np.sort(rng.choice(1000, k, replace=False)) / 100
        s = Samples1D(xs, rng.normal(size=k))
        net = build_memorizer_sqrt(s)
        err = np.abs(evaluate(net, xs[:, None])[:, 0] - s.ys).max()
        chord = np.abs(np.diff(s.ys) / np.diff(xs)).max()
        print(f"K={k:3d}: widthvec {widthvec(net)}, params {count_nonzero_params(net)} "
              f"(budget {2 * k + 8 * int(np.ceil(np.sqrt(k)))}), err {err:.1e}, "
              f"Lipschitz {exact_lipschitz_1d(net):.4f} vs chords {chord:.4f}")

    widths = (20, 20, 20)
    cap = deep_capacity(widths)
    xs = np.sort(rng.choice(1000, cap, replace=False)) / 100
    s = Samples1D(xs, rng.normal(size=cap))
    net = build_memorizer_deep(s, widths)
    err = np.abs(evaluate(net, xs[:, None])[:, 0] - s.ys).max()
    print(f"\ndeep widths {widths}: capacity {cap}, widthvec {widthvec(net)}, err {err:.1e}")
    try:
        build_memorizer_deep(Samples1D(np.arange(cap + 1.0), np.zeros(cap + 1)), widths)
    except CapacityError as e:
        print("one more sample:", e)


if __name__ == "__main__":
    main()
