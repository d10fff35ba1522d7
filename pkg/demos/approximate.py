"""Build the interpolating net for a few targets and check it against its guarantees."""

import numpy as np

from kuhnnet import VerifyOptions, build_approximator, build_global, encode, evaluate, verify_all
from kuhnnet.analysis import extrapolation_excess
from kuhnnet.targets import get_target


def main():
    d = 2
    for name in ("min-coords", "ridge", "heaviside-perturbed"):
        t = get_target(name, d)
        for n in (2, 4, 8):
            grid = encode(t, d, n, vectorized=True)
            rep = build_approximator(grid)
            checks = verify_all(rep.net, grid, t.modulus(d), t, VerifyOptions(scan_points=5000, pairs=5000))
            err = checks["error_bound"]
            print(f"{name:20s} n={n}: width {rep.width:4d}/{rep.bound_width:<5d} depth {rep.depth}/{rep.bound_depth} "
                  f"params {rep.nonzero_params:5d}/{rep.bound_params:<5d} "
                  f"sup err {err.measured:.4f} <= {err.bound:.4f}  all checks {'ok' if checks.passed else 'FAILED'}")

    # the clamped variant keeps the modulus off the cube
    t = get_target("ridge", d)
    glob = build_global(encode(t, d, 4, vectorized=True))
    excess = extrapolation_excess(glob.net, t, t.modulus(d), d, 20000)
    print(f"\nglobal variant on [-2, 3]^2: max |f - net| - omega(dist) = {excess:.4f} (bound {t.modulus(d)(d / 8):.4f})")
    x = np.array([[-1.0, 0.3], [0.0, 0.3], [2.5, 0.9], [1.0, 0.9]])
    print("outward normals leave the output unchanged:", np.round(evaluate(glob.net, x)[:, 0], 6).tolist())


if __name__ == "__main__":
    main()
