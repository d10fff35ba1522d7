"""Both nets approximate min(x1, x2) to the same accuracy; only one keeps its slope."""

from kuhnnet import build_approximator, build_sota, empirical_lipschitz, encode, sup_error_scan
from kuhnnet.baseline import error_bound, lipschitz_bound
from kuhnnet.targets import get_target


def main():
    d = 2
    t = get_target("min-coords", d)
    print(f"{'n':>3} {'method':>9} {'sup err':>8} {'Lipschitz':>10} {'width':>6} {'depth':>6} {'params':>7}")
    for n in (2, 3, 4):
        kuhn = build_approximator(encode(t, d, n, vectorized=True))
        sota = build_sota(t.fn, 1.0, 1.0, d, n, vectorized=True)
        for label, rep in (("kuhn", kuhn), ("baseline", sota)):
            err = sup_error_scan(rep.net, t, d, 20000, n=n)
            lip = empirical_lipschitz(rep.net, 20000, n=n)
            print(f"{n:3d} {label:>9} {err:8.4f} {lip:10.3f} {rep.width:6d} {rep.depth:6d} {rep.nonzero_params:7d}")
        print(f"    baseline guarantees: error <= {error_bound(1, 1, d, n):.3f}, "
              f"Lipschitz <= {lipschitz_bound(1, 1, d, n):.0f}")


if __name__ == "__main__":
    main()
