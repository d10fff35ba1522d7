"""The generalization bound as the sample size grows.

A tiny net with a large Lipschitz constant is governed by its parameter
count; a huge net falls back to the Lipschitz term, so its bound does not
explode with depth or width.
"""

from kuhnnet import bound_terms, c_d


def main():
    d = 5
    print(f"C_d for d = 1..5: {', '.join(f'{c_d(k):.4f}' for k in range(1, 6))}\n")
    print(f"{'N':>9} {'small net':>10} {'active':>10} {'huge net':>10} {'active':>10}")
    for e in range(6, 21, 2):
        N = 2 ** e
        small = bound_terms(1, 2, 100.0, 1.0, d, N, 0.05)
        huge = bound_terms(500, 10**6, 100.0, 1.0, d, N, 0.05)
        print(f"{N:9d} {small.total:10.4f} {small.active:>10} {huge.total:10.4f} {huge.active:>10}")


if __name__ == "__main__":
    main()
