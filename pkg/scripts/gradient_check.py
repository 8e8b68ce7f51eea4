"""Adjoint gradient against central finite differences on random 16-cell structures."""
import argparse

import numpy as np

from resforge.core import SearchRect, Structure
from resforge.forward1d import find_resonances
from resforge.gradient import compute_alpha, finite_difference_gradient, gradient_cells


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--structures", type=int, default=10)
    ap.add_argument("--cells", type=int, default=16)
    ap.add_argument("--seed", type=int, default=99)
    ap.add_argument("--h", type=float, default=1e-5)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print("structure  omega                        max rel err   alpha mismatch")
    for i in range(args.structures):
        s = Structure.uniform_grid(rng.uniform(1.0, 2.0, args.cells))
        roots = find_resonances(s, SearchRect(0.5, 12.0, -2.0, -1e-3))
        for p in sorted(roots, key=lambda q: abs(q.omega.imag))[:3]:
            g = gradient_cells(p).complex
            fd = np.array([finite_difference_gradient(s, p.omega, k, h=args.h) for k in range(args.cells)])
            a1, a2 = compute_alpha(p)
            err = np.max(np.abs(g - fd) / np.abs(fd))
            print(f"{i:9d}  {p.omega.real:11.6f}{p.omega.imag:+.6f}i   {err:11.2e}   {abs(a1 - a2) / abs(a1):.2e}")


if __name__ == "__main__":
    main()
