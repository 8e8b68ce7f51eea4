"""Energy identities, width bound and exclusion triangle on random admissible structures."""
import argparse
import math

import numpy as np

from resforge.analysis import in_exclusion_triangle, lower_bound_width, variational_residuals
from resforge.core import SearchRect, Structure, symmetrize
from resforge.forward1d import find_resonances


def random_structure(rng, cells, symmetric):
    w = rng.uniform(0.3, 1.0, cells)
    edges = np.concatenate([[0.0], np.cumsum(w) / w.sum()])
    edges[-1] = 1.0
    s = Structure(edges, rng.uniform(1.0, 2.0, cells))
    return symmetrize(s) if symmetric else s


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--re-max", type=float, default=10.0)
    ap.add_argument("--symmetric", action="store_true")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    rect = SearchRect(-args.re_max, args.re_max, -3.0, -1e-6)
    worst = {"re": 0.0, "im": 0.0, "tau": 0.0}
    margin, n_roots, in_triangle, incomplete = math.inf, 0, 0, 0
    for _ in range(args.count):
        s = random_structure(rng, int(rng.integers(1, 9)), args.symmetric)
        roots = find_resonances(s, rect)
        incomplete += not roots.complete
        n_plus = float(np.max(s.n))
        for p in roots:
            r = variational_residuals(p)
            worst["re"] = max(worst["re"], r.re_residual)
            worst["im"] = max(worst["im"], r.im_residual)
            if not math.isnan(r.width_identity_residual):
                worst["tau"] = max(worst["tau"], r.width_identity_residual)
            lb = lower_bound_width(abs(p.omega.real), n_plus, s.L)
            margin = min(margin, abs(p.omega.imag) - lb)
            in_triangle += in_exclusion_triangle(p.omega, n_plus, s.L)
            n_roots += 1
    print(f"structures {args.count}, resonances {n_roots}, incomplete searches {incomplete}")
    print(f"max relative residual: real {worst['re']:.2e}, imaginary {worst['im']:.2e}, width {worst['tau']:.2e}")
    print(f"min |Im w| - bound: {margin:.3e}")
    print(f"resonances inside the exclusion triangle: {in_triangle}")


if __name__ == "__main__":
    main()
