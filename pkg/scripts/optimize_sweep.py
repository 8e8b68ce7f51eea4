"""Optimize the j = 0..9 widths on [0, 1] with n in [1, 2] and tabulate the optima.

Writes one row per j: omega, transition counts, bang-bang metrics, quarter-wave
comparison and transmission at Re omega.  Structures go to <out>/j<k>.json.
"""
import argparse
import csv
import math
import time
from pathlib import Path

import numpy as np

from resforge.analysis import classify_parity
from resforge.bragg import compare_to_bragg
from resforge.core import InapplicableError, write_structure
from resforge.forward1d import transmission
from resforge.optimizer import OptimizerConfig, extract_transitions, optimize_width


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=512)
    ap.add_argument("--jmax", type=int, default=9)
    ap.add_argument("--out", type=Path, default=Path("sweep"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    header = ["j", "re", "im", "N", "M", "frac_bounds", "asym", "parity", "center_ratio",
              "bragg_dev", "abs_t_center", "band_min_t", "seconds"]
    rows = []
    for j in range(args.jmax + 1):
        t0 = time.perf_counter()
        run = optimize_width(OptimizerConfig(cells=args.cells, j=j))
        dt = time.perf_counter() - t0
        s, w = run.structure, run.omega
        write_structure(s, args.out / f"j{j}.json")
        d = run.diagnostics
        tr = extract_transitions(s, 1.0, 2.0)
        try:
            br = compare_to_bragg(tr, w, 2.0, 1.0)
            center, dev = br.center_width / (2 * br.d_plus), br.max_deviation
        except InapplicableError:
            center = dev = math.nan
        t_c = abs(transmission(s, max(w.real, 1e-6))[0])
        if w.real > 0:
            grid = np.linspace(0, 2 * w.real, 2001)[1:]
            band = min(abs(transmission(s, float(x))[0]) for x in grid)
        else:
            band = math.nan
        par = classify_parity(run.pair.mode).parity.value
        rows.append([j, w.real, w.imag, tr.N, tr.M, d["fraction_at_bounds"], d["asymmetry"], par,
                     center, dev, t_c, band, dt])
        print(" ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in rows[-1]), flush=True)

    with open(args.out / "summary.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)


if __name__ == "__main__":
    main()
