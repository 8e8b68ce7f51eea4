"""Quarter-wave band gap and the gap-to-midgap ratio as a function of the layer ratio gamma."""
import argparse
import math

from resforge.bragg import LayeredMedium, first_gap_edges, parse_range, scan_gamma


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", default="0.01:0.01:1.99")
    ap.add_argument("--d", type=float, default=1.0)
    args = ap.parse_args()

    grid = parse_range(args.gamma)
    print("  n1    n2    center      width       ratio   argmax R   argmax width")
    for n1, n2 in [(1.0, 2.0), (1.0, 3.0), (1.5, 2.5), (1.0, 1.5)]:
        g = first_gap_edges(LayeredMedium.quarter_wave(n1, n2, args.d))
        sc = scan_gamma(n1, n2, args.d, grid)
        print(f"{n1:5.2f} {n2:5.2f}  {g.center:9.6f}  {g.width:9.6f}  {g.ratio:9.6f}"
              f"  {sc.argmax:8.3f}  {sc.argmax_width:12.3f}")
    g = first_gap_edges(LayeredMedium.quarter_wave(1.0, 2.0, 1.0))
    print(f"\nn = (1, 2), d = 1: center - 3 pi/4 = {g.center - 3 * math.pi / 4:.2e}, "
          f"width - 3 asin(1/3) = {g.width - 3 * math.asin(1 / 3):.2e}")


if __name__ == "__main__":
    main()
