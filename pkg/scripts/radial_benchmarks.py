"""Radial cavity resonances: whispering-gallery trend and convergence to the asymptotic formula."""
import argparse

from resforge.radial import RadialCavity, asymptotic_resonance, lowest_branch_resonance, newton_radial


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n0", type=float, default=2.0)
    ap.add_argument("--ell-max", type=int, default=9)
    ap.add_argument("--jmax", type=int, default=20)
    args = ap.parse_args()

    print("lowest resonance on the whispering-gallery branch")
    print(" ell   disk                          ball")
    for ell in range(args.ell_max + 1):
        w2 = lowest_branch_resonance(RadialCavity(2, args.n0, 1.0, ell)).omega
        w3 = lowest_branch_resonance(RadialCavity(3, args.n0, 1.0, ell)).omega
        print(f"{ell:4d}   {w2.real:9.6f} {w2.imag:+.3e}i      {w3.real:9.6f} {w3.imag:+.3e}i")

    print("\n|w_j - asymptotic_j| for the ball")
    print("   j " + "".join(f"   ell={ell:<5d}" for ell in range(5)))
    for j in range(args.jmax + 1):
        line = f"{j:4d} "
        for ell in range(5):
            c = RadialCavity(3, args.n0, 1.0, ell)
            seed = asymptotic_resonance(c, j)
            w, _ = newton_radial(c, seed)
            line += f"  {abs(w - seed):10.3e}"
        print(line)


if __name__ == "__main__":
    main()
