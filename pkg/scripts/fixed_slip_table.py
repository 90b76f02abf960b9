"""Braking distance for the on-line slip target and a range of fixed targets."""
import argparse

from nlpadapt.scenarios import wheel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--targets", default="0.05,0.1,0.15,0.2,0.3")
    ap.add_argument("--eps", type=float, default=0.0, help="amplitude of eps(t) = a exp(-t)")
    args = ap.parse_args()
    rows = [("adaptive", None)] + [(s, float(s)) for s in args.targets.split(",")]
    print("x3_star\tdistance_m\tfinal_theta_hat")
    for label, x3 in rows:
        tr = wheel.run(wheel.AbsConfig(x3_star=x3, eps_amp=args.eps))
        print(f"{label}\t{wheel.braking_distance(tr):.3f}\t{tr.channel('theta_hat')[-1, 0]:.4f}")


if __name__ == "__main__":
    main()
