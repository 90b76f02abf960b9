"""Find the initial speed at which the adaptive braking distance hits a target."""
import argparse

from scipy.optimize import brentq

from nlpadapt.scenarios import wheel


def distance(v0, h):
    return wheel.braking_distance(wheel.run(wheel.AbsConfig(v0=v0), h=h))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--target", type=float, default=54.95)
    ap.add_argument("--lo", type=float, default=30.0)
    ap.add_argument("--hi", type=float, default=32.5)
    ap.add_argument("--h", type=float, default=wheel.DEFAULT_STEP)
    args = ap.parse_args()
    v0 = brentq(lambda v: distance(v, args.h) - args.target, args.lo, args.hi, xtol=1e-4)
    print(f"v0 = {v0:.4f} m/s gives {distance(v0, args.h):.3f} m (target {args.target} m)")


if __name__ == "__main__":
    main()
