"""Finite-form identity residual and its observed order as the step is halved."""
import argparse
import math

from nlpadapt.core import virtual_equivalence_check
from nlpadapt.scenarios import REGISTRY, wheel

START = {"spring": 2e-2, "sine": 2e-2, "linear": 2e-2, "abs": 2e-4}


def run(name, h, tf):
    sc = REGISTRY[name]
    return sc.run(sc.config_cls(), h=h, tf=tf)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", choices=sorted(REGISTRY), default="spring")
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--tf", type=float)
    args = ap.parse_args()
    tf = args.tf or (3.0 if args.scenario == "abs" else 20.0)
    h = START[args.scenario]
    prev = None
    print("h\tresidual\torder")
    for _ in range(args.levels):
        r = virtual_equivalence_check(run(args.scenario, h, tf)).residual
        order = "" if prev is None else f"{math.log2(prev / r):.3f}"
        print(f"{h:.3e}\t{r:.3e}\t{order}")
        prev, h = r, h / 2
    if args.scenario == "abs":
        print(f"(samples within {wheel.SWITCH_SETTLE:g} s after a road switch are skipped)")


if __name__ == "__main__":
    main()
