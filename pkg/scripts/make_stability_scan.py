#!/usr/bin/env python3
"""Map the oscillatory region over the (K_h/K_s, 1/alpha) plane.

Each grid cell recomputes the positive equilibrium and its Jacobian trace
and determinant in closed form; cells left of the admissibility diagonal
have no positive equilibrium at all.  The grid goes to ``stability_scan.csv``
and the refined trace-zero boundary to ``hopf_boundary.csv``.
"""
import argparse
import sys
from pathlib import Path

from phoscil._fmt import fmt17, write_csv
from phoscil.gspt import stability_scan
from phoscil.params import UREASE_VESICLE, derive_dimensionless


def _span(text: str) -> tuple[float, float]:
    lo, _, hi = text.partition(":")
    return float(lo), float(hi)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--kh-over-ks", type=_span, default=(1.0, 16.0),
                        metavar="LO:HI", help="transport-ratio range (default 1:16)")
    parser.add_argument("--inv-alpha", type=_span, default=(1.0, 16.0),
                        metavar="LO:HI", help="1/alpha range (default 1:16)")
    parser.add_argument("--grid", type=int, default=200,
                        help="points per axis (default: %(default)s)")
    parser.add_argument("--out", type=Path, default=Path("."))
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args(argv)

    dp = derive_dimensionless(UREASE_VESICLE)
    sm = stability_scan(dp, args.kh_over_ks, args.inv_alpha,
                        (args.grid, args.grid), workers=args.workers)

    args.out.mkdir(parents=True, exist_ok=True)
    grid_path = args.out / "stability_scan.csv"
    sm.to_csv(grid_path, provenance=[
        f"kh_over_ks = {args.kh_over_ks[0]:g}..{args.kh_over_ks[1]:g}",
        f"inv_alpha = {args.inv_alpha[0]:g}..{args.inv_alpha[1]:g}",
        f"grid = {args.grid}x{args.grid}",
    ])
    hopf_path = args.out / "hopf_boundary.csv"
    write_csv(hopf_path, ["kh_over_ks", "inv_alpha"],
              [[fmt17(x), fmt17(y)] for x, y in sm.hopf],
              provenance=["trace-zero boundary, bisection-refined per column"])

    n_osc = int(sm.oscillates.sum())
    n_adm = int(sm.admissible.sum())
    print(f"{n_osc} oscillatory / {n_adm} admissible cells; "
          f"{len(sm.hopf)} boundary points")
    print(f"wrote {grid_path} and {hopf_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
