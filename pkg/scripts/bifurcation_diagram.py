"""Constant stationary states of the symmetric system as the parameter a varies.

Writes one row per root: a, C0, C1, product, classification.
"""
import argparse
from pathlib import Path

import numpy as np

from wrjump.kernels import KernelSpec
from wrjump.model import ModelParams
from wrjump.stationary import constant_solutions


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a-min", type=float, default=0.25)
    ap.add_argument("--a-max", type=float, default=8.0)
    ap.add_argument("--points", type=int, default=200)
    ap.add_argument("--out", default="results/bifurcation.csv")
    args = ap.parse_args()

    k = KernelSpec.with_mass("gaussian", 1.0, 1.0, 1)
    model = ModelParams(1, k, k, k, k)
    rows = ["a,C0,C1,product,classification"]
    for a in np.linspace(args.a_min, args.a_max, args.points):
        for pt in constant_solutions(a, a, model):
            rows.append(f"{a!r},{pt.C0!r},{pt.C1!r},{pt.product!r},{pt.classification}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(rows) + "\n")
    print(f"{len(rows) - 1} states written to {out}")


if __name__ == "__main__":
    main()
