"""Floquet exponents of the commensurate oscillator omega = (1, 2) vs step size.

The Jacobi monodromy over one period is unipotent in the continuum, so the
largest exponent shrinks as dt^2 instead of settling on a positive value.
"""
import argparse

import numpy as np

from geospread.acceptance import harmonic_orbit
from geospread.geodesic import floquet_oracle
from geospread.integrate import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--flow", choices=("jacobi", "tangent"), default="jacobi")
    ap.add_argument("--dts", default="4e-3,2e-3,1e-3,5e-4")
    args = ap.parse_args()
    spec, x0 = harmonic_orbit(2.0)
    prev = None
    print("dt         max_exponent   ratio")
    for dt in (float(v) for v in args.dts.split(",")):
        res = floquet_oracle(spec, x0, 2 * np.pi, RunConfig(dt=dt), flow=args.flow)
        ratio = "" if prev is None else f"{prev / res.max_exponent:.3f}"
        print(f"{dt:<10g} {res.max_exponent:<14.6e} {ratio}")
        prev = res.max_exponent


if __name__ == "__main__":
    main()
