"""Tangent and Jacobi exponents side by side on a stable and a chaotic orbit."""
import argparse

import numpy as np

from geospread.acceptance import harmonic_orbit, hh_chaotic_state
from geospread.geodesic import JacobiVariationalState, jacobi_exponent
from geospread.integrate import RunConfig
from geospread.systems import henon_heiles
from geospread.tangent import benettin_exponent, random_unit_state


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-max", type=float, default=1000.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cases = {
        "harmonic omega=(1, sqrt 2)": harmonic_orbit(np.sqrt(2)),
        "Henon-Heiles E=1/8": (henon_heiles(), hh_chaotic_state()),
    }
    cfg = RunConfig(dt=1e-3, t_max=args.t_max, record_stride=1000, t_min_guard=1e-9,
                    guard_action="flag", energy_drift_tol=1e-4)
    for name, (spec, x0) in cases.items():
        lt = benettin_exponent(spec, x0, random_unit_state(spec.n_dof, args.seed), cfg)
        lj = jacobi_exponent(spec, x0, random_unit_state(spec.n_dof, args.seed,
                                                         JacobiVariationalState), cfg)
        print(f"{name:<28} lambda_T={lt.lambda_t[-1]:.4e}  lambda_J={lj.lambda_t[-1]:.4e}"
              f"  guard_hits={int(lj.t_guard_hits[-1])}")


if __name__ == "__main__":
    main()
