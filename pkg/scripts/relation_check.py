"""Residual of the spread relation vs dtau, with the wrong-identity control."""
import argparse

from geospread.acceptance import A4_DIRECTION, harmonic_orbit
from geospread.compare import relation_residual
from geospread.integrate import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-max", type=float, default=50.0)
    ap.add_argument("--scheme", choices=("central", "forward"), default="central")
    args = ap.parse_args()
    spec, x0 = harmonic_orbit(2.0)
    for dtau in (1e-5, 1e-6, 1e-7):
        cfg = RunConfig(dt=1e-3, t_max=args.t_max, dtau=dtau)
        exact = relation_residual(spec, x0, A4_DIRECTION, cfg, scheme=args.scheme)
        wrong = relation_residual(spec, x0, A4_DIRECTION, cfg, identity="wrong",
                                  scheme=args.scheme)
        print(f"dtau={dtau:g}  residual={exact.max_residual:.3e}"
              f"  wrong_identity={wrong.max_residual:.3e}")


if __name__ == "__main__":
    main()
