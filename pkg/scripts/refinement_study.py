"""Refinement table for one domain and eta, plus the distance to the disc oracle when it applies."""
import argparse
import math

from diracgap.cli import _angle
from diracgap.convergence import convergence_study
from diracgap.disc_analytic import k0
from diracgap.geometry import BoundaryCurve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--domain", help="domain JSON (default unit disc)")
    ap.add_argument("--eta", type=_angle, default=0.0)
    ap.add_argument("--levels", default="0.4,0.2,0.1,0.05,0.025")
    args = ap.parse_args()

    curve = BoundaryCurve.from_json(args.domain) if args.domain else BoundaryCurve.disc(1.0)
    hs = [float(x) for x in args.levels.split(",")]
    st = convergence_study(curve, args.eta, hs)
    oracle = k0(curve.R) if curve.kind == "disc" and abs(math.cos(args.eta)) == 1 else None
    print(f"{'h':>8} {'dim':>8} {'sqrt_mu1':>14} {'error':>10}")
    for h, dim, g in zip(st.hs, st.dims, st.sqrt_mu1):
        err = f"{abs(g - oracle):10.2e}" if oracle else f"{'':>10}"
        print(f"{h:8.4f} {dim:8d} {g:14.10f} {err}")
    ext = st.extrapolation
    print(f"Richardson: {ext.value:.10f} (order {ext.order:.2f}, error estimate {ext.estimate:.1e})")
    if oracle:
        print(f"disc oracle k0 = {oracle:.10f}, extrapolation error {abs(ext.value - oracle):.1e}")


if __name__ == "__main__":
    main()
