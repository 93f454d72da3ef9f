"""Four-spinor infinite-mass and armchair problems against their two-spinor blocks."""
import argparse
import json
import math

from diracgap.boundary import BoundaryFamily, ValleyBoundary
from diracgap.fem import assemble_first_order
from diracgap.geometry import BoundaryCurve, triangulate
from diracgap.valley import assemble_four_spinor, permute_armchair, spectral_equivalence_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--domain", help="domain JSON (default unit disc)")
    args = ap.parse_args()

    curve = BoundaryCurve.from_json(args.domain) if args.domain else BoundaryCurve.disc(1.0)
    mesh = triangulate(curve, args.h)
    k0 = assemble_first_order(mesh, BoundaryFamily.from_eta(0.0))
    kpi = assemble_first_order(mesh, BoundaryFamily.from_eta(math.pi))
    report = {"infinite-mass": spectral_equivalence_check(
        assemble_four_spinor(mesh, ValleyBoundary("infinite-mass")), k0, two_spinor_pi=kpi)}
    for phase in (0.0, math.pi / 3, 2.0):
        prob = assemble_four_spinor(mesh, ValleyBoundary.armchair(phase))
        _, structure = permute_armchair(prob)
        report[f"armchair phase={phase:.4f}"] = {**spectral_equivalence_check(prob, k0), **structure}
    print(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
