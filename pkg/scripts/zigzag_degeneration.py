"""How the bound and the FEM gap behave as eta approaches the zigzag point pi/2.

B(eta) -> 0 linearly in (pi/2 - eta) while the computed gap stays bounded
away from zero, so the bound becomes uninformative near the zigzag point.
"""
import argparse
import math

import numpy as np

from diracgap.boundary import BoundaryFamily
from diracgap.eigen import smallest_eigenpairs
from diracgap.fem import assemble
from diracgap.geometry import BoundaryCurve, area, triangulate
from diracgap.theorem import gap_lower_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--n", type=int, default=12)
    args = ap.parse_args()

    curve = BoundaryCurve.disc(1.0)
    mesh = triangulate(curve, args.h)
    A = area(curve)
    print(f"{'eta':>10} {'pi/2-eta':>10} {'B':>10} {'bound':>10} {'gap_fem':>10} {'ratio':>8}")
    for d in np.geomspace(1.0, 1e-3, args.n):
        eta = math.pi / 2 - d
        fam = BoundaryFamily.from_eta(eta)
        gap = smallest_eigenpairs(assemble(mesh, fam), k=2).gaps[0]
        bound = gap_lower_bound(A, eta)
        print(f"{eta:10.6f} {d:10.2e} {fam.B:10.3e} {bound:10.3e} {gap:10.5f} {gap / bound:8.2f}")


if __name__ == "__main__":
    main()
