"""Mesh-refinement studies and Richardson extrapolation of the lowest gap."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import BoundaryFamily
from .eigen import DEFAULT_SEED, DEFAULT_TOL, smallest_eigenpairs
from .fem import assemble
from .geometry import BoundaryCurve, triangulate

DEFAULT_LEVELS = (0.2, 0.1, 0.05)
# Fallback order when the three levels do not converge monotonically.
NOMINAL_ORDER = 2.0


@dataclass
class Richardson:
    value: float
    estimate: float
    order: float
    monotone: bool


def richardson(hs, qs) -> Richardson:
    """Extrapolate q(h) -> q(0) from the last three levels of a geometric sequence."""
    hs = np.asarray(hs, dtype=float)
    qs = np.asarray(qs, dtype=float)
    if len(hs) < 3:
        raise ValueError("Richardson extrapolation needs at least three levels")
    h1, h2, h3 = hs[-3:]
    q1, q2, q3 = qs[-3:]
    if not (h1 > h2 > h3 > 0):
        raise ValueError(f"mesh sizes must decrease, got {hs[-3:].tolist()}")
    r = h2 / h3
    if abs(h1 / h2 - r) > 1e-9 * r:
        raise ValueError("Richardson extrapolation needs a constant refinement ratio")
    d12, d23 = q1 - q2, q2 - q3
    monotone = d12 * d23 > 0 and abs(d23) < abs(d12)
    if monotone:
        p = math.log(d12 / d23) / math.log(r)
    else:
        p = NOMINAL_ORDER
    corr = (q3 - q2) / (r**p - 1.0)
    return Richardson(value=q3 + corr, estimate=abs(corr), order=p, monotone=monotone)


@dataclass
class ConvergenceStudy:
    hs: list[float]
    mu1: list[float]
    dims: list[int]
    extrapolation: Richardson
    results: list = field(default_factory=list, repr=False)

    @property
    def sqrt_mu1(self) -> list[float]:
        return [math.sqrt(max(m, 0.0)) for m in self.mu1]

    @property
    def budget(self) -> float:
        """Three times the Richardson error estimate of the finest gap value."""
        return 3.0 * self.extrapolation.estimate

    def rows(self):
        """CSV rows: h, mu1, sqrt_mu1, richardson_estimate, observed_order."""
        out = []
        for i, (h, mu) in enumerate(zip(self.hs, self.mu1)):
            last = i == len(self.hs) - 1
            out.append(
                {
                    "h": h,
                    "mu1": mu,
                    "sqrt_mu1": math.sqrt(max(mu, 0.0)),
                    "richardson_estimate": self.extrapolation.value if last else "",
                    "observed_order": self.extrapolation.order if last else "",
                }
            )
        return out


def convergence_study(
    curve: BoundaryCurve,
    eta: float,
    hs=DEFAULT_LEVELS,
    k: int = 2,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    keep_results: bool = False,
) -> ConvergenceStudy:
    """Lowest squared-form eigenvalue over a refinement sequence, extrapolated on sqrt(mu1)."""
    fam = BoundaryFamily.from_eta(eta)
    hs = [float(h) for h in hs]
    mus, dims, results = [], [], []
    for h in hs:
        prob = assemble(triangulate(curve, h), fam)
        res = smallest_eigenpairs(prob, k=k, tol=tol, seed=seed)
        mus.append(float(res.eigenvalues[0]))
        dims.append(prob.dim)
        if keep_results:
            results.append((prob, res))
    ext = richardson(hs, [math.sqrt(max(m, 0.0)) for m in mus])
    return ConvergenceStudy(hs=hs, mu1=mus, dims=dims, extrapolation=ext, results=results)
