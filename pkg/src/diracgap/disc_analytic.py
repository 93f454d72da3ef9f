"""Closed-form infinite-mass spectrum of the disc.

With u = (J_m(kr) e^{i m phi}, i J_{m+1}(kr) e^{i(m+1) phi}) the Dirac equation
T u = k u holds in the disc, and the boundary condition u2 = t u1 with
t = i e^{i phi} on r = R reduces to J_m(kR) = J_{m+1}(kR).

Bessel functions are evaluated here from scratch (ascending series or
Miller's backward recurrence), so this module shares no numerics with the
finite element pipeline it is used to check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_ORDER = 50
MAX_ARG = 100.0
ROOT_TOL = 1e-12
_SERIES_LIMIT = 8.0
SCAN_STEP = 0.02


class BesselDomainError(ValueError):
    pass


class BracketingError(RuntimeError):
    pass


def _series(n: int, x: float) -> float:
    half = 0.5 * x
    term = half**n / math.factorial(n)
    total = term
    q = -half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1e-300) and k > 2:
            return total


def _miller(n: int, x: float) -> float:
    """Backward recurrence normalized by J_0 + 2 * sum_k J_{2k} = 1."""
    m = max(n, int(x))
    start = 2 * ((m + 20 + int(math.sqrt(60 * m))) // 2)
    jp1, j = 0.0, 1e-30
    norm = 0.0
    result = 0.0
    for k in range(start, 0, -1):
        # j holds J_k (unnormalized), jp1 holds J_{k+1}
        jm1 = 2 * k / x * j - jp1
        jp1, j = j, jm1
        if k - 1 == n:
            result = j
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2 * j
        if abs(j) > 1e250:
            j *= 1e-250
            jp1 *= 1e-250
            result *= 1e-250
            norm *= 1e-250
    norm += j  # J_0
    return result / norm


def bessel_j(n: int, x: float) -> float:
    """J_n(x) for integer 0 <= n <= 50 and |x| <= 100, absolute error about 1e-13."""
    if not (0 <= n <= MAX_ORDER) or int(n) != n:
        raise BesselDomainError(f"order n={n} outside 0..{MAX_ORDER}")
    x = float(x)
    if not abs(x) <= MAX_ARG:
        raise BesselDomainError(f"|x|={abs(x)} exceeds {MAX_ARG}")
    n = int(n)
    sign = -1.0 if (x < 0 and n % 2) else 1.0
    x = abs(x)
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x <= _SERIES_LIMIT:
        return sign * _series(n, x)
    return sign * _miller(n, x)


def radial_condition(m: int, x: float) -> float:
    return bessel_j(m, x) - bessel_j(m + 1, x)


@dataclass
class Root:
    value: float
    bracket: tuple[float, float]
    iterations: int
    residual: float


def _polish(f, a: float, b: float, tol: float = ROOT_TOL, maxit: int = 200) -> Root:
    """Safeguarded secant inside a sign-change bracket; bisects when secant stalls."""
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return Root(a, (a, b), 0, 0.0)
    if fb == 0.0:
        return Root(b, (a, b), 0, 0.0)
    if fa * fb > 0:
        raise BracketingError(f"no sign change on [{a}, {b}]")
    bracket = (a, b)
    x0, f0, x1, f1 = a, fa, b, fb
    for it in range(1, maxit + 1):
        x = x1 - f1 * (x1 - x0) / (f1 - f0) if f1 != f0 else 0.5 * (a + b)
        if not (a < x < b) or it % 4 == 0:
            x = 0.5 * (a + b)
        fx = f(x)
        if fa * fx < 0:
            b, fb = x, fx
        else:
            a, fa = x, fx
        x0, f0, x1, f1 = x1, f1, x, fx
        if abs(fx) <= 0.01 * tol or (b - a) <= 4 * np.finfo(float).eps * abs(x):
            return Root(x, bracket, it, abs(fx))
    raise BracketingError(f"root polishing did not converge on {bracket}")


def radial_roots(m: int, x_max: float, count: int, x_min: float = 1e-3, step: float = SCAN_STEP) -> list[Root]:
    """First ``count`` roots of J_m(x) = J_{m+1}(x) on [x_min, x_max]."""
    f = lambda x: radial_condition(m, x)
    roots = []
    a, fa = x_min, f(x_min)
    while a < x_max and len(roots) < count:
        b = min(a + step, x_max)
        fb = f(b)
        if fa == 0.0 or fa * fb < 0:
            roots.append(_polish(f, a, b))
        a, fa = b, fb
    return roots


def k0(R: float = 1.0) -> float:
    """Smallest k > 0 with J_0(kR) = J_1(kR): the lowest infinite-mass eigenvalue of the disc."""
    return k0_root(R).value / R


def k0_root(R: float = 1.0) -> Root:
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    roots = radial_roots(0, 20.0, 1)
    if not roots:
        raise BracketingError("no root of J_0 - J_1 found on [1e-3, 20]")
    return roots[0]


@dataclass
class DiscSpectrum:
    R: float
    roots: dict[int, list[Root]] = field(default_factory=dict)

    def k_values(self, m: int) -> list[float]:
        return [r.value / self.R for r in self.roots[m]]

    def table(self) -> list[tuple[int, int, float, float]]:
        """Rows (m, index, k, residual) ordered by m then index."""
        rows = []
        for m in sorted(self.roots):
            for i, r in enumerate(self.roots[m]):
                rows.append((m, i, r.value / self.R, r.residual))
        return rows

    def sorted_k(self) -> np.ndarray:
        return np.sort([row[2] for row in self.table()])


def disc_eigenvalues(R: float = 1.0, m_max: int = 5, per_m: int = 3) -> DiscSpectrum:
    """Roots of J_m(kR) = J_{m+1}(kR) for 0 <= m <= m_max in the window k in [1e-3, 20/R]."""
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    if not (0 <= m_max <= 20 and 1 <= per_m <= 10):
        raise ValueError("need 0 <= m_max <= 20 and 1 <= per_m <= 10")
    spec = DiscSpectrum(R=R)
    for m in range(m_max + 1):
        spec.roots[m] = radial_roots(m, 20.0, per_m)
    return spec
