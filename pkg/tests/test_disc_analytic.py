import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from diracgap.disc_analytic import (
    BesselDomainError,
    bessel_j,
    disc_eigenvalues,
    k0,
    k0_root,
    radial_condition,
    radial_roots,
)

# frozen high-precision values (mpmath, 30 digits)
K0 = 1.434695650819562883
M1_ROOT = 2.629874111944714
M2_ROOT = 3.768946487205824
M3_ROOT = 4.880487255254929
J3_1P7 = 0.08514992694801526
J50_100 = -0.03869833972852538
J0_100 = 0.01998585030422312


def test_values_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0


def test_first_zero_of_j0():
    assert abs(bessel_j(0, 2.404825557695773)) < 1e-10


def test_frozen_values():
    assert bessel_j(3, 1.7) == pytest.approx(J3_1P7, abs=1e-14)
    assert bessel_j(50, 100.0) == pytest.approx(J50_100, abs=1e-12)
    assert bessel_j(0, 100.0) == pytest.approx(J0_100, abs=1e-12)


def test_recurrence_at_1p7():
    x, n = 1.7, 3
    assert abs(bessel_j(n - 1, x) + bessel_j(n + 1, x) - 2 * n / x * bessel_j(n, x)) < 1e-12


@given(st.integers(0, 50), st.floats(-100, 100))
def test_against_mpmath(n, x):
    assert abs(bessel_j(n, x) - float(mpmath.besselj(n, x))) < 1e-12


@given(st.integers(1, 49), st.floats(0.05, 100))
def test_recurrence_property(n, x):
    lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x)
    rhs = 2 * n / x * bessel_j(n, x)
    assert abs(lhs - rhs) < 1e-12 * max(1.0, 2 * n / x)


def test_domain_errors():
    with pytest.raises(BesselDomainError):
        bessel_j(51, 1.0)
    with pytest.raises(BesselDomainError):
        bessel_j(-1, 1.0)
    with pytest.raises(BesselDomainError):
        bessel_j(0, 100.5)


def test_k0():
    r = k0_root(1.0)
    assert r.value == pytest.approx(K0, abs=1e-12)
    assert abs(r.value - 1.435) <= 5e-4
    assert r.residual <= 1e-12
    assert r.value > math.sqrt(2)
    assert k0(2.0) == pytest.approx(K0 / 2, rel=1e-15)


@given(st.floats(0.05, 20.0))
def test_k0_scaling(R):
    assert k0(R) * R == pytest.approx(K0, abs=1e-12)


def test_higher_m_roots():
    spec = disc_eigenvalues(1.0, m_max=3, per_m=3)
    assert spec.k_values(0)[0] == pytest.approx(K0, abs=1e-12)
    for m, ref in ((1, M1_ROOT), (2, M2_ROOT), (3, M3_ROOT)):
        assert spec.k_values(m)[0] == pytest.approx(ref, abs=1e-12)
    assert spec.sorted_k()[0] == pytest.approx(K0, abs=1e-12)
    for m, roots in spec.roots.items():
        vals = [r.value for r in roots]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        for r in roots:
            assert abs(radial_condition(m, r.value)) <= 1e-12


def test_m1_root_by_brute_force_scan():
    x = np.arange(0.1, 20.0, 1e-3)
    f = np.array([radial_condition(1, v) for v in x])
    i = np.flatnonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]
    assert x[i] <= M1_ROOT <= x[i + 1]


def test_table_rows():
    rows = disc_eigenvalues(2.0, m_max=1, per_m=2).table()
    assert [(m, i) for m, i, _, _ in rows] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert rows[0][2] == pytest.approx(K0 / 2, rel=1e-14)


def test_disc_eigenvalue_preconditions():
    with pytest.raises(ValueError):
        disc_eigenvalues(-1.0)
    with pytest.raises(ValueError):
        disc_eigenvalues(1.0, m_max=21)
    assert radial_roots(0, 1.0, 3) == []
