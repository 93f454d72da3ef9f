import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from diracgap.boundary import (
    SIGMA1,
    BoundaryFamily,
    NearZigzagError,
    ValleyBoundary,
    a_matrix,
    b_factor,
    beta,
    projector,
    valley_basis,
    valley_matrix,
)

unit = st.floats(0, 2 * math.pi).map(lambda a: complex(np.exp(1j * a)))
# eta with cos(eta) safely away from zero
etas = st.floats(0, 2 * math.pi).filter(lambda e: abs(math.cos(e)) > 1e-6)


def test_b_factor_examples():
    assert b_factor(0.0) == 1.0
    assert b_factor(math.pi / 4) == pytest.approx(math.sqrt(2) - 1, rel=1e-15)
    with pytest.raises(NearZigzagError):
        b_factor(math.pi / 2)
    with pytest.raises(NearZigzagError):
        beta(3 * math.pi / 2)


def test_beta_examples():
    assert beta(0.0) == 1.0
    assert beta(math.pi) == pytest.approx(-1.0, abs=1e-15)
    assert beta(math.pi / 4) == pytest.approx(0.41421356237309503, rel=1e-14)


def test_infinite_mass_family():
    for eta in (0.0, math.pi):
        fam = BoundaryFamily.from_eta(eta)
        assert fam.is_infinite_mass and fam.B == 1.0
    assert not BoundaryFamily.from_eta(0.3).is_infinite_mass


@given(etas)
def test_b_in_unit_interval(eta):
    B = b_factor(eta)
    assert 0 < B <= 1
    b = abs(beta(eta))
    assert B == min(b, 1 / b)


def test_b_tends_to_zero_at_zigzag():
    Bs = [b_factor(math.pi / 2 - d) for d in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(x > y for x, y in zip(Bs, Bs[1:]))
    assert Bs[-1] < 1e-4
    # continuity inside a branch
    e = np.linspace(0.05, math.pi / 2 - 0.05, 400)
    assert np.max(np.abs(np.diff([b_factor(x) for x in e]))) < 1e-2


@given(etas, unit)
def test_projector_algebra(eta, t):
    A = a_matrix(eta, t)
    Pp, Pm = projector(eta, t)
    np.testing.assert_allclose(A @ A, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(Pp + Pm, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(Pp @ Pm, 0, atol=1e-14)
    np.testing.assert_allclose(Pp, Pp.conj().T, atol=1e-14)
    np.testing.assert_allclose(Pp @ Pp, Pp, atol=1e-14)
    assert np.trace(Pp).real == pytest.approx(1.0, abs=1e-14)
    v = np.array([1, beta(eta) * t])
    np.testing.assert_allclose(Pm @ v, 0, atol=1e-14 * max(1, abs(beta(eta))))


def test_projector_examples():
    Pp, _ = projector(0.0, 1.0)
    np.testing.assert_allclose(Pp, 0.5 * np.ones((2, 2)), atol=1e-15)
    b = beta(math.pi / 4)
    _, Pm = projector(math.pi / 4, 1j)
    np.testing.assert_allclose(Pm @ np.array([1, b * 1j]), 0, atol=1e-15)
    # cross-check against the +1 eigenvector of A
    w, V = np.linalg.eigh(a_matrix(math.pi / 4, 1j))
    v = V[:, np.argmax(w)]
    assert abs(v[1] / v[0] - b * 1j) < 1e-14


def test_valley_matrix_examples():
    np.testing.assert_array_equal(valley_matrix(ValleyBoundary("zigzag"), 0.3 + 0.4j).real, np.diag([1, -1, -1, 1]))
    A = valley_matrix(ValleyBoundary("infinite-mass"), 1.0)
    np.testing.assert_array_equal(A[:2, :2], SIGMA1)
    np.testing.assert_array_equal(A[2:, 2:], -SIGMA1)
    w = np.linalg.eigvalsh(valley_matrix(ValleyBoundary.armchair(0.0), np.exp(0.7j)))
    np.testing.assert_allclose(w, [-1, -1, 1, 1], atol=1e-14)


@given(st.sampled_from(["zigzag", "infinite-mass", "armchair"]), st.floats(0, 2 * math.pi), unit)
def test_valley_matrix_is_hermitian_unitary(kind, phase, t):
    vb = ValleyBoundary.armchair(phase) if kind == "armchair" else ValleyBoundary(kind)
    A = valley_matrix(vb, t)
    np.testing.assert_allclose(A, A.conj().T, atol=1e-14)
    np.testing.assert_allclose(A @ A, np.eye(4), atol=1e-14)
    Pp = 0.5 * (np.eye(4) + A)
    assert np.linalg.matrix_rank(Pp, tol=1e-10) == 2
    basis = valley_basis(vb, t)
    np.testing.assert_allclose(Pp @ basis, basis, atol=1e-14)
    assert np.linalg.matrix_rank(basis) == 2


def test_valley_boundary_validation():
    with pytest.raises(ValueError):
        ValleyBoundary("graphene")
    with pytest.raises(ValueError):
        ValleyBoundary("armchair", 2.0)
