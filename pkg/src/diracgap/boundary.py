"""Local boundary conditions for the 2D Dirac operator.

The eta-family ``P_{-,eta} u = 0`` with ``A_eta = cos(eta) sigma.t + sin(eta) sigma_3``
is equivalent to the trace coupling ``u2 = beta * t * u1`` where
``beta = (1 - sin eta) / cos eta = tan(pi/4 - eta/2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ZIGZAG_TOL = 1e-9

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


class NearZigzagError(ValueError):
    """cos(eta) vanishes: the gap bound needs cos(eta) != 0."""


def _check_eta(eta: float) -> None:
    if abs(math.cos(eta)) <= ZIGZAG_TOL:
        raise NearZigzagError(
            f"eta={eta!r} is at the zigzag point: the bound requires cos(eta) != 0 "
            f"(|cos eta| = {abs(math.cos(eta)):.3g} <= {ZIGZAG_TOL})"
        )


def beta(eta: float) -> float:
    _check_eta(eta)
    b = (1.0 - math.sin(eta)) / math.cos(eta)
    # sin(pi) is 1.2e-16 in floating point; keep |beta| = 1 exact at eta = pi
    if abs(abs(b) - 1.0) <= 4 * np.finfo(float).eps:
        b = math.copysign(1.0, b)
    return b


def b_factor(eta: float) -> float:
    """min(|beta|, 1/|beta|), the constant multiplying the gap bound."""
    b = abs(beta(eta))
    return min(b, 1.0 / b)


def sigma_dot(t: complex) -> np.ndarray:
    """sigma . t for a unit tangent written as t1 + i t2."""
    return np.array([[0, np.conj(t)], [t, 0]], dtype=complex)


def a_matrix(eta: float, t: complex) -> np.ndarray:
    return math.cos(eta) * sigma_dot(t) + math.sin(eta) * SIGMA3


def projector(eta: float, t: complex) -> tuple[np.ndarray, np.ndarray]:
    """(P+, P-) = ((1 + A)/2, (1 - A)/2)."""
    A = a_matrix(eta, t)
    return 0.5 * (ID2 + A), 0.5 * (ID2 - A)


@dataclass(frozen=True)
class BoundaryFamily:
    eta: float
    beta: float
    B: float

    @classmethod
    def from_eta(cls, eta: float) -> "BoundaryFamily":
        return cls(eta=float(eta), beta=beta(eta), B=b_factor(eta))

    @property
    def is_infinite_mass(self) -> bool:
        return abs(abs(self.beta) - 1.0) < 1e-12


VALLEY_KINDS = ("zigzag", "infinite-mass", "armchair")


@dataclass(frozen=True)
class ValleyBoundary:
    kind: str
    nu: complex = 1.0

    def __post_init__(self):
        if self.kind not in VALLEY_KINDS:
            raise ValueError(f"unknown valley boundary {self.kind!r}; expected one of {VALLEY_KINDS}")
        if abs(abs(self.nu) - 1.0) > 1e-12:
            raise ValueError(f"armchair phase must have |nu| = 1, got {abs(self.nu)}")

    @classmethod
    def armchair(cls, phase: float = 0.0) -> "ValleyBoundary":
        return cls("armchair", complex(np.exp(1j * phase)))


def valley_matrix(vb: ValleyBoundary, t: complex) -> np.ndarray:
    """4x4 boundary matrix A for the two-valley Hamiltonian diag(T, T)."""
    A = np.zeros((4, 4), dtype=complex)
    st = sigma_dot(t)
    if vb.kind == "zigzag":
        A[:2, :2] = SIGMA3
        A[2:, 2:] = -SIGMA3
    elif vb.kind == "infinite-mass":
        A[:2, :2] = st
        A[2:, 2:] = -st
    else:
        A[:2, 2:] = np.conj(vb.nu) * st
        A[2:, :2] = vb.nu * st
    return A


def valley_basis(vb: ValleyBoundary, t: complex) -> np.ndarray:
    """4x2 matrix whose columns span range(P+(A)) = ker(P-(A)).

    The columns are chosen so that, for the armchair case, swapping spinor
    components 2 and 4 maps them onto (1, t, 0, 0) and (0, 0, 1, t), the
    eta = 0 boundary vectors of each block.
    """
    if vb.kind == "zigzag":
        cols = [(1, 0, 0, 0), (0, 0, 0, 1)]
    elif vb.kind == "infinite-mass":
        cols = [(1, t, 0, 0), (0, 0, 1, -t)]
    else:
        nb = np.conj(vb.nu)
        cols = [(nb, 0, 0, t), (0, nb * t, 1, 0)]
    return np.array(cols, dtype=complex).T
