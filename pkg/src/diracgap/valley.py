"""Four-spinor (two-valley) Hamiltonian diag(T, T) with valley boundary matrices.

Unknowns are ordered ``4 * vertex + 2 * valley + component``.  Each boundary
vertex keeps the two complex unknowns spanning range(P+(A)), taken from
:func:`boundary.valley_basis`; interior vertices keep all four.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .boundary import BoundaryFamily, ValleyBoundary, valley_basis, valley_matrix
from .eigen import eigenpairs_near
from .fem import (
    AssembledProblem,
    derivative_matrices,
    filter_first_order,
    hermitian_part,
    mass_matrix,
)
from .geometry import Mesh

# U_p swaps spinor components 2 and 4 (0-based 1 and 3)
PERMUTATION = np.array([0, 3, 2, 1])
U_P = np.eye(4)[PERMUTATION]


class ZigzagSpectralError(ValueError):
    """Zigzag matrices are constructible but have no faithful finite eigenproblem."""


class DegenerateProjectorError(RuntimeError):
    pass


class StructureMismatchError(RuntimeError):
    pass


class SpectralMismatchError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class FourSpinorProblem:
    K: sp.csr_matrix
    M: sp.csr_matrix
    R: sp.csr_matrix
    mesh: Mesh
    boundary: ValleyBoundary
    # reduced index of (vertex, slot); slot in 0..3 for interior, 0..1 for boundary
    offsets: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.K.shape[0]


def _valley_kron(scalar: sp.spmatrix, pattern: np.ndarray) -> sp.csr_matrix:
    return sp.kron(scalar, sp.csr_matrix(pattern), format="csr")


def full_four_spinor(mesh: Mesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Galerkin matrices of diag(T, T) and of the 4-component mass."""
    C1, C2 = derivative_matrices(mesh)
    up = np.zeros((4, 4))
    down = np.zeros((4, 4))
    for v in (0, 2):
        up[v, v + 1] = 1.0  # (T u)_1 picks u2
        down[v + 1, v] = 1.0  # (T u)_2 picks u1
    K = _valley_kron(-1j * C1 - C2, up) + _valley_kron(-1j * C1 + C2, down)
    M = sp.kron(mass_matrix(mesh), sp.identity(4), format="csr")
    return K, M


def _reduction(mesh: Mesh, vb: ValleyBoundary):
    nv = mesh.n_vertices
    n_per = np.where(mesh.is_boundary, 2, 4)
    offsets = np.concatenate([[0], np.cumsum(n_per)[:-1]])
    n_red = int(n_per.sum())
    rows, cols, vals = [], [], []
    interior = np.flatnonzero(~mesh.is_boundary)
    for c in range(4):
        rows.append(4 * interior + c)
        cols.append(offsets[interior] + c)
        vals.append(np.ones(len(interior), dtype=complex))
    for k, vtx in enumerate(mesh.boundary):
        t = mesh.boundary_t[k]
        basis = valley_basis(vb, t)
        A = valley_matrix(vb, t)
        Pp = 0.5 * (np.eye(4) + A)
        rank = np.linalg.matrix_rank(Pp, tol=1e-10)
        if rank != 2:
            raise DegenerateProjectorError(f"rank P+(A) = {rank} at boundary vertex {vtx}")
        if np.max(np.abs(Pp @ basis - basis)) > 1e-12:
            raise DegenerateProjectorError(f"boundary basis leaves range(P+) at vertex {vtx}")
        for j in range(2):
            for c in range(4):
                if basis[c, j] != 0:
                    rows.append([4 * vtx + c])
                    cols.append([offsets[vtx] + j])
                    vals.append([basis[c, j]])
    R = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(4 * nv, n_red)
    ).tocsr()
    return R, offsets


def assemble_four_spinor(mesh: Mesh, vb: ValleyBoundary) -> FourSpinorProblem:
    if vb.kind == "zigzag":
        raise ZigzagSpectralError(
            "zigzag boundary: the operator is not self-adjoint on H^1 and has an "
            "infinitely degenerate zero eigenvalue; no finite eigenproblem is built"
        )
    R, offsets = _reduction(mesh, vb)
    Kf, Mf = full_four_spinor(mesh)
    RH = R.conj().T
    K = hermitian_part(RH @ Kf @ R)
    M = hermitian_part(RH @ Mf @ R)
    meta = {"kind": vb.kind, "nu": [vb.nu.real, vb.nu.imag], "dim_reduced": R.shape[1], "h": mesh.h}
    return FourSpinorProblem(K=K, M=M, R=R, mesh=mesh, boundary=vb, offsets=offsets, meta=meta)


def block_indices(prob: FourSpinorProblem) -> tuple[np.ndarray, np.ndarray]:
    """Reduced indices of the two 2-spinor blocks seen after applying U_p.

    After swapping components 2 and 4, block one is (psi_1, psi_4) and block
    two is (psi_3, psi_2).  Interior vertex slots map as 0,3 -> block one and
    2,1 -> block two; boundary slots 0 -> one, 1 -> two.  Within each block
    the order matches the 2-spinor reduction (u1 then u2 per interior vertex).
    """
    one, two = [], []
    for vtx in range(prob.mesh.n_vertices):
        o = prob.offsets[vtx]
        if prob.mesh.is_boundary[vtx]:
            one.append([o])
            two.append([o + 1])
        else:
            one.append([o, o + 3])
            two.append([o + 2, o + 1])
    return np.concatenate(one), np.concatenate(two)


def permute_armchair(prob: FourSpinorProblem):
    """Apply the discrete U_p and verify the anti-block-diagonal structure.

    Returns ``((K_tilde, M_tilde), report)`` where K_tilde is ordered
    [block one, block two].
    """
    if prob.boundary.kind != "armchair":
        raise ValueError("permute_armchair needs an armchair problem")
    # boundary matrix after U_p must be diag(sigma.t, sigma.t); U_nu removes nu first
    Unu = np.diag([prob.boundary.nu, prob.boundary.nu, 1, 1])
    worst_A = 0.0
    for t in prob.mesh.boundary_t:
        A = valley_matrix(prob.boundary, t)
        A1 = Unu @ A @ Unu.conj().T
        At = U_P @ A1 @ U_P.T
        target = np.zeros((4, 4), dtype=complex)
        st = np.array([[0, np.conj(t)], [t, 0]])
        target[:2, :2] = st
        target[2:, 2:] = st
        worst_A = max(worst_A, float(np.max(np.abs(At - target))))
    # discrete U_nu: interior valley-one slots pick up the phase nu, boundary
    # coefficients are unchanged because valley_basis already carries conj(nu)
    phase = np.ones(prob.dim, dtype=complex)
    interior = np.flatnonzero(~prob.mesh.is_boundary)
    phase[prob.offsets[interior]] = prob.boundary.nu
    phase[prob.offsets[interior] + 1] = prob.boundary.nu
    D = sp.diags(phase)
    K1 = hermitian_part(D @ prob.K @ D.conj())
    M1 = hermitian_part(D @ prob.M @ D.conj())
    one, two = block_indices(prob)
    order = np.concatenate([one, two])
    Kt = K1[order][:, order].tocsr()
    Mt = M1[order][:, order].tocsr()
    n1 = len(one)
    diag_dev = max(_maxabs(Kt[:n1, :n1]), _maxabs(Kt[n1:, n1:]))
    off_dev = _maxabs(Kt[:n1, n1:] - Kt[n1:, :n1])
    mass_dev = max(_maxabs(Mt[:n1, n1:]), _maxabs(Mt[:n1, :n1] - Mt[n1:, n1:]))
    report = {
        "boundary_matrix_deviation": worst_A,
        "diagonal_block_max": diag_dev,
        "offdiagonal_asymmetry": off_dev,
        "mass_block_deviation": mass_dev,
    }
    if max(worst_A, diag_dev, off_dev, mass_dev) > 1e-12:
        raise StructureMismatchError(f"armchair structure violated: {report}")
    return (Kt, Mt), report


def _maxabs(A) -> float:
    A = sp.csr_matrix(A)
    return float(np.max(np.abs(A.data))) if A.nnz else 0.0


def _all_eigs(K, M) -> np.ndarray:
    return la.eigh(K.toarray(), M.toarray(), eigvals_only=True)


def spectral_equivalence_check(
    prob: FourSpinorProblem,
    two_spinor: AssembledProblem,
    tol: float = 1e-10,
    two_spinor_pi: AssembledProblem | None = None,
    n_compare: int | None = None,
) -> dict:
    """Compare the four-spinor spectrum with the 2-spinor block spectra.

    armchair: spec(K4, M4) = {+-lambda : lambda in spec(K0, M0)}
    infinite-mass: spec(K4, M4) = spec(K0) union spec(K_pi)
    The comparison uses all eigenvalues (dense), relative to the largest |lambda|
    unless ``n_compare`` restricts it to that many smallest |lambda|.
    """
    if two_spinor.kind != "first-order" or not np.isclose(two_spinor.family.eta, 0.0):
        raise ValueError("two_spinor must be the eta = 0 first-order problem on the same mesh")
    lam4 = np.sort(_all_eigs(prob.K, prob.M))
    lam0 = _all_eigs(two_spinor.S, two_spinor.M)
    if prob.boundary.kind == "armchair":
        expected = np.sort(np.concatenate([lam0, -lam0]))
    else:
        if two_spinor_pi is None:
            raise ValueError("infinite-mass comparison needs the eta = pi block")
        expected = np.sort(np.concatenate([lam0, _all_eigs(two_spinor_pi.S, two_spinor_pi.M)]))
    if len(expected) != len(lam4):
        raise SpectralMismatchError(f"dimension mismatch {len(lam4)} vs {len(expected)}")
    if n_compare:
        sel4 = np.sort(lam4[np.argsort(np.abs(lam4), kind="stable")[:n_compare]])
        selx = np.sort(expected[np.argsort(np.abs(expected), kind="stable")[:n_compare]])
    else:
        sel4, selx = lam4, expected
    scale = float(np.max(np.abs(lam4)))
    dev = float(np.max(np.abs(sel4 - selx))) / scale
    symmetric = float(np.max(np.abs(lam4 + lam4[::-1]))) / scale
    report = {
        "kind": prob.boundary.kind,
        "max_rel_deviation": dev,
        "negation_asymmetry": symmetric,
        "tol": tol,
        "gap_four_spinor": float(np.min(np.abs(lam4))),
        "gap_two_spinor": float(np.min(np.abs(lam0))),
        "passed": dev <= tol,
    }
    if dev > tol:
        raise SpectralMismatchError(f"spectra differ by {dev:.3g} > {tol:.3g}")
    return report


def filtered_gap(prob: FourSpinorProblem, squared_mus: np.ndarray, k: int = 16, rtol: float = 0.05) -> float:
    """Smallest |lambda| of (K4, M4) confirmed by the squared-form spectrum of the blocks."""
    lam, _ = eigenpairs_near((prob.K, prob.M), k=k, sigma=0.0)
    ok = filter_first_order(lam, squared_mus, rtol=rtol)
    if not np.any(ok):
        raise SpectralMismatchError("no first-order eigenvalue survived the squared-form filter")
    return float(np.min(np.abs(lam[ok])))


def two_spinor_family(eta: float) -> BoundaryFamily:
    return BoundaryFamily.from_eta(eta)
