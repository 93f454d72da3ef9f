"""Piecewise-linear spinor discretizations of D_eta.

Two routes are assembled on the same boundary-constrained space:

* the squared form (primary), the Hermitian positive semidefinite sesquilinear form

      q(u, v) = (grad u, grad v)
                + integral over the boundary of [beta^2 kappa conj(u1) v1
                                                 + i (1 - beta^2) conj(u1) d_s v1] ds,

  which equals ||D_eta u||^2 on the constrained H^1 space;
* the first-order symmetrized form a(phi, u) = ((phi, T u) + (T phi, u)) / 2,
  whose eigenvalues carry a sign but are prone to spectral pollution.

The boundary condition u2 = beta t u1 is imposed nodally: each boundary
vertex keeps one complex unknown c with (u1, u2) = (c, beta t c).  Full
spinor unknowns are ordered ``2 * vertex + component``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .boundary import BoundaryFamily
from .geometry import GAUSS3, Mesh


@dataclass(frozen=True, eq=False)
class AssembledProblem:
    """Hermitian pencil (S, M) on the reduced space, with reduction map R.

    For ``kind == "first-order"`` the form matrix ``S`` is the indefinite
    first-order matrix rather than the squared form.
    """

    S: sp.csr_matrix
    M: sp.csr_matrix
    R: sp.csr_matrix
    mesh: Mesh
    family: BoundaryFamily
    kind: str = "squared"
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Reduced coefficients -> nodal spinor values, shape (n_vertices, 2, ...)."""
        full = self.R @ x
        return full.reshape((self.mesh.n_vertices, 2) + full.shape[1:])


# element kernels -----------------------------------------------------------


def p1_gradients(mesh: Mesh):
    """Constant barycentric gradients per triangle, shape (nt, 3, 2), and areas."""
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    # rows of inv(J)^T give grad(lambda_1), grad(lambda_2)
    g1 = np.stack([d2[:, 1], -d2[:, 0]], axis=1) / det[:, None]
    g2 = np.stack([-d1[:, 1], d1[:, 0]], axis=1) / det[:, None]
    g0 = -g1 - g2
    return np.stack([g0, g1, g2], axis=1), 0.5 * det


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    n = mesh.n_vertices
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def stiffness_matrix(mesh: Mesh) -> sp.csr_matrix:
    g, A = p1_gradients(mesh)
    local = np.einsum("tid,tjd->tij", g, g) * A[:, None, None]
    return _scatter(mesh, local)


def mass_matrix(mesh: Mesh) -> sp.csr_matrix:
    _, A = p1_gradients(mesh)
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return _scatter(mesh, A[:, None, None] * ref[None])


def derivative_matrices(mesh: Mesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """C_k[i, j] = integral of phi_i d_k phi_j, k = 1, 2."""
    g, A = p1_gradients(mesh)
    out = []
    for k in range(2):
        local = (A[:, None, None] / 3.0) * np.broadcast_to(g[:, None, :, k], (len(A), 3, 3))
        out.append(_scatter(mesh, local))
    return out[0], out[1]


def _edge_scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    n = mesh.n_vertices
    e = mesh.boundary_edges()
    rows = np.repeat(e, 2, axis=1).ravel()
    cols = np.tile(e, (1, 2)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def boundary_weight_matrix(mesh: Mesh, weight) -> sp.csr_matrix:
    """Boundary mass integral of weight(theta) * phi_i * phi_j ds on the exact curve.

    The trace of each P1 function is taken linear in the curve parameter
    over each boundary edge; ``weight`` is evaluated on the exact curve.
    """
    x, w = GAUSS3
    th = mesh.boundary_theta[:, None] + x[None, :] * mesh.edge_dtheta[:, None]
    dens = weight(th) * mesh.curve.speed(th) * (w * mesh.edge_dtheta[:, None])
    phi = np.stack([1.0 - x, x])  # (2, q)
    local = np.einsum("iq,jq,eq->eij", phi, phi, dens)
    return _edge_scatter(mesh, local)


def boundary_curvature_matrix(mesh: Mesh) -> sp.csr_matrix:
    return boundary_weight_matrix(mesh, mesh.curve.curvature)


def boundary_tangential_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Skew part of the boundary integral of phi_i d_s phi_j.

    The symmetric part integrates d_s(phi_i phi_j) / 2 around a closed curve
    and vanishes after assembly, so it is dropped elementwise.
    """
    ne = len(mesh.boundary)
    local = np.broadcast_to(np.array([[0.0, 0.5], [-0.5, 0.0]]), (ne, 2, 2))
    return _edge_scatter(mesh, local)


# constraint map --------------------------------------------------------------


def reduction_map(mesh: Mesh, beta: float) -> sp.csr_matrix:
    """R: reduced unknowns -> full spinor unknowns (2 per vertex)."""
    nv = mesh.n_vertices
    n_per = np.where(mesh.is_boundary, 1, 2)
    start = np.concatenate([[0], np.cumsum(n_per)[:-1]])
    n_red = int(n_per.sum())

    interior = np.flatnonzero(~mesh.is_boundary)
    bnd = mesh.boundary
    rows = np.concatenate([2 * interior, 2 * interior + 1, 2 * bnd, 2 * bnd + 1])
    cols = np.concatenate([start[interior], start[interior] + 1, start[bnd], start[bnd]])
    vals = np.concatenate(
        [
            np.ones(2 * len(interior), dtype=complex),
            np.ones(len(bnd), dtype=complex),
            beta * mesh.boundary_t,
        ]
    )
    return sp.coo_matrix((vals, (rows, cols)), shape=(2 * nv, n_red)).tocsr()


# spinor block helpers ----------------------------------------------------------

_E = {
    (a, b): sp.csr_matrix(([1.0], ([a], [b])), shape=(2, 2))
    for a in range(2)
    for b in range(2)
}


def spinor_block(scalar: sp.spmatrix, a: int, b: int) -> sp.csr_matrix:
    """Place a scalar operator in the (component a, component b) slot."""
    return sp.kron(scalar, _E[a, b], format="csr")


def hermitian_part(A: sp.spmatrix) -> sp.csr_matrix:
    """(A + A^H) / 2, which is Hermitian bit-for-bit."""
    A = sp.csr_matrix(A)
    H = (A + A.conj().T) * 0.5
    H = sp.csr_matrix(H)
    H.sum_duplicates()
    H.sort_indices()
    return H


def full_mass(mesh: Mesh) -> sp.csr_matrix:
    return sp.kron(mass_matrix(mesh), sp.identity(2), format="csr")


def full_squared_form(mesh: Mesh, beta: float) -> sp.csr_matrix:
    K = stiffness_matrix(mesh)
    bterm = beta**2 * boundary_curvature_matrix(mesh) + 1j * (1.0 - beta**2) * boundary_tangential_matrix(mesh)
    return sp.kron(K, sp.identity(2), format="csr") + spinor_block(bterm, 0, 0)


def full_first_order(mesh: Mesh) -> sp.csr_matrix:
    """Galerkin matrix of T: entry (i a, j b) = integral of phi_i (T phi_j e_b)_a.

    (T u)_1 = (-i d1 - d2) u2 and (T u)_2 = (-i d1 + d2) u1.
    """
    C1, C2 = derivative_matrices(mesh)
    return spinor_block(-1j * C1 - C2, 0, 1) + spinor_block(-1j * C1 + C2, 1, 0)


def _reduce(R: sp.csr_matrix, A: sp.spmatrix) -> sp.csr_matrix:
    return hermitian_part(R.conj().T @ A @ R)


def _meta(mesh: Mesh, fam: BoundaryFamily, R) -> dict:
    return {
        "h": mesh.h,
        "eta": fam.eta,
        "beta": fam.beta,
        "B": fam.B,
        "domain": mesh.curve.to_dict(),
        "n_vertices": mesh.n_vertices,
        "n_boundary": len(mesh.boundary),
        "dim_full": R.shape[0],
        "dim_reduced": R.shape[1],
    }


def assemble(mesh: Mesh, fam: BoundaryFamily) -> AssembledProblem:
    """Squared-form pencil (S, M): S discretizes ||D_eta u||^2, M discretizes ||u||^2."""
    R = reduction_map(mesh, fam.beta)
    S = _reduce(R, full_squared_form(mesh, fam.beta))
    M = _reduce(R, full_mass(mesh))
    return AssembledProblem(S=S, M=M, R=R, mesh=mesh, family=fam, kind="squared", meta=_meta(mesh, fam, R))


def assemble_first_order(mesh: Mesh, fam: BoundaryFamily) -> AssembledProblem:
    """Indefinite first-order pencil (K, M); see ``filter_first_order`` before trusting it."""
    R = reduction_map(mesh, fam.beta)
    K = _reduce(R, full_first_order(mesh))
    M = _reduce(R, full_mass(mesh))
    return AssembledProblem(S=K, M=M, R=R, mesh=mesh, family=fam, kind="first-order", meta=_meta(mesh, fam, R))


def filter_first_order(lams: np.ndarray, mus: np.ndarray, rtol: float = 0.05) -> np.ndarray:
    """Boolean mask of first-order eigenvalues confirmed by the squared form.

    lambda is accepted when lambda^2 lies within ``rtol`` (relative) of some
    Ritz value of the squared pencil.
    """
    lams = np.asarray(lams, dtype=float)
    mus = np.asarray(mus, dtype=float)
    lam2 = lams[:, None] ** 2
    close = np.abs(lam2 - mus[None, :]) <= rtol * np.maximum(np.abs(mus[None, :]), 1e-300)
    return np.any(close, axis=1)


def write_triplets(A: sp.spmatrix, path) -> None:
    """Sparse triplet text format: ``row col re im`` per line, 0-indexed."""
    A = sp.coo_matrix(A)
    order = np.lexsort((A.col, A.row))
    with open(path, "w") as fh:
        fh.write(f"# {A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for r, c, v in zip(A.row[order], A.col[order], A.data[order]):
            fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")


def read_triplets(path) -> sp.csr_matrix:
    with open(path) as fh:
        header = fh.readline().split()
        n, m = int(header[1]), int(header[2])
        data = np.loadtxt(fh, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix((n, m), dtype=complex)
    vals = data[:, 2] + 1j * data[:, 3]
    return sp.coo_matrix((vals, (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(n, m)).tocsr()
