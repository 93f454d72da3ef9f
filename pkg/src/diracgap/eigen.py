"""Smallest eigenpairs of sparse Hermitian pencils S x = mu M x.

Shift-invert Lanczos (ARPACK through scipy) around a shift at or below the
bottom of the spectrum, with the shifted matrix factored by a symmetric-mode
sparse LU that takes diagonal pivots only, i.e. an LDL^H factorization under a
fixed fill-reducing ordering.  Its pivots double as a definiteness test.
A dense solver handles small pencils and serves as an oracle for the sparse path.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

log = logging.getLogger(__name__)

DEFAULT_SEED = 42
DEFAULT_TOL = 1e-8
DENSE_LIMIT = 2000
_ALWAYS_DENSE = 200


class EigenSolverError(RuntimeError):
    """The iteration did not reach the requested residual tolerance."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class IndefiniteMassError(ValueError):
    pass


class ResidualMismatchError(RuntimeError):
    pass


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    tol: float
    seed: int
    info: dict = field(default_factory=dict)

    @property
    def gaps(self) -> np.ndarray:
        """|lambda| = sqrt(max(mu, 0)) for a squared-form pencil."""
        return np.sqrt(np.maximum(self.eigenvalues, 0.0))

    def __len__(self):
        return len(self.eigenvalues)


def _pencil(prob):
    if isinstance(prob, tuple):
        S, M = prob
    else:
        S, M = prob.S, prob.M
    return sp.csc_matrix(S, dtype=complex), sp.csc_matrix(M, dtype=complex)


def ldl_factor(A: sp.spmatrix):
    """Symmetric-mode factorization with diagonal pivoting.

    Returns ``(lu, pivots)``; ``pivots`` is None when SuperLU had to pivot off
    the diagonal, in which case it says nothing about definiteness.
    """
    lu = sla.splu(
        sp.csc_matrix(A),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )
    if np.array_equal(lu.perm_r, lu.perm_c):
        return lu, lu.U.diagonal()
    return lu, None


def is_positive_definite(A: sp.spmatrix) -> bool:
    if A.shape[0] <= DENSE_LIMIT:
        try:
            la.cholesky(A.toarray())
            return True
        except la.LinAlgError:
            return False
    try:
        _, piv = ldl_factor(A)
    except RuntimeError:
        return False
    if piv is None:
        return bool(np.all(la.eigvalsh(A.toarray(), subset_by_index=[0, 0]) > 0))
    return bool(np.all(piv.real > 0) and np.allclose(piv.imag, 0, atol=1e-12 * np.max(np.abs(piv))))


def residuals(S, M, mu: np.ndarray, X: np.ndarray) -> np.ndarray:
    """||S x - mu M x|| / ||M x|| per column."""
    MX = M @ X
    R = S @ X - MX * mu[None, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(MX, axis=0)


def _rayleigh_ritz(S, M, X):
    """Re-solve the pencil on span(X); returns M-orthonormal Ritz pairs."""
    Sx = X.conj().T @ (S @ X)
    Mx = X.conj().T @ (M @ X)
    Sx = 0.5 * (Sx + Sx.conj().T)
    Mx = 0.5 * (Mx + Mx.conj().T)
    mu, Q = la.eigh(Sx, Mx)
    return mu, X @ Q


def _dense(S, M, k):
    try:
        mu, X = la.eigh(S.toarray(), M.toarray(), subset_by_index=[0, k - 1])
    except la.LinAlgError as exc:
        raise IndefiniteMassError(f"mass matrix failed Cholesky factorization: {exc}") from exc
    return mu, X


def _choose_shift(S, M, max_tries=30):
    """Largest shift in {0, -g, -2g, -4g, ...} with S - shift*M positive definite."""
    g = 1e-3 * float(np.mean(np.abs(S.diagonal()))) / float(np.mean(np.abs(M.diagonal())))
    shift = 0.0
    for _ in range(max_tries):
        A = (S - shift * M).tocsc()
        lu, piv = ldl_factor(A)
        if piv is not None and np.all(piv.real > 0):
            return shift, lu
        shift = -g if shift == 0.0 else 2 * shift
    raise EigenSolverError("could not find a shift below the spectrum", {"last_shift": shift})


def smallest_eigenpairs(
    prob,
    k: int = 4,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    method: str = "auto",
    maxiter: int | None = None,
) -> EigenResult:
    """k smallest eigenpairs of the definite-mass pencil (S, M).

    ``prob`` is an AssembledProblem or an ``(S, M)`` tuple.  ``method`` is
    ``"auto"``, ``"sparse"`` or ``"dense"``.
    """
    S, M = _pencil(prob)
    n = S.shape[0]
    if k < 1 or k > n / 4:
        raise ValueError(f"need 1 <= k <= dim/4, got k={k}, dim={n}")
    if not (1e-14 < tol < 1e-2):
        raise ValueError(f"tol must lie in (1e-14, 1e-2), got {tol}")
    if method not in ("auto", "sparse", "dense"):
        raise ValueError(f"unknown method {method!r}")
    if not is_positive_definite(M):
        raise IndefiniteMassError("mass matrix is not positive definite")

    info = {"dim": n, "k": k}
    if method == "dense" or (method == "auto" and n <= _ALWAYS_DENSE):
        mu, X = _dense(S, M, k)
        info["method"] = "dense"
    else:
        try:
            mu, X, sinfo = _shift_invert(S, M, k, seed, maxiter)
            info.update(sinfo)
        except (sla.ArpackNoConvergence, sla.ArpackError) as exc:
            if n > DENSE_LIMIT:
                raise EigenSolverError(f"Lanczos failed: {exc}", info) from exc
            log.warning("Lanczos failed (%s); dense fallback", exc)
            mu, X = _dense(S, M, k)
            info["method"] = "dense-fallback"

    res = residuals(S, M, mu, X)
    info["max_residual"] = float(np.max(res))
    if np.any(res > tol):
        raise EigenSolverError(
            f"residual {np.max(res):.3g} exceeds tolerance {tol:.3g}", info
        )
    return EigenResult(eigenvalues=mu, vectors=X, residuals=res, tol=tol, seed=seed, info=info)


def _shift_invert(S, M, k, seed, maxiter):
    n = S.shape[0]
    shift, lu = _choose_shift(S, M)
    OPinv = sla.LinearOperator((n, n), matvec=lu.solve, dtype=complex)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    ncv = min(n, max(2 * k + 1, 20))
    mu, X = sla.eigsh(
        S.astype(complex),
        k=k,
        M=M.astype(complex),
        sigma=shift,
        which="LM",
        OPinv=OPinv,
        v0=v0,
        ncv=ncv,
        tol=0,
        maxiter=maxiter or 20 * n,
    )
    mu, X = _rayleigh_ritz(S, M, X)
    order = np.argsort(mu, kind="stable")
    return mu[order], X[:, order], {"method": "shift-invert-lanczos", "shift": shift, "ncv": ncv}


def eigenpairs_near(prob, k: int = 8, sigma: float = 0.0, seed: int = DEFAULT_SEED, method: str = "auto"):
    """Eigenpairs of an indefinite Hermitian pencil closest to ``sigma``.

    Returns ``(lam, X)`` sorted by distance from sigma.  Used for the
    first-order matrices, whose spectrum extends in both directions.
    """
    S, M = _pencil(prob)
    n = S.shape[0]
    if method == "dense" or (method == "auto" and n <= DENSE_LIMIT):
        lam, X = la.eigh(S.toarray(), M.toarray())
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        lam, X = sla.eigsh(S.astype(complex), k=k, M=M.astype(complex), sigma=sigma, which="LM", v0=v0, tol=0)
        lam, X = _rayleigh_ritz(S, M, X)
    order = np.argsort(np.abs(lam - sigma), kind="stable")[:k]
    return lam[order], X[:, order]


def verify_residuals(prob, res: EigenResult) -> dict:
    """Recompute residuals from scratch and compare with the reported ones."""
    S, M = _pencil(prob)
    out = []
    for j, mu in enumerate(res.eigenvalues):
        x = res.vectors[:, j]
        Mx = M @ x
        r = float(np.linalg.norm(S @ x - mu * Mx) / np.linalg.norm(Mx))
        out.append(r)
    recomputed = np.array(out)
    reported = np.asarray(res.residuals)
    floor = np.finfo(float).eps * 100
    if np.any(recomputed > 10 * np.maximum(reported, floor)):
        raise ResidualMismatchError(
            f"recomputed residuals exceed reported ones by more than 10x: "
            f"{recomputed.tolist()} vs {reported.tolist()}"
        )
    flags = recomputed > res.tol
    return {
        "recomputed": recomputed.tolist(),
        "reported": reported.tolist(),
        "max_residual": float(recomputed.max()),
        "tol": res.tol,
        "failed_pairs": np.flatnonzero(flags).tolist(),
        "passed": not bool(flags.any()),
    }
