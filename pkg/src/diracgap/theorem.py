"""Gap lower bound and numerical checks of the ingredients of its proof.

* ``gap_lower_bound``: |lambda| >= sqrt(2 pi / |Omega|) * B(eta).
* ``lemma_decompose``: splitting u = v + w with v obeying the eta = 0
  condition, and the identity ||Tw||^2 + 2 Re<Tv, Tw> = (1 - B^2) ||L u_a||^2.
* ``solve_neumann``: Laplace f = C, d_n f = -kappa/2 with C = -pi / |Omega|.
* ``proof_inequality_check``: lambda^2 / 2 ||e^{-f} u||^2 >= -C ||e^{-f} u||^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .boundary import BoundaryFamily, b_factor
from .eigen import EigenResult, residuals
from .fem import (
    AssembledProblem,
    boundary_weight_matrix,
    mass_matrix,
    p1_gradients,
    stiffness_matrix,
)
from .geometry import BoundaryCurve, Mesh, area as curve_area, total_curvature

HBAR_EV_S = 6.582119569e-16
FERMI_VELOCITY = 1.0e6  # m/s
HBAR_VF_EV_NM = HBAR_EV_S * FERMI_VELOCITY * 1e9

SOLVABILITY_TOL = 1e-8
BC_TOL = 1e-10
EIGENPAIR_GATE = 1e-6


class SingularSystemError(RuntimeError):
    pass


class BCViolationError(ValueError):
    pass


class WrongEtaError(ValueError):
    pass


def gap_lower_bound(area: float, eta: float) -> float:
    if not area > 0:
        raise ValueError(f"area must be positive, got {area}")
    return math.sqrt(2 * math.pi / area) * b_factor(eta)


def physical_gap(area_nm2: float) -> float:
    """Lower bound on the full gap 2|lambda| in eV for a dot of the given area (nm^2), B = 1."""
    if not area_nm2 > 0:
        raise ValueError(f"area must be positive, got {area_nm2}")
    return 2 * math.sqrt(2 * math.pi) * HBAR_VF_EV_NM / math.sqrt(area_nm2)


@dataclass
class GapReport:
    area: float
    eta: float
    B: float
    bound: float
    gap: float
    margin: float
    budget: float
    verdict: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_gap(res: EigenResult | float, area: float, eta: float, budget: float = 0.0) -> GapReport:
    """PASS iff the computed gap sqrt(mu1) is at least bound - budget."""
    if isinstance(res, EigenResult):
        if len(res) == 0:
            raise ValueError("empty eigen result")
        gap = float(res.gaps[0])
    else:
        gap = float(res)
    bound = gap_lower_bound(area, eta)
    verdict = "PASS" if gap >= bound - budget else "FAIL"
    return GapReport(
        area=area,
        eta=eta,
        B=b_factor(eta),
        bound=bound,
        gap=gap,
        margin=gap - bound,
        budget=budget,
        verdict=verdict,
    )


# element-level field helpers -------------------------------------------------

# 6-point degree-4 rule on the reference triangle (barycentric coords, weights sum to 1)
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
_TRI6_BARY = np.array(
    [
        [_A1, _A1, 1 - 2 * _A1],
        [_A1, 1 - 2 * _A1, _A1],
        [1 - 2 * _A1, _A1, _A1],
        [_A2, _A2, 1 - 2 * _A2],
        [_A2, 1 - 2 * _A2, _A2],
        [1 - 2 * _A2, _A2, _A2],
    ]
)
_TRI6_W = np.array([_W1] * 3 + [_W2] * 3)


def _element_gradients(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Constant gradient of the P1 interpolant per triangle, shape (nt, 2)."""
    g, _ = p1_gradients(mesh)
    return np.einsum("ti,tid->td", values[mesh.triangles], g)


def _apply_T(mesh: Mesh, u: np.ndarray):
    """(T u) per triangle for a nodal P1 spinor field u of shape (nv, 2)."""
    g1 = _element_gradients(mesh, u[:, 0])
    g2 = _element_gradients(mesh, u[:, 1])
    top = -1j * g2[:, 0] - g2[:, 1]
    bottom = -1j * g1[:, 0] + g1[:, 1]
    return np.stack([top, bottom], axis=1)


@dataclass
class LemmaReport:
    branch: str
    B: float
    lhs: float
    rhs: float
    rhs_discrete: float
    rel_error: float
    rel_error_discrete: float
    cross_term: complex
    cross_imag_rel: float
    extra: dict = field(default_factory=dict)


def _check_bc(u: np.ndarray, mesh: Mesh, fam: BoundaryFamily) -> float:
    b = mesh.boundary
    viol = np.abs(u[b, 1] - fam.beta * mesh.boundary_t * u[b, 0])
    scale = max(1.0, float(np.max(np.abs(u))))
    worst = float(np.max(viol)) / scale
    if worst > BC_TOL:
        raise BCViolationError(f"nodal boundary condition violated by {worst:.3g} > {BC_TOL}")
    return worst


def lemma_decompose(u: np.ndarray, mesh: Mesh, fam: BoundaryFamily, exact_gradient=None):
    """Split u = v + w with v satisfying the eta = 0 (or eta = pi) condition.

    For |beta| <= 1 take v = diag(beta, 1) u, so w = ((1 - beta) u1, 0) and the
    active operator is L = -i d1 + d2 acting on u1.  For |beta| > 1 take
    v = diag(1, 1/beta) u, so w = (0, (1 - 1/beta) u2) and L = -i d1 - d2 acting
    on u2.  Either way ||Tw||^2 + 2 Re<Tv, Tw> = (1 - B^2) ||L u_a||^2.

    The left side is evaluated from the P1 fields v, w.  ``exact_gradient``,
    if given, maps points of shape (..., 2) to the analytic gradient of the
    active component, shape (..., 2); the right side is then integrated from
    it by a degree-4 rule, independently of the mesh interpolant.

    Returns ``(v, w, report)``.
    """
    u = np.asarray(u, dtype=complex)
    bc_residual = _check_bc(u, mesh, fam)
    beta = fam.beta
    B = fam.B
    if abs(beta) <= 1.0:
        branch, active, sign = "u1", 0, +1.0
        scale = np.array([beta, 1.0])
    else:
        branch, active, sign = "u2", 1, -1.0
        scale = np.array([1.0, 1.0 / beta])
    v = u * scale[None, :]
    w = u - v

    _, areas = p1_gradients(mesh)
    Tv = _apply_T(mesh, v)
    Tw = _apply_T(mesh, w)
    norm_Tw = float(np.sum(areas * np.sum(np.abs(Tw) ** 2, axis=1)))
    cross = complex(np.sum(areas * np.sum(np.conj(Tv) * Tw, axis=1)))
    lhs = norm_Tw + 2 * cross.real

    ga = _element_gradients(mesh, u[:, active])
    Lu = -1j * ga[:, 0] + sign * ga[:, 1]
    rhs_discrete = (1 - B**2) * float(np.sum(areas * np.abs(Lu) ** 2))

    if exact_gradient is not None:
        p = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
        q = np.einsum("qi,tid->tqd", _TRI6_BARY, p)
        grad = np.asarray(exact_gradient(q))
        Lq = -1j * grad[..., 0] + sign * grad[..., 1]
        rhs = (1 - B**2) * float(np.sum(areas[:, None] * _TRI6_W[None, :] * np.abs(Lq) ** 2))
    else:
        rhs = rhs_discrete

    def rel(a, b):
        d = max(abs(a), abs(b))
        return abs(a - b) / d if d > 0 else 0.0

    mag = abs(cross)
    report = LemmaReport(
        branch=branch,
        B=B,
        lhs=lhs,
        rhs=rhs,
        rhs_discrete=rhs_discrete,
        rel_error=rel(lhs, rhs),
        rel_error_discrete=rel(lhs, rhs_discrete),
        cross_term=cross,
        cross_imag_rel=abs(cross.imag) / mag if mag > 0 else 0.0,
        extra={"bc_residual": bc_residual, "w_norm_max": float(np.max(np.abs(w)))},
    )
    return v, w, report


# auxiliary Neumann problem -----------------------------------------------------


@dataclass
class NeumannSolution:
    C: float
    f: np.ndarray
    solvability_residual: float
    discrete_compatibility: float
    linear_residual: float
    multiplier: float
    mesh: Mesh = field(repr=False)


def solve_neumann(mesh: Mesh, curve: BoundaryCurve | None = None) -> NeumannSolution:
    """P1 solution of Laplace f = C, d_n f = -kappa/2 with mean-zero gauge.

    C = -pi / |Omega| with the exact area, making the continuous problem
    solvable because the boundary curvature integrates to 2 pi.  The
    O(h^2) discrete incompatibility (polygonal area) is absorbed by the
    gauge multiplier and reported.
    """
    curve = curve or mesh.curve
    A = curve_area(curve)
    C = -math.pi / A
    solv = -0.5 * total_curvature(curve) - C * A
    if abs(solv) > SOLVABILITY_TOL:
        raise SingularSystemError(f"Neumann compatibility residual {solv:.3g} exceeds {SOLVABILITY_TOL}")

    K = stiffness_matrix(mesh)
    Mm = mass_matrix(mesh)
    ones = np.ones(mesh.n_vertices)
    kappa_load = boundary_weight_matrix(mesh, curve.curvature) @ ones
    m = Mm @ ones
    b = -0.5 * kappa_load - C * m
    n = mesh.n_vertices
    system = sp.bmat([[K, sp.csr_matrix(m[:, None])], [sp.csr_matrix(m[None, :]), None]], format="csc")
    sol = sla.spsolve(system, np.append(b, 0.0))
    f, lam = sol[:n], sol[n]
    lin = float(np.linalg.norm(K @ f + lam * m - b) / max(np.linalg.norm(b), 1e-300))
    return NeumannSolution(
        C=C,
        f=f,
        solvability_residual=float(solv),
        discrete_compatibility=float(np.sum(b)),
        linear_residual=lin,
        multiplier=float(lam),
        mesh=mesh,
    )


def _weighted_norm2(mesh: Mesh, weight: np.ndarray, u: np.ndarray) -> float:
    """Integral of weight * |u|^2 for nodal P1 fields, degree-4 element rule."""
    _, areas = p1_gradients(mesh)
    tw = weight[mesh.triangles]  # (nt, 3)
    wq = np.einsum("qi,ti->tq", _TRI6_BARY, tw)
    total = np.zeros_like(wq)
    for c in range(u.shape[1]):
        uq = np.einsum("qi,ti->tq", _TRI6_BARY, u[mesh.triangles, c])
        total += np.abs(uq) ** 2
    return float(np.sum(areas[:, None] * _TRI6_W[None, :] * wq * total))


def _boundary_defect(mesh: Mesh, f: np.ndarray, weight: np.ndarray, u: np.ndarray) -> float:
    """Boundary integral of e^{-2f} |u|^2 (kappa/2 + d_n f_h), d_n from the adjacent element."""
    grads = _element_gradients(mesh, f)
    edges = mesh.boundary_edges()
    # triangle owning each boundary edge
    owner = {}
    for t, tri in enumerate(mesh.triangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            owner[(a, b)] = t
    total = 0.0
    mid_theta = mesh.boundary_theta + 0.5 * mesh.edge_dtheta
    n_mid = -1j * mesh.curve.tangent(mid_theta)
    kappa_mid = mesh.curve.curvature(mid_theta)
    for k, (a, b) in enumerate(edges):
        t = owner[(a, b)]
        dn = grads[t, 0] * n_mid[k].real + grads[t, 1] * n_mid[k].imag
        length = np.linalg.norm(mesh.vertices[b] - mesh.vertices[a])
        val = 0.5 * (weight[a] * np.sum(np.abs(u[a]) ** 2) + weight[b] * np.sum(np.abs(u[b]) ** 2))
        total += length * val * (0.5 * kappa_mid[k] + dn)
    return float(total)


@dataclass
class ProofCheck:
    pair: int
    mu: float
    weighted_norm: float
    lhs: float
    rhs: float
    margin: float
    margin_normalized: float
    budget: float
    eigen_residual: float
    is_eigenpair: bool
    boundary_defect: float
    verdict: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def proof_inequality_check(
    res: EigenResult,
    ns: NeumannSolution,
    prob: AssembledProblem,
    pair: int = 0,
    budget: float = 0.0,
    gate: float = EIGENPAIR_GATE,
) -> ProofCheck:
    """Evaluate lambda^2/2 ||e^{-f} u||^2 >= -C ||e^{-f} u||^2 for one computed pair.

    With f solving the Neumann problem the boundary integrand kappa/2 + d_n f
    vanishes and Laplace f = C, leaving the two sides above.  ``budget`` is a
    gap-units error bar b; the margin may fall below zero by at most
    (g^2 - (g - b)^2)/2 * ||e^{-f}u||^2 with g = sqrt(-2C).
    """
    if not prob.family.is_infinite_mass:
        raise WrongEtaError(f"proof check needs eta in {{0, pi}}, got eta={prob.family.eta}")
    mu = float(res.eigenvalues[pair])
    x = res.vectors[:, pair]
    r = float(residuals(prob.S, prob.M, np.array([mu]), x[:, None])[0])
    u = prob.expand(x)
    weight = np.exp(-2 * ns.f)
    W = _weighted_norm2(prob.mesh, weight, u)
    lhs = 0.5 * mu * W
    rhs = -ns.C * W
    margin = lhs - rhs
    g = math.sqrt(-2 * ns.C)
    allowance = 0.5 * (g**2 - max(g - budget, 0.0) ** 2) * W
    is_pair = r <= gate
    if not is_pair:
        verdict = "NOT-EIGENPAIR"
    else:
        verdict = "PASS" if margin >= -allowance else "FAIL"
    return ProofCheck(
        pair=pair,
        mu=mu,
        weighted_norm=W,
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        margin_normalized=margin / W,
        budget=allowance,
        eigen_residual=r,
        is_eigenpair=is_pair,
        boundary_defect=_boundary_defect(prob.mesh, ns.f, weight, u),
        verdict=verdict,
    )
