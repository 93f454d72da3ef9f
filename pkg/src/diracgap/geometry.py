"""Star-shaped boundary curves and mapped structured triangulations.

A curve is parametrized by an angle ``theta`` in [0, 2*pi), counterclockwise,
so the outward normal ``n`` and tangent ``t`` form a positively oriented frame
and a circle of radius R has curvature +1/R.  Complex numbers are used for
planar directions: the tangent phase is ``t = t1 + i t2`` and the outward
normal is ``n = -i t``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

# Number of trapezoid nodes for periodic curve integrals.  The integrands are
# analytic and periodic, so the rule converges geometrically.
_QUAD_NODES = 4096
# Triangle diameters of the mapped mesh stay below this multiple of h.
MESH_SIZE_CONSTANT = 2.0
MAX_ASPECT_RATIO = 10.0


class InvalidCurveError(ValueError):
    pass


class DegenerateMeshError(RuntimeError):
    pass


@dataclass(frozen=True)
class BoundaryCurve:
    """C^2 simple closed curve, star-shaped with respect to the origin.

    kind is one of ``"disc"``, ``"ellipse"``, ``"fourier"``.  ``harmonics``
    holds ``(n, a_n, b_n)`` triples for the fourier-star radius
    ``r(theta) = r0 + sum a_n cos(n theta) + b_n sin(n theta)``.  ``rotation``
    rigidly rotates the whole curve about the origin.
    """

    kind: str
    R: float = 1.0
    a: float = 1.0
    b: float = 1.0
    r0: float = 1.0
    harmonics: tuple[tuple[int, float, float], ...] = ()
    rotation: float = 0.0

    def __post_init__(self):
        if self.kind == "disc":
            if not self.R > 0:
                raise InvalidCurveError(f"disc radius must be positive, got {self.R}")
        elif self.kind == "ellipse":
            if not (self.a > 0 and self.b > 0):
                raise InvalidCurveError(
                    f"ellipse semi-axes must be positive, got a={self.a}, b={self.b}"
                )
        elif self.kind == "fourier":
            harmonics = tuple((int(n), float(an), float(bn)) for n, an, bn in self.harmonics)
            object.__setattr__(self, "harmonics", harmonics)
            if any(n < 1 for n, _, _ in harmonics):
                raise InvalidCurveError("fourier harmonics need n >= 1")
            theta = np.linspace(0.0, 2 * np.pi, 16384, endpoint=False)
            r_min = float(np.min(self._radius(theta)[0]))
            if not r_min > 0:
                raise InvalidCurveError(
                    f"fourier-star radius must stay positive, min r(theta) = {r_min:.6g}"
                )
        else:
            raise InvalidCurveError(f"unknown curve kind {self.kind!r}")

    # construction helpers -------------------------------------------------

    @classmethod
    def disc(cls, R: float = 1.0) -> "BoundaryCurve":
        return cls("disc", R=R)

    @classmethod
    def ellipse(cls, a: float, b: float) -> "BoundaryCurve":
        return cls("ellipse", a=a, b=b)

    @classmethod
    def fourier(cls, r0: float, harmonics: Sequence[tuple[int, float, float]]) -> "BoundaryCurve":
        return cls("fourier", r0=r0, harmonics=tuple(harmonics))

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryCurve":
        kind = d.get("type")
        if kind == "disc":
            return cls.disc(float(d.get("R", 1.0)))
        if kind == "ellipse":
            return cls.ellipse(float(d["a"]), float(d["b"]))
        if kind == "fourier":
            harm = [(h["n"], h.get("a", 0.0), h.get("b", 0.0)) for h in d.get("harmonics", [])]
            return cls.fourier(float(d.get("r0", 1.0)), harm)
        raise InvalidCurveError(f"unknown domain type {kind!r}")

    @classmethod
    def from_json(cls, path: str | Path) -> "BoundaryCurve":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        if self.kind == "disc":
            return {"type": "disc", "R": self.R}
        if self.kind == "ellipse":
            return {"type": "ellipse", "a": self.a, "b": self.b}
        return {
            "type": "fourier",
            "r0": self.r0,
            "harmonics": [{"n": n, "a": an, "b": bn} for n, an, bn in self.harmonics],
        }

    def scaled(self, r: float) -> "BoundaryCurve":
        return replace(
            self,
            R=self.R * r,
            a=self.a * r,
            b=self.b * r,
            r0=self.r0 * r,
            harmonics=tuple((n, an * r, bn * r) for n, an, bn in self.harmonics),
        )

    def rotated(self, phi: float) -> "BoundaryCurve":
        return replace(self, rotation=self.rotation + phi)

    # parametrization ------------------------------------------------------

    def _radius(self, theta):
        """r, r', r'' of the fourier-star radius."""
        r = np.full_like(theta, self.r0, dtype=float)
        dr = np.zeros_like(r)
        ddr = np.zeros_like(r)
        for n, an, bn in self.harmonics:
            c, s = np.cos(n * theta), np.sin(n * theta)
            r += an * c + bn * s
            dr += n * (-an * s + bn * c)
            ddr += -n * n * (an * c + bn * s)
        return r, dr, ddr

    def _derivatives(self, theta):
        """gamma, gamma', gamma'' as complex numbers (unrotated)."""
        theta = np.asarray(theta, dtype=float)
        e = np.exp(1j * theta)
        if self.kind == "disc":
            g = self.R * e
            return g, 1j * g, -g
        if self.kind == "ellipse":
            c, s = np.cos(theta), np.sin(theta)
            g = self.a * c + 1j * self.b * s
            dg = -self.a * s + 1j * self.b * c
            return g, dg, -g
        r, dr, ddr = self._radius(theta)
        g = r * e
        dg = (dr + 1j * r) * e
        ddg = (ddr + 2j * dr - r) * e
        return g, dg, ddg

    def point(self, theta):
        g, _, _ = self._derivatives(theta)
        z = g * np.exp(1j * self.rotation)
        return np.stack([z.real, z.imag], axis=-1)

    def speed(self, theta):
        """|gamma'(theta)|, the arclength density ds/dtheta."""
        return np.abs(self._derivatives(theta)[1])

    def tangent(self, theta):
        """Unit tangent as a complex phase t = t1 + i t2."""
        dg = self._derivatives(theta)[1]
        return dg / np.abs(dg) * np.exp(1j * self.rotation)

    def curvature(self, theta):
        _, dg, ddg = self._derivatives(theta)
        return np.imag(np.conj(dg) * ddg) / np.abs(dg) ** 3

    def evaluate(self, theta: float):
        """Return ``(point, t, n, kappa)`` at a single parameter value.

        ``n`` is returned as a real 2-vector; ``t`` as a unit complex number.
        """
        th = np.asarray([theta], dtype=float)
        t = self.tangent(th)[0]
        nz = -1j * t
        return (
            self.point(th)[0],
            complex(t),
            np.array([nz.real, nz.imag]),
            float(self.curvature(th)[0]),
        )

    def max_radius(self) -> float:
        theta = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
        return float(np.max(np.abs(self._derivatives(theta)[0])))

    def diameter(self) -> float:
        theta = np.linspace(0.0, 2 * np.pi, 512, endpoint=False)
        p = self.point(theta)
        d = p[:, None, :] - p[None, :, :]
        return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))


def _periodic_nodes(n: int = _QUAD_NODES):
    return np.linspace(0.0, 2 * np.pi, n, endpoint=False), 2 * np.pi / n


def area(curve: BoundaryCurve) -> float:
    """Enclosed area by Green's theorem, 1/2 * closed integral of (x dy - y dx)."""
    theta, w = _periodic_nodes()
    g, dg, _ = curve._derivatives(theta)
    return 0.5 * w * float(np.sum(np.imag(np.conj(g) * dg)))


def total_curvature(curve: BoundaryCurve) -> float:
    theta, w = _periodic_nodes()
    return w * float(np.sum(curve.curvature(theta) * curve.speed(theta)))


def perimeter(curve: BoundaryCurve) -> float:
    theta, w = _periodic_nodes()
    return w * float(np.sum(curve.speed(theta)))


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation of the domain with exact boundary annotations.

    ``boundary`` lists boundary vertex indices counterclockwise; the boundary
    edge ``k`` runs from ``boundary[k]`` to ``boundary[k+1]`` (cyclically) and
    covers the parameter interval ``[boundary_theta[k], boundary_theta[k] +
    edge_dtheta[k]]``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    boundary_theta: np.ndarray
    boundary_t: np.ndarray
    boundary_kappa: np.ndarray
    boundary_ds: np.ndarray
    edge_dtheta: np.ndarray
    h: float
    curve: BoundaryCurve
    is_boundary: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        flag = np.zeros(len(self.vertices), dtype=bool)
        flag[self.boundary] = True
        object.__setattr__(self, "is_boundary", flag)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_interior(self) -> int:
        return self.n_vertices - len(self.boundary)

    def boundary_edges(self) -> np.ndarray:
        return np.stack([self.boundary, np.roll(self.boundary, -1)], axis=1)

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def triangle_diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        return np.max(np.linalg.norm(e, axis=-1), axis=1)

    def aspect_ratios(self) -> np.ndarray:
        """Circumradius over twice the inradius; 1 for equilateral triangles."""
        p = self.vertices[self.triangles]
        la = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
        lb = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
        lc = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
        A = np.abs(self.triangle_areas())
        s = 0.5 * (la + lb + lc)
        circ = la * lb * lc / (4 * A)
        inr = A / s
        return circ / (2 * inr)

    def transformed(self, scale: float = 1.0, rotation: float = 0.0) -> "Mesh":
        """Same connectivity under x -> scale * Rot(rotation) x.

        Geometry annotations are recomputed from the transformed curve, never
        from the transformed vertex coordinates.
        """
        curve = self.curve.scaled(scale).rotated(rotation)
        z = (self.vertices[:, 0] + 1j * self.vertices[:, 1]) * (scale * np.exp(1j * rotation))
        verts = np.stack([z.real, z.imag], axis=1)
        verts[self.boundary] = curve.point(self.boundary_theta)
        return _annotate(verts, self.triangles, self.boundary, self.boundary_theta, self.h * scale, curve)


def _annotate(verts, tris, boundary, theta_b, h, curve) -> Mesh:
    dtheta = np.diff(np.append(theta_b, 2 * np.pi))
    arcs = np.array([_arc_length(curve, a, d) for a, d in zip(theta_b, dtheta)])
    ds = 0.5 * (arcs + np.roll(arcs, 1))
    return Mesh(
        vertices=verts,
        triangles=tris,
        boundary=boundary,
        boundary_theta=theta_b,
        boundary_t=curve.tangent(theta_b),
        boundary_kappa=curve.curvature(theta_b),
        boundary_ds=ds,
        edge_dtheta=dtheta,
        h=h,
        curve=curve,
    )


def _arc_length(curve, theta0, dtheta):
    x, w = GAUSS3
    th = theta0 + x * dtheta
    return float(np.sum(w * curve.speed(th))) * dtheta


# 3-point Gauss-Legendre rule on [0, 1]
GAUSS3 = (
    np.array([0.5 - math.sqrt(0.15), 0.5, 0.5 + math.sqrt(0.15)]),
    np.array([5 / 18, 8 / 18, 5 / 18]),
)


def _ring_triangles(inner: np.ndarray, outer: np.ndarray) -> list[tuple[int, int, int]]:
    """Stitch two concentric rings of vertex ids with uniform angular spacing."""
    n_in, n_out = len(inner), len(outer)
    tris = []
    if n_in == 1:
        for k in range(n_out):
            tris.append((inner[0], outer[k], outer[(k + 1) % n_out]))
        return tris
    i = o = 0
    # advance along whichever ring has the smaller next angle
    while i < n_in or o < n_out:
        next_in = (i + 1) / n_in
        next_out = (o + 1) / n_out
        if o < n_out and (i >= n_in or next_out <= next_in):
            tris.append((inner[i % n_in], outer[o], outer[(o + 1) % n_out]))
            o += 1
        else:
            tris.append((inner[i], outer[o % n_out], inner[(i + 1) % n_in]))
            i += 1
    return tris


def triangulate(curve: BoundaryCurve, h: float) -> Mesh:
    """Mapped structured disc mesh: ring j of N carries 6j vertices at rho_j * gamma(theta).

    The ring count is N = ceil(max|gamma| / h), so triangle diameters stay
    below ``MESH_SIZE_CONSTANT * h`` for the supported curve families.
    """
    diam = curve.diameter()
    if not (0 < h < diam / 4):
        raise ValueError(f"mesh size h={h} outside (0, diameter/4 = {diam / 4:.4g})")
    n_rings = int(math.ceil(curve.max_radius() / h - 1e-9))

    verts = [np.zeros((1, 2))]
    rings = [np.array([0])]
    count = 1
    theta_b = None
    for j in range(1, n_rings + 1):
        n = 6 * j
        theta = 2 * np.pi * np.arange(n) / n
        rho = j / n_rings
        pts = curve.point(theta)
        if j < n_rings:
            pts = rho * pts
        else:
            theta_b = theta
        verts.append(pts)
        rings.append(np.arange(count, count + n))
        count += n
    verts = np.concatenate(verts)
    tris = []
    for j in range(n_rings):
        tris.extend(_ring_triangles(rings[j], rings[j + 1]))
    tris = np.array(tris, dtype=np.int64)

    mesh = _annotate(verts, tris, rings[-1], theta_b, h, curve)
    areas = mesh.triangle_areas()
    if np.any(areas <= 0):
        raise DegenerateMeshError(f"{int(np.sum(areas <= 0))} triangles with non-positive area")
    worst = float(np.max(mesh.aspect_ratios()))
    if worst > MAX_ASPECT_RATIO:
        raise DegenerateMeshError(f"aspect ratio {worst:.3g} exceeds limit {MAX_ASPECT_RATIO}")
    return mesh
