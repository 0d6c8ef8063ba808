"""Planar square and hexagonal lattices and their Dirichlet-Voronoi cells.

Conventions: the lattice is generated by two vectors of norm ``2a``, so the
Voronoi cell has apothem ``a``.  The hexagonal lattice keeps one generator on
the x-axis, ``(2a, 0)`` and ``(a, a*sqrt(3))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import SpecError

SQRT3 = np.sqrt(3.0)

# Candidate corners of the fundamental parallelogram, in lexicographic order.
# For both supported lattices the nearest lattice point to p is one of the
# four corners of the parallelogram containing p.
_CORNERS = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])


@dataclass(frozen=True)
class CellPolygon:
    """Convex Voronoi cell, vertices ordered counter-clockwise."""

    vertices: np.ndarray
    center: np.ndarray
    apothem: float
    circumradius: float

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    @cached_property
    def _edges(self):
        v0 = self.vertices
        v1 = np.roll(self.vertices, -1, axis=0)
        d = v1 - v0
        # outward normals for a CCW polygon
        nrm = np.stack([d[:, 1], -d[:, 0]], axis=1)
        nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
        return v0, d, nrm, np.einsum("ij,ij->i", nrm, v0)

    def contains(self, p, tol: float = 1e-12) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        _, _, nrm, off = self._edges
        return np.all(p[..., :2] @ nrm.T <= off + tol, axis=-1)

    def scaled(self, factor: float) -> "CellPolygon":
        """Parallel polygon with the same center, scaled by ``factor``."""
        return CellPolygon(
            vertices=self.center + factor * (self.vertices - self.center),
            center=self.center.copy(),
            apothem=factor * self.apothem,
            circumradius=factor * self.circumradius,
        )

    def project(self, p) -> np.ndarray:
        """Euclidean nearest point of the polygon (identity inside)."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        v0, d, _, _ = self._edges
        rel = p[:, None, :] - v0[None]
        t = np.clip(np.einsum("nkj,kj->nk", rel, d) / np.einsum("kj,kj->k", d, d), 0.0, 1.0)
        foot = v0[None] + t[..., None] * d[None]
        dist = np.linalg.norm(p[:, None, :] - foot, axis=-1)
        best = foot[np.arange(len(p)), np.argmin(dist, axis=1)]
        inside = self.contains(p)
        return np.where(np.atleast_1d(inside)[:, None], p, best)


@dataclass(frozen=True)
class Lattice2D:
    kind: str
    a: float
    basis: np.ndarray = field(repr=False, compare=False)

    @property
    def is_hexagonal(self) -> bool:
        return self.kind == "hexagonal"

    @cached_property
    def _inverse(self) -> np.ndarray:
        # basis rows are generators; columns of basis.T map integer coords to points
        return np.linalg.inv(self.basis.T)

    @property
    def point_group_order(self) -> int:
        """Order of the rotation subgroup fixing a lattice point (4 or 6)."""
        return 6 if self.is_hexagonal else 4

    @cached_property
    def cell(self) -> CellPolygon:
        a = self.a
        if self.is_hexagonal:
            R = 2.0 * a / SQRT3
            ang = np.pi / 6 + np.arange(6) * np.pi / 3
            verts = R * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        else:
            R = a * np.sqrt(2.0)
            verts = np.array([[a, -a], [a, a], [-a, a], [-a, -a]], dtype=float)
        return CellPolygon(verts, np.zeros(2), a, R)

    @property
    def circumradius(self) -> float:
        return self.cell.circumradius

    def to_coords(self, p) -> np.ndarray:
        return np.asarray(p, dtype=float) @ self._inverse.T

    def to_point(self, n) -> np.ndarray:
        return np.asarray(n, dtype=float) @ self.basis

    def wall_normals(self) -> np.ndarray:
        """Unit normals of the line families x.n = k*a that carry all cell walls."""
        if self.is_hexagonal:
            ang = np.array([0.0, np.pi / 3, 2 * np.pi / 3])
            return np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return np.eye(2)


def make_lattice(kind: str, a: float) -> Lattice2D:
    kind = {"hex": "hexagonal", "sq": "square"}.get(kind, kind)
    if kind not in ("square", "hexagonal"):
        raise SpecError(f"unknown lattice kind {kind!r}")
    if not a > 0:
        raise SpecError(f"lattice scale must be positive, got {a!r}")
    a = float(a)
    if kind == "square":
        basis = np.array([[2 * a, 0.0], [0.0, 2 * a]])
    else:
        basis = np.array([[2 * a, 0.0], [a, a * SQRT3]])
    return Lattice2D(kind, a, basis)


def _nearest(p, lat: Lattice2D):
    p = np.asarray(p, dtype=float)
    base = np.floor(lat.to_coords(p)).astype(np.int64)
    cand = base[..., None, :] + _CORNERS
    diff = p[..., None, :] - cand.astype(float) @ lat.basis
    d2 = np.einsum("...j,...j->...", diff, diff)
    tol = 1e-12 * (lat.a * lat.a)
    ok = d2 <= d2.min(axis=-1, keepdims=True) + tol
    # first admissible corner in lexicographic order
    pick = np.argmax(ok, axis=-1)
    n = np.take_along_axis(cand, pick[..., None, None], axis=-2)[..., 0, :]
    return n, np.sqrt(np.take_along_axis(d2, pick[..., None], axis=-1)[..., 0])


def nearest_lattice_coords(p, lat: Lattice2D) -> np.ndarray:
    """Integer lattice coordinates of the nearest center (lexicographic tie-break)."""
    return _nearest(p, lat)[0]


def nearest_center(p, lat: Lattice2D) -> np.ndarray:
    n, _ = _nearest(p, lat)
    return n.astype(float) @ lat.basis


def dist_to_lattice(p, lat: Lattice2D):
    """Euclidean distance from p (shape (..., 2)) to the nearest lattice point."""
    d = _nearest(p, lat)[1]
    return float(d) if np.ndim(d) == 0 else d
