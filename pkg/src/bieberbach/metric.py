"""The singular metric dx^2 + dy^2 + cos^2(d((x,y), lattice)) dz^2 and curve lengths.

Flat metrics are carried by the Gram matrix of a basis; their points are given
in coordinates relative to that basis, so the flat torus is always R^3 / Z^3.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SpecError
from .lattice import Lattice2D, dist_to_lattice, make_lattice

TWO_PI = 2.0 * np.pi

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_T = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W

_CHUNK = 100_000


@dataclass(frozen=True, eq=False)
class MetricSpec:
    kind: str
    lattice: Lattice2D | None = None
    flat_basis: np.ndarray | None = None
    vertical_period: float = TWO_PI

    def __post_init__(self):
        if not self.vertical_period > 0:
            raise SpecError("vertical period must be positive")
        if self.kind == "singular":
            if self.lattice is None:
                raise SpecError("singular metric needs a lattice")
            if not self.lattice.circumradius < np.pi / 2:
                raise DomainError(
                    f"cell circumradius {self.lattice.circumradius:.6g} >= pi/2; "
                    "cos^2 of the distance to the lattice would vanish")
        elif self.kind == "flat":
            if self.flat_basis is None:
                raise SpecError("flat metric needs a basis")
            B = np.asarray(self.flat_basis, dtype=float)
            if B.shape != (3, 3) or abs(np.linalg.det(B)) < 1e-14:
                raise SpecError("flat basis must be three independent 3-vectors")
            object.__setattr__(self, "flat_basis", B)
        else:
            raise SpecError(f"unknown metric kind {self.kind!r}")

    @property
    def is_flat(self) -> bool:
        return self.kind == "flat"

    @property
    def gram(self) -> np.ndarray:
        B = self.flat_basis
        return B @ B.T


def singular_metric(kind: str, a: float, vertical_period: float = TWO_PI) -> MetricSpec:
    return MetricSpec("singular", lattice=make_lattice(kind, a), vertical_period=vertical_period)


def flat_metric(basis) -> MetricSpec:
    return MetricSpec("flat", flat_basis=np.asarray(basis, dtype=float))


class Polyline3:
    """Ordered vertices of a piecewise linear curve in the universal cover."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 2:
            raise SpecError("a polyline needs at least two 3-points")
        if np.any(np.all(np.diff(pts, axis=0) == 0.0, axis=1)):
            raise SpecError("consecutive polyline vertices must be distinct")
        self.points = pts

    def __len__(self):
        return len(self.points)

    def transformed(self, fn) -> "Polyline3":
        return Polyline3(fn(self.points))


def psi(p, lat: Lattice2D):
    """cos^2 of the distance to the lattice."""
    return np.cos(dist_to_lattice(p, lat)) ** 2


def metric_tensor(q, spec: MetricSpec) -> np.ndarray:
    if spec.is_flat:
        return spec.gram.copy()
    q = np.asarray(q, dtype=float)
    return np.diag([1.0, 1.0, float(psi(q[:2], spec.lattice))])


def _wall_breaks(p0, p1, lat: Lattice2D) -> np.ndarray:
    """Sorted parameters in [0, 1] where segments cross any wall-carrying line."""
    nrm = lat.wall_normals()
    s0 = p0[:, :2] @ nrm.T / lat.a
    s1 = p1[:, :2] @ nrm.T / lat.a
    ds = s1 - s0
    lo = np.floor(np.minimum(s0, s1)) + 1.0
    hi = np.ceil(np.maximum(s0, s1)) - 1.0
    counts = np.maximum(hi - lo + 1.0, 0.0).astype(np.int64)
    cols = [np.zeros(len(p0)), np.ones(len(p0))]
    safe = np.where(ds == 0.0, 1.0, ds)
    for f in range(nrm.shape[0]):
        for j in range(int(counts[:, f].max(initial=0))):
            k = lo[:, f] + j
            t = (k - s0[:, f]) / safe[:, f]
            cols.append(np.where(k <= hi[:, f], np.clip(t, 0.0, 1.0), 1.0))
    return np.sort(np.stack(cols, axis=1), axis=1)


def _singular_lengths(p0, p1, lat: Lattice2D) -> np.ndarray:
    d = p1 - p0
    hxy2 = d[:, 0] ** 2 + d[:, 1] ** 2
    dz2 = d[:, 2] ** 2
    tb = _wall_breaks(p0, p1, lat)
    width = np.diff(tb, axis=1)                                # (S, I)
    t = tb[:, :-1, None] + width[..., None] * _GL_T            # (S, I, 8)
    xy = p0[:, None, None, :2] + t[..., None] * d[:, None, None, :2]
    ps = np.cos(dist_to_lattice(xy, lat)) ** 2
    speed = np.sqrt(hxy2[:, None, None] + ps * dz2[:, None, None])
    return np.einsum("sij,j,si->s", speed, _GL_W, width)


def segment_lengths(p0, p1, spec: MetricSpec) -> np.ndarray:
    """Length of each straight segment p0[i] -> p1[i] (arrays of shape (S, 3))."""
    p0 = np.atleast_2d(np.asarray(p0, dtype=float))
    p1 = np.atleast_2d(np.asarray(p1, dtype=float))
    if spec.is_flat:
        d = p1 - p0
        return np.sqrt(np.einsum("si,ij,sj->s", d, spec.gram, d))
    out = np.empty(len(p0))
    for s in range(0, len(p0), _CHUNK):
        out[s:s + _CHUNK] = _singular_lengths(p0[s:s + _CHUNK], p1[s:s + _CHUNK], spec.lattice)
    return out


def curve_length(c, spec: MetricSpec) -> float:
    """Length of a polyline; each segment is split at cell walls and
    integrated with 8-point Gauss-Legendre."""
    pts = c.points if isinstance(c, Polyline3) else Polyline3(c).points
    return float(segment_lengths(pts[:-1], pts[1:], spec).sum())


def bavard_profile(phi, phi0: float):
    """The 2*phi0-periodic even function equal to cos(phi) on [-phi0, phi0]."""
    if not 0.0 < phi0 < np.pi / 2:
        raise DomainError("phi0 must lie in (0, pi/2)")
    phi = np.asarray(phi, dtype=float)
    folded = phi - 2.0 * phi0 * np.round(phi / (2.0 * phi0))
    out = np.cos(folded)
    return float(out) if out.ndim == 0 else out
