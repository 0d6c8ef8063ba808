"""Volumes of the flat and singular quotients.

The Riemannian density of dx^2 + dy^2 + cos^2(r) dz^2 is cos(r), r the
distance to the nearest lattice point, so one prism of height H has volume
H times the integral of cos(r) over a Voronoi cell.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DomainError
from .groups import QuotientSpec
from .lattice import Lattice2D, dist_to_lattice


@dataclass(frozen=True)
class VolumeResult:
    value: float
    estimated_error: float
    cell_integral: float


def _radial(R):
    # integral_0^R r cos r dr
    return R * np.sin(R) - 2.0 * np.sin(0.5 * R) ** 2


def _check(lat: Lattice2D):
    if not lat.circumradius < np.pi / 2:
        raise DomainError("cell circumradius must be < pi/2")


def cell_integral_with_error(lat: Lattice2D) -> tuple[float, float]:
    _check(lat)
    # 12 (hexagon) or 8 (square) congruent right triangles center/edge-midpoint/vertex
    n, half_angle = (12, np.pi / 6) if lat.is_hexagonal else (8, np.pi / 4)
    a = lat.a
    val, err = quad(lambda t: _radial(a / np.cos(t)), 0.0, half_angle,
                    epsabs=1e-14, epsrel=1e-13, limit=200)
    return n * val, n * err


def cell_integral(lat: Lattice2D) -> float:
    """Integral of cos(distance to center) over one Voronoi cell."""
    return cell_integral_with_error(lat)[0]


def cell_integral_full(lat: Lattice2D) -> float:
    """Same integral in polar coordinates over the whole cell, without using
    the dihedral symmetry; split at the vertex directions."""
    _check(lat)
    cell = lat.cell
    verts = cell.vertices
    out = 0.0
    for v0, v1 in zip(verts, np.roll(verts, -1, axis=0)):
        t0 = np.arctan2(v0[1], v0[0])
        t1 = np.arctan2(v1[1], v1[0])
        if t1 < t0:
            t1 += 2 * np.pi
        edge = v1 - v0
        nrm = np.array([edge[1], -edge[0]]) / np.linalg.norm(edge)
        h = float(nrm @ v0)
        phi = np.arctan2(nrm[1], nrm[0])
        val, _ = quad(lambda t: _radial(h / np.cos(t - phi)), t0, t1, epsabs=1e-14, epsrel=1e-13)
        out += val
    return out


def manifold_volume(spec: QuotientSpec) -> VolumeResult:
    """Torus volume divided by the order of the holonomy group.

    Singular torus: four prisms (one 2*Delta block) of height vertical_period.
    """
    m = spec.metric
    if m.is_flat:
        vol = abs(float(np.linalg.det(m.flat_basis))) / spec.order
        return VolumeResult(vol, float(4 * np.finfo(float).eps * vol), float("nan"))
    ci, err = cell_integral_with_error(m.lattice)
    factor = 4.0 * m.vertical_period / spec.order
    # quad's own estimate is often far below 1e-13; floor it at round-off
    err = max(err, 64 * np.finfo(float).eps * ci)
    return VolumeResult(factor * ci, float(factor * err), ci)


def monte_carlo_volume(spec: QuotientSpec, n_samples: int = 10_000_000, seed: int = 0,
                       chunk: int = 1_000_000) -> tuple[float, float]:
    """Plain Monte Carlo over the torus fundamental block; returns (value, standard error)."""
    m = spec.metric
    if m.is_flat:
        raise ValueError("Monte Carlo volume is only meaningful for singular metrics")
    lat = m.lattice
    T = spec.lattice_matrix[:2, :2]
    block = abs(np.linalg.det(T)) * m.vertical_period
    rng = np.random.default_rng(seed)
    s1 = s2 = 0.0
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        uv = rng.random((k, 2))
        vals = np.cos(dist_to_lattice(uv @ T, lat))
        s1 += vals.sum()
        s2 += (vals * vals).sum()
        done += k
    mean = s1 / n_samples
    var = max(s2 / n_samples - mean * mean, 0.0)
    scale = block / spec.order
    return float(scale * mean), float(scale * np.sqrt(var / n_samples))
