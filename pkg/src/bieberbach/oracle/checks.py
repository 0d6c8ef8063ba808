"""Lemma-level cross checks built on the grid graph."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ..errors import SpecError
from ..groups import QuotientSpec, apply, deck_words, invariant_axes, make_quotient
from ..lattice import Lattice2D
from ..metric import bavard_profile
from .graph import SystoleEstimate, build_graph, systole_estimate, tolerance_model


# ---------------------------------------------------------------- coset displacement

@dataclass(frozen=True)
class CosetCheck:
    estimate: SystoleEstimate
    bound: float
    axis_distance: float       # from the minimizing basepoint to the nearest invariant axis
    grid_step: float

    @property
    def passed(self) -> bool:
        return (self.estimate.value + self.estimate.eps >= self.bound
                and self.axis_distance <= self.grid_step * (1 + 1e-9))


def coset_displacement(spec: QuotientSpec, power: int, h: float, bound: float, k: int = 2,
                       max_word_length: int = 3) -> CosetCheck:
    """min over grid basepoints of d(m, gamma m), gamma ranging over lifts of g^power."""
    est = systole_estimate(spec, h, k, max_word_length, coset_power=power)
    T = spec.lattice_matrix[:2, :2]
    shifts = np.array([(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float) @ T
    axes = np.array([[ax.x, ax.y] for ax in invariant_axes(spec, power % spec.order)])
    cand = (axes[:, None, :] + shifts[None]).reshape(-1, 2)
    dist = float(np.min(np.linalg.norm(cand - est.basepoint[:2], axis=1)))
    return CosetCheck(est, float(bound), dist, est.h)


# ---------------------------------------------------------------- Klein bottle section

PHI0 = np.pi / 4


def bavard_area(phi0: float = PHI0) -> float:
    """Area of the bottle [0, pi] x [0, 2 pi] / glide with profile cos on |phi| <= phi0."""
    brk = np.arange(phi0, np.pi, 2 * phi0)
    val, _ = quad(lambda x: bavard_profile(x, phi0), 0.0, np.pi, points=brk, epsabs=1e-13)
    return np.pi * val


@dataclass(frozen=True)
class BavardCheck:
    systole: float
    eps: float
    area: float
    ratio: float
    h: float
    n_nodes: int

    @property
    def target(self) -> float:
        return np.pi / (2 * np.sqrt(2))


def bavard_check(h: float, k: int = 2, max_word_length: int = 3) -> BavardCheck:
    """Systolic ratio of the plane y = 0 of the square singular torus, a = pi/4.

    That plane is invariant under the half-turn screw sigma and the horizontal
    translation by 4a = pi; its induced metric is dx^2 + profile(x)^2 dz^2 and
    the quotient is the extremal Klein bottle.
    """
    spec = make_quotient("C2", "square", PHI0)
    lat: Lattice2D = spec.metric.lattice
    V = spec.metric.vertical_period
    m = max(1, int(round(lat.a / h)))
    hh = lat.a / m
    nz = int(round(V / hh))
    hz = V / nz
    per_pi = 4 * m                                   # grid steps across x in [0, pi)
    graph = build_graph(spec.metric, hh, k, vertical_step=hz,
                        extent=((-per_pi, 2 * per_pi + 1), (0, 1), (0, nz + 1)))

    words = [w for w in deck_words(spec, max_word_length)
             if abs(w.translation[1]) < 1e-12 and abs(abs(w.linear[1, 1]) - 1) < 1e-12
             and w.translation[2] >= -1e-12]
    if not words:
        raise SpecError("no plane-preserving deck words")
    nodes = graph.node_index
    base_ids = np.nonzero((nodes[:, 2] == 0) & (nodes[:, 0] >= 0) & (nodes[:, 0] < per_pi))[0]
    base = graph.points(base_ids)
    dist = graph.shortest_paths(base_ids, limit=1.5 * np.pi)
    best = np.inf
    for w in words:
        tgt, _ = graph.locate(apply(w, base))
        ok = tgt >= 0
        if ok.any():
            best = min(best, float(dist[np.nonzero(ok)[0], tgt[ok]].min()))
    area = bavard_area()
    return BavardCheck(best, tolerance_model(graph, best), area, best ** 2 / area, hh, graph.n_nodes)


# ---------------------------------------------------------------- minimal projection

def minimal_projection(points, lattice: Lattice2D, center=None, shrink: float = 1.0) -> np.ndarray:
    """Move each point horizontally to the nearest point of the cell prism
    around ``center`` (a lattice point), optionally shrunk by ``shrink``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    c = np.zeros(2) if center is None else np.asarray(center, dtype=float)[:2]
    cell = lattice.cell.scaled(shrink)
    pts[:, :2] = cell.project(pts[:, :2] - c) + c
    return pts


def densify(points, n: int) -> np.ndarray:
    """Insert n - 1 evenly spaced points in every segment."""
    p = np.asarray(points, dtype=float)
    t = np.arange(n)[:, None] / n
    seg = p[:-1, None, :] + t[None] * (p[1:] - p[:-1])[:, None, :]
    return np.vstack([seg.reshape(-1, p.shape[1]), p[-1:]])
