"""Jacobi fields along the central vertical geodesic of a hexagonal cell and
the second variation of length for curves joining m to phi_c(m).

Near the axis the metric is the round-sphere-like warped product
dr^2 + r^2 dtheta^2 + cos^2(r) dz^2, whose (T, V) sectional curvature is 1,
so normal Jacobi fields solve f'' + f = 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, SpecError
from ..metric import MetricSpec, curve_length, singular_metric

ALPHA = 2 * np.pi / 3


@dataclass(frozen=True)
class JacobiFields:
    """f1, f2 along s in [0, c] with V(0) = E1 and V(c) = rotation of E1 by 2pi/3."""
    c: float
    p: float          # coefficient of sin s in f1
    q: float          # coefficient of sin s in f2

    def f1(self, s):
        return np.cos(s) + self.p * np.sin(s)

    def f2(self, s):
        return self.q * np.sin(s)

    def df1(self, s):
        return -np.sin(s) + self.p * np.cos(s)

    def df2(self, s):
        return self.q * np.cos(s)

    def __iter__(self):
        return iter((self.f1, self.f2))


def jacobi_fields(c: float) -> JacobiFields:
    s = np.sin(c)
    if not 0.0 < c < np.pi or abs(s) < 1e-12:
        raise SpecError("c must lie in (0, pi)")
    return JacobiFields(float(c), (np.cos(ALPHA) - np.cos(c)) / s, np.sin(ALPHA) / s)


def index_form(c):
    """sin^2(alpha)(cos c - cos alpha) + cos(alpha)(cos^2 c - cos^2 alpha), alpha = 2pi/3."""
    c = np.asarray(c, dtype=float)
    ca, sa = np.cos(ALPHA), np.sin(ALPHA)
    out = sa ** 2 * (np.cos(c) - ca) + ca * (np.cos(c) ** 2 - ca ** 2)
    return float(out) if out.ndim == 0 else out


def boundary_term(c: float) -> float:
    """f1(c) f1'(c) + f2(c) f2'(c) - f1'(0), evaluated from the fields."""
    J = jacobi_fields(c)
    return float(J.f1(c) * J.df1(c) + J.f2(c) * J.df2(c) - J.df1(0.0))


def boundary_term_closed(c):
    # the same quantity simplified by hand: 2 (cos c - cos alpha) / sin c
    c = np.asarray(c, dtype=float)
    out = 2.0 * (np.cos(c) - np.cos(ALPHA)) / np.sin(c)
    return float(out) if out.ndim == 0 else out


def _perturbed_length(spec: MetricSpec, J: JacobiFields, t: float, n_segments: int) -> float:
    s = np.linspace(0.0, J.c, n_segments + 1)
    pts = np.column_stack([t * J.f1(s), t * J.f2(s), s])
    cell = spec.lattice.cell
    if not np.all(cell.contains(pts, tol=-1e-12)):
        raise DomainError("perturbation leaves the cell around the axis")
    return curve_length(pts, spec)


def _lengths(c, t, spec, n_segments):
    if spec is None:
        spec = singular_metric("hexagonal", np.pi / 6)
    if spec.is_flat or not spec.lattice.is_hexagonal:
        raise SpecError("second variation is set up on a hexagonal singular metric")
    if not 0.0 < c < np.pi:
        raise SpecError("c must lie in (0, pi)")
    J = jacobi_fields(c)
    t = 1e-3 * c if t is None else float(t)
    L0 = _perturbed_length(spec, J, 0.0, n_segments)
    Lp = _perturbed_length(spec, J, t, n_segments)
    Lm = _perturbed_length(spec, J, -t, n_segments)
    return L0, Lp, Lm, t


def length_second_derivative(c: float, t: float | None = None, spec: MetricSpec | None = None,
                             n_segments: int = 4000) -> float:
    """Central difference (L(t) + L(-t) - 2 L(0)) / t^2 for the curves
    s -> (t f1(s), t f2(s), s) joining m_t to phi_c(m_t)."""
    L0, Lp, Lm, t = _lengths(c, t, spec, n_segments)
    return (Lp + Lm - 2.0 * L0) / t ** 2


def second_variation_fd(c: float, t: float | None = None, spec: MetricSpec | None = None,
                        n_segments: int = 4000) -> float:
    """L(0) times the central second difference of L; default t = 1e-3 c."""
    L0, Lp, Lm, t = _lengths(c, t, spec, n_segments)
    return L0 * (Lp + Lm - 2.0 * L0) / t ** 2
