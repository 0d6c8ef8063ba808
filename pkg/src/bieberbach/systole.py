"""Closed-form systoles, deck displacement bounds and systolic ratios."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.optimize import brentq

from .errors import SpecError
from .groups import ORDERS, QuotientSpec, make_flat_quotient, make_quotient
from .metric import MetricSpec
from .volume import manifold_volume

PI = np.pi
TWO_OVER_SQRT3 = 2.0 / np.sqrt(3.0)

# (type, lattice kind) -> parameter a of the reference singular constructions.
# For C3 the reference systole 2pi/3 ignores the vertex axes (status "corrected").
THEOREM_PARAMETERS = {
    ("C2", "hexagonal"): PI / 4,
    ("C4", "square"): PI / 8,
    ("C6", "hexagonal"): PI / 12,
    ("C3", "hexagonal"): PI / 6,
}

_TIE_ORDER = ("deck_bound", "vertical_cosine", "horizontal_4a")


@dataclass(frozen=True)
class SystoleReport:
    manifold_type: str
    systole: float
    binding_constraint: str
    volume: float
    volume_error: float
    ratio: float
    ratio_error: float
    flat_supremum: float
    status: str
    parameters: dict = field(default_factory=dict)
    ties: tuple = ()

    @property
    def exceeds_flat(self) -> bool:
        return self.ratio - self.ratio_error > self.flat_supremum


def _metric(spec) -> MetricSpec:
    return spec.metric if isinstance(spec, QuotientSpec) else spec


def _torus_terms(spec) -> dict:
    m = _metric(spec)
    if m.is_flat:
        raise SpecError("closed-form torus systole needs a singular metric")
    lat = m.lattice
    return {"horizontal_4a": 4.0 * lat.a,
            "vertical_cosine": m.vertical_period * np.cos(lat.circumradius)}


def torus_systole(spec) -> float:
    """min(4a, V cos R) with R the cell circumradius (a*sqrt2 or 2a/sqrt3)."""
    return min(_torus_terms(spec).values())


def torus_crossover(kind: str, vertical_period: float = 2 * PI) -> float:
    """Scale a at which 4a = V cos(R(a)), i.e. where the binding term switches."""
    rfac = np.sqrt(2.0) if kind == "square" else 2.0 / np.sqrt(3.0)
    f = lambda a: 4.0 * a - vertical_period * np.cos(rfac * a)
    return brentq(f, 1e-9, (PI / 2) / rfac - 1e-12, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def deck_distance_bound(spec: QuotientSpec, k: int) -> float:
    """Lower bound for d(m, g^k m) over the torus, g the deck generator.

    Powers are reduced to the representative with the smaller vertical shift
    (g^k and g^(k-n) differ by a torus translation).
    """
    if spec.is_flat or spec.manifold_type in ("C1", "C22"):
        raise SpecError(f"no deck bound for {spec.manifold_type} with this metric")
    n = spec.order
    j = k % n
    if j == 0:
        raise SpecError("k must not be a multiple of the order")
    j = min(j, n - j)
    V = spec.metric.vertical_period
    half_turn = min(V / 2.0, PI)   # antipodal points on the spherical slices
    mtype = spec.manifold_type
    if 2 * j == n:
        return half_turn
    if mtype == "C4":
        return half_turn / 2.0
    if mtype == "C6":
        if j == 1:
            return half_turn / 3.0
        return (j * V / n) * np.cos(spec.metric.lattice.circumradius)
    if mtype == "C3":
        # 3-fold axes also pass through Voronoi vertices, where cos r = cos R:
        # every path gains |dz| >= V/3 at speed >= cos R, and the vertical
        # segment on a vertex axis attains it
        return (V / 3.0) * np.cos(spec.metric.lattice.circumradius)
    raise SpecError(f"unsupported pair ({mtype}, {k})")


def _shortest_vector(gram: np.ndarray) -> float:
    """Length of the shortest nonzero lattice vector, exact enumeration."""
    lam = float(np.min(np.diag(gram)))
    ginv = np.linalg.inv(gram)
    bounds = [int(np.floor(np.sqrt(lam * ginv[i, i]) + 1e-9)) for i in range(len(gram))]
    best = lam
    for c in product(*(range(-b, b + 1) for b in bounds)):
        v = np.array(c, dtype=float)
        if not v.any():
            continue
        best = min(best, float(v @ gram @ v))
    return np.sqrt(best)


def flat_systole(spec: QuotientSpec) -> tuple[float, str]:
    B = spec.metric.flat_basis
    mtype = spec.manifold_type
    if mtype == "C1":
        return _shortest_vector(B @ B.T), "flat_lattice"
    if mtype == "C22":
        return float(np.min(np.linalg.norm(B, axis=1))) / 2.0, "deck_bound"
    pitch = float(np.linalg.norm(B[2])) / spec.order
    s = _shortest_vector(B[:2, :2] @ B[:2, :2].T)
    return (pitch, "deck_bound") if pitch <= s else (s, "flat_lattice")


def _flat_basis_from(manifold_type: str, params) -> np.ndarray:
    p = np.asarray(params, dtype=float)
    if p.shape == (3, 3):
        return p
    if p.shape != (3,):
        raise SpecError("flat parameters are a 3x3 basis or three norms")
    n1, n2, n3 = p
    # norms alone: hexagonal horizontal lattice for C2/C3/C6, rectangular otherwise
    angle = {"C3": 2 * PI / 3, "C6": PI / 3, "C2": PI / 3}.get(manifold_type, PI / 2)
    return np.array([[n1, 0.0, 0.0],
                     [n2 * np.cos(angle), n2 * np.sin(angle), 0.0],
                     [0.0, 0.0, n3]])


def flat_ratio(manifold_type: str, params) -> float:
    """sys^3 / vol for a flat metric; params is a basis or the norms |a1|,|a2|,|a3|."""
    spec = make_flat_quotient(manifold_type, _flat_basis_from(manifold_type, params))
    sys, _ = flat_systole(spec)
    return sys ** 3 / manifold_volume(spec).value


def flat_supremum(manifold_type: str) -> float:
    """Best systolic ratio among flat metrics of the given type."""
    if manifold_type not in ORDERS:
        raise SpecError(f"unknown manifold type {manifold_type!r}")
    return {"C1": np.sqrt(2.0), "C4": 1.0, "C22": 0.5}.get(manifold_type, TWO_OVER_SQRT3)


def gc_equation(a):
    return 2.0 * a - PI * np.cos(a * np.sqrt(2.0))


def solve_gc_parameter() -> float:
    """Root of 2a - pi cos(a sqrt2) on [0.5, 0.9]."""
    lo, hi = 0.5, 0.9
    # strictly increasing on the bracket: derivative 2 + pi sqrt2 sin(a sqrt2) > 0
    if not (gc_equation(lo) < 0 < gc_equation(hi)):
        raise ArithmeticError("bracket does not change sign")
    return brentq(gc_equation, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)


def _status(spec: QuotientSpec) -> str:
    if spec.is_flat:
        return "flat"
    m = spec.metric
    key = (spec.manifold_type, m.lattice.kind)
    if abs(m.vertical_period - 2 * PI) < 1e-12:
        if key in THEOREM_PARAMETERS and abs(m.lattice.a - THEOREM_PARAMETERS[key]) < 1e-9:
            return "corrected" if key == ("C3", "hexagonal") else "theorem"
        if key == ("C2", "square") and abs(m.lattice.a - solve_gc_parameter()) < 1e-9:
            return "proposition"
    return "lower-bound heuristic"


def quotient_systole(spec: QuotientSpec) -> SystoleReport:
    """Systole as the minimum of the torus systole and the proved deck bounds."""
    if spec.is_flat:
        sys, binding = flat_systole(spec)
        terms = {binding: sys}
    else:
        terms = _torus_terms(spec)
        if spec.order > 1:
            terms["deck_bound"] = min(deck_distance_bound(spec, k) for k in range(1, spec.order))
        sys = min(terms.values())
    ties = tuple(name for name in _TIE_ORDER + ("flat_lattice",)
                 if name in terms and terms[name] - sys <= 1e-12 * max(sys, 1.0))
    vol = manifold_volume(spec)
    ratio = sys ** 3 / vol.value
    params = {"vertical_period": spec.metric.vertical_period}
    if not spec.is_flat:
        params.update(lattice=spec.metric.lattice.kind, a=spec.metric.lattice.a)
    else:
        params["basis"] = spec.metric.flat_basis.tolist()
    return SystoleReport(
        manifold_type=spec.manifold_type,
        systole=float(sys),
        binding_constraint=ties[0],
        volume=vol.value,
        volume_error=vol.estimated_error,
        ratio=float(ratio),
        ratio_error=float(ratio * vol.estimated_error / vol.value),
        flat_supremum=flat_supremum(spec.manifold_type),
        status=_status(spec),
        parameters=params,
        ties=ties,
    )


def systolic_ratio(spec: QuotientSpec) -> SystoleReport:
    return quotient_systole(spec)


def theorem_spec(manifold_type: str) -> QuotientSpec:
    """The reference singular configuration for a manifold type."""
    for (mtype, kind), a in THEOREM_PARAMETERS.items():
        if mtype == manifold_type:
            return make_quotient(mtype, kind, a)
    raise SpecError(f"no singular construction for {manifold_type}")


def gc_spec() -> QuotientSpec:
    return make_quotient("C2", "square", solve_gc_parameter())
