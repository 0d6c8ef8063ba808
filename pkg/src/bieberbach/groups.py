"""Bieberbach group generators, affine isometry algebra and deck transformations.

Linear parts are kept symbolic: ``(-I)^mirror * Rz(turns*pi/6) * Fx^flip`` with
``Fx`` the half-turn about the x-axis.  This group contains every rotation
about the vertical axis used by the orientable types, the half-turns of
C2,2 and the vertical mirror planes of the square and hexagonal lattices.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import SpecError
from .metric import MetricSpec, curve_length, flat_metric, singular_metric, TWO_PI

ORDERS = {"C1": 1, "C2": 2, "C3": 3, "C4": 4, "C6": 6, "C22": 4}
MANIFOLD_TYPES = tuple(ORDERS)

_S3 = np.sqrt(3.0) / 2.0
_COS = np.array([1.0, _S3, 0.5, 0.0, -0.5, -_S3, -1.0, -_S3, -0.5, 0.0, 0.5, _S3])
_SIN = np.roll(_COS, 3)
_FX = np.diag([1.0, -1.0, -1.0])


def _rz(turns: int) -> np.ndarray:
    k = turns % 12
    c, s = _COS[k], _SIN[k]
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class Isometry3:
    turns: int = 0
    flip: bool = False
    mirror: bool = False
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "turns", int(self.turns) % 12)
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))

    @property
    def linear(self) -> np.ndarray:
        L = _rz(self.turns)
        if self.flip:
            L = L @ _FX
        return -L if self.mirror else L

    @property
    def is_translation(self) -> bool:
        return self.turns == 0 and not self.flip and not self.mirror

    def __call__(self, p):
        return apply(self, p)

    def __matmul__(self, other: "Isometry3") -> "Isometry3":
        return compose(self, other)

    def key(self, scale: float = 1.0, digits: int = 9):
        t = np.round(self.translation / scale, digits) + 0.0
        return (self.turns, self.flip, self.mirror, tuple(t))

    def __repr__(self):
        t = ", ".join(f"{v:.6g}" for v in self.translation)
        return f"Isometry3(turns={self.turns}, flip={self.flip}, mirror={self.mirror}, t=({t}))"


IDENTITY = Isometry3()


def translation(v) -> Isometry3:
    return Isometry3(translation=v)


def screw(turns: int, shift: float) -> Isometry3:
    """Rotation by turns*pi/6 about the z-axis followed by a vertical shift."""
    return Isometry3(turns=turns, translation=(0.0, 0.0, shift))


def vertical_reflection(normal_turns: int, offset: float) -> Isometry3:
    """Reflection in the vertical plane n.x = offset, n at angle normal_turns*pi/6."""
    ang = normal_turns * np.pi / 6
    n = np.array([np.cos(ang), np.sin(ang), 0.0])
    return Isometry3(turns=2 * normal_turns, flip=True, mirror=True, translation=2.0 * offset * n)


def compose(g: Isometry3, h: Isometry3) -> Isometry3:
    """g o h."""
    turns = g.turns - h.turns if g.flip else g.turns + h.turns
    return Isometry3(turns, g.flip != h.flip, g.mirror != h.mirror,
                     g.linear @ h.translation + g.translation)


def inverse(g: Isometry3) -> Isometry3:
    turns = g.turns if g.flip else -g.turns
    inv = Isometry3(turns, g.flip, g.mirror)
    return Isometry3(inv.turns, g.flip, g.mirror, -(inv.linear @ g.translation))


def apply(g: Isometry3, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p @ g.linear.T + g.translation


def power(g: Isometry3, k: int) -> Isometry3:
    base = g if k >= 0 else inverse(g)
    out = IDENTITY
    for _ in range(abs(k)):
        out = compose(out, base)
    return out


# --------------------------------------------------------------------------
# quotient specifications

@dataclass(frozen=True, eq=False)
class QuotientSpec:
    """A torus R^3 / Lambda together with the deck group it is divided by.

    Singular metrics use Lambda = 2*Delta x (vertical_period)Z.  Flat metrics
    use the lattice spanned by the rows of ``metric.flat_basis``.
    """

    manifold_type: str
    metric: MetricSpec

    def __post_init__(self):
        if self.manifold_type not in ORDERS:
            raise SpecError(f"unknown manifold type {self.manifold_type!r}")
        _check_compatible(self.manifold_type, self.metric)

    @property
    def order(self) -> int:
        return ORDERS[self.manifold_type]

    @property
    def is_flat(self) -> bool:
        return self.metric.is_flat

    @property
    def lattice_translations(self) -> list[Isometry3]:
        m = self.metric
        if m.is_flat:
            return [translation(v) for v in m.flat_basis]
        b = m.lattice.basis
        return [translation((2 * b[0, 0], 2 * b[0, 1], 0.0)),
                translation((2 * b[1, 0], 2 * b[1, 1], 0.0)),
                translation((0.0, 0.0, m.vertical_period))]

    @property
    def lattice_matrix(self) -> np.ndarray:
        """Rows are the three generators of the torus lattice."""
        return np.array([t.translation for t in self.lattice_translations])

    @property
    def deck_generator(self) -> Isometry3:
        return generators(self)[0]

    @property
    def length_scale(self) -> float:
        return float(np.min(np.linalg.norm(self.lattice_matrix, axis=1)))

    def to_metric_coords(self, p):
        """Cartesian points -> coordinates used by the metric module."""
        if self.is_flat:
            return np.asarray(p, dtype=float) @ np.linalg.inv(self.metric.flat_basis)
        return np.asarray(p, dtype=float)

    def from_metric_coords(self, q):
        if self.is_flat:
            return np.asarray(q, dtype=float) @ self.metric.flat_basis
        return np.asarray(q, dtype=float)


def _check_compatible(mtype: str, metric: MetricSpec):
    if not metric.is_flat:
        kind = metric.lattice.kind
        if mtype == "C22":
            raise SpecError("C22 is only supported with a flat metric")
        if mtype == "C4" and kind != "square":
            raise SpecError("C4 needs a square lattice")
        if mtype in ("C3", "C6") and kind != "hexagonal":
            raise SpecError(f"{mtype} needs a hexagonal lattice")
        return
    a1, a2, a3 = metric.flat_basis
    tol = 1e-9 * max(np.linalg.norm(metric.flat_basis, axis=1))
    if mtype == "C1":
        return
    if mtype == "C22":
        if np.abs(metric.flat_basis - np.diag(np.diag(metric.flat_basis))).max() > tol:
            raise SpecError("C22 needs a basis along the coordinate axes")
        return
    if abs(a1[2]) > tol or abs(a2[2]) > tol or np.hypot(a3[0], a3[1]) > tol:
        raise SpecError(f"{mtype} needs a1, a2 horizontal and a3 vertical")
    n1, n2 = np.linalg.norm(a1), np.linalg.norm(a2)
    cos12 = float(a1 @ a2) / (n1 * n2)
    want = {"C4": 0.0, "C6": 0.5, "C3": -0.5}.get(mtype)
    if want is not None and (abs(n1 - n2) > tol or abs(cos12 - want) > 1e-9):
        raise SpecError(f"basis violates the {mtype} constraints (|a1|=|a2|, fixed angle)")


def make_quotient(manifold_type: str, lattice_kind: str, a: float,
                  vertical_period: float = TWO_PI) -> QuotientSpec:
    return QuotientSpec(manifold_type, singular_metric(lattice_kind, a, vertical_period))


def make_flat_quotient(manifold_type: str, basis) -> QuotientSpec:
    return QuotientSpec(manifold_type, flat_metric(basis))


def generators(spec: QuotientSpec | str, metric: MetricSpec | None = None) -> list[Isometry3]:
    """Generators of the Bieberbach group.

    Cyclic types: the screw motion first, then the three lattice translations.
    C22: the three half-turn screws, each shifted by half its own axis and
    half the next one, so that no element fixes a point.  C1: the lattice
    translations.
    """
    if isinstance(spec, str):
        spec = QuotientSpec(spec, metric)
    mtype, n = spec.manifold_type, spec.order
    lat = spec.lattice_translations
    if mtype == "C1":
        return lat
    if mtype == "C22":
        a1, a2, a3 = (t.translation for t in lat)
        return [Isometry3(0, True, False, (a1 + a2) / 2),
                Isometry3(6, True, False, (a2 + a3) / 2),
                Isometry3(6, False, False, (a3 + a1) / 2)]
    v3 = lat[2].translation
    return [Isometry3(12 // n, translation=v3 / n)] + lat


def _coset_reps(spec: QuotientSpec) -> dict:
    """Map symbolic linear part -> a group element with that linear part."""
    gens = generators(spec)
    reps = {(0, False, False): IDENTITY}
    queue = deque([IDENTITY])
    while queue:
        g = queue.popleft()
        for s in gens:
            h = compose(g, s)
            k = h.key()[:3]
            if k not in reps:
                reps[k] = h
                queue.append(h)
    return reps


def lattice_coordinates(spec: QuotientSpec, v) -> np.ndarray:
    return np.asarray(v, dtype=float) @ np.linalg.inv(spec.lattice_matrix)


def contains(spec: QuotientSpec, g: Isometry3, tol: float = 1e-9) -> bool:
    """Is g an element of the Bieberbach group?"""
    rep = _coset_reps(spec).get(g.key()[:3])
    if rep is None:
        return False
    rest = compose(g, inverse(rep))
    c = lattice_coordinates(spec, rest.translation)
    return bool(np.all(np.abs(c - np.round(c)) < tol))


def deck_words(spec: QuotientSpec, max_word_length: int) -> list[Isometry3]:
    """Distinct non-identity elements that are words of length <= max_word_length
    in the generators, the lattice translations and their inverses."""
    if max_word_length < 1:
        raise SpecError("max_word_length must be >= 1")
    letters = []
    seen_letters = set()
    for g in generators(spec) + spec.lattice_translations:
        for h in (g, inverse(g)):
            k = h.key(spec.length_scale)
            if k not in seen_letters:
                seen_letters.add(k)
                letters.append(h)
    scale = spec.length_scale
    seen = {IDENTITY.key(scale)}
    out = []
    frontier = [IDENTITY]
    for _ in range(max_word_length):
        nxt = []
        for w in frontier:
            for s in letters:
                h = compose(w, s)
                k = h.key(scale)
                if k not in seen:
                    seen.add(k)
                    out.append(h)
                    nxt.append(h)
        frontier = nxt
    return out


def is_metric_isometry(g: Isometry3, spec: QuotientSpec | MetricSpec, n_samples: int = 200,
                       seed: int = 0, tol: float = 1e-9):
    """Compare lengths of random short segments and their images under g.

    Returns (ok, max_deviation).
    """
    if n_samples < 1:
        raise SpecError("n_samples must be >= 1")
    metric = spec.metric if isinstance(spec, QuotientSpec) else spec
    rng = np.random.default_rng(seed)
    if metric.is_flat:
        B = metric.flat_basis
        q0 = rng.uniform(-1.0, 2.0, size=(n_samples, 3))
        q1 = q0 + rng.normal(scale=0.2, size=(n_samples, 3))
        to_q = np.linalg.inv(B)
        img0 = apply(g, q0 @ B) @ to_q
        img1 = apply(g, q1 @ B) @ to_q
    else:
        a, V = metric.lattice.a, metric.vertical_period
        q0 = np.column_stack([rng.uniform(-6 * a, 6 * a, (n_samples, 2)),
                              rng.uniform(0.0, V, n_samples)])
        q1 = q0 + rng.normal(scale=0.7 * a, size=(n_samples, 3))
        img0, img1 = apply(g, q0), apply(g, q1)
    dev = 0.0
    for i in range(n_samples):
        l0 = curve_length([q0[i], q1[i]], metric)
        l1 = curve_length([img0[i], img1[i]], metric)
        dev = max(dev, abs(l0 - l1))
    return dev < tol, dev


@dataclass(frozen=True)
class VerticalAxis:
    x: float
    y: float


def invariant_axes(spec: QuotientSpec, k: int) -> list[VerticalAxis]:
    """Vertical lines of the torus mapped onto themselves by deck_generator^k."""
    if not 1 <= k < spec.order or spec.manifold_type == "C22":
        raise SpecError("need a cyclic type and 1 <= k < order")
    g = power(spec.deck_generator, k)
    R = g.linear[:2, :2]
    w = g.translation[:2]
    T = spec.lattice_matrix[:2, :2]
    A = np.eye(2) - R
    found = {}
    for i, j in product(range(4), repeat=2):
        p = np.linalg.solve(A, w + i * T[0] + j * T[1])
        c = p @ np.linalg.inv(T)
        c = np.round(c - np.floor(c + 1e-9), 9) % 1.0
        key = tuple(np.round(c, 7))
        if key not in found:
            found[key] = c @ T
    return [VerticalAxis(float(p[0]), float(p[1])) for _, p in sorted(found.items())]
