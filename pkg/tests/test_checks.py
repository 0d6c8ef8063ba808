import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bieberbach.groups import make_quotient
from bieberbach.metric import curve_length, singular_metric
from bieberbach.oracle.checks import (bavard_area, bavard_check, coset_displacement, densify,
                                      minimal_projection)

PI = np.pi


def test_sigma_coset_on_axis():
    spec = make_quotient("C2", "hexagonal", PI / 4)
    chk = coset_displacement(spec, 1, PI / 16, PI)
    assert chk.passed
    assert chk.estimate.value == pytest.approx(PI, rel=1e-12)
    assert chk.axis_distance == pytest.approx(0.0, abs=1e-12)


def test_tau_coset_on_axis():
    spec = make_quotient("C4", "square", PI / 8)
    chk = coset_displacement(spec, 1, PI / 32, PI / 2)
    assert chk.passed
    assert chk.estimate.value == pytest.approx(PI / 2, rel=1e-12)


def test_phi_coset_c3_minimizer_on_vertex_axis():
    spec = make_quotient("C3", "hexagonal", PI / 6)
    chk = coset_displacement(spec, 1, PI / 18, 2 * PI / 3)
    # the 3-fold vertex axes belong to the coset and undercut 2pi/3
    assert chk.axis_distance == pytest.approx(0.0, abs=1e-8)
    # exact node-to-node images: the estimate is the length of an actual path
    assert chk.estimate.snap_error < 1e-12
    assert chk.estimate.value < 2 * PI / 3 - 0.3


def test_bavard_area_and_ratio():
    assert bavard_area() == pytest.approx(2 * np.sqrt(2) * PI)
    b = bavard_check(PI / 16)
    assert b.systole == pytest.approx(PI, rel=1e-12)
    assert b.ratio == pytest.approx(PI / (2 * np.sqrt(2)), rel=1e-12)


def test_densify():
    p = np.array([[0, 0, 0], [1, 0, 0], [1, 2, 0]], dtype=float)
    d = densify(p, 4)
    assert len(d) == 9
    assert np.allclose(d[[0, 4, 8]], p)


segment = st.tuples(*[st.floats(-2.0, 2.0, allow_nan=False)] * 3)


@settings(max_examples=40, deadline=None)
@given(pts=st.lists(segment, min_size=2, max_size=5), shrink=st.sampled_from([1.0, 0.8, 0.5]),
       kind=st.sampled_from(["square", "hexagonal"]))
def test_projection_never_increases_length(pts, shrink, kind):
    spec = singular_metric(kind, PI / 4 if kind == "hexagonal" else PI / 5)
    p = densify(np.asarray(pts), 64)
    steps = np.linalg.norm(np.diff(p, axis=0), axis=1)
    p = p[np.concatenate([[True], steps > 1e-9])]
    if len(p) < 2:
        return
    q = minimal_projection(p, spec.lattice, shrink=shrink)
    keep = np.concatenate([[True], np.linalg.norm(np.diff(q, axis=0), axis=1) > 0])
    L0 = curve_length(p, spec)
    L1 = curve_length(q[keep], spec) if keep.sum() > 1 else 0.0
    assert L1 <= L0 * (1 + 1e-9) + 1e-12


def test_horizontal_distance_dominates():
    # a curve is never shorter than its horizontal shadow or its vertical
    # extent at the smallest speed cos R
    spec = singular_metric("hexagonal", PI / 6)
    rng = np.random.default_rng(5)
    cosR = np.cos(spec.lattice.circumradius)
    for _ in range(50):
        p = densify(rng.uniform(-2, 2, (4, 3)), 32)
        L = curve_length(p, spec)
        flat = np.sum(np.linalg.norm(np.diff(p[:, :2], axis=0), axis=1))
        assert L >= flat - 1e-12
        assert L >= cosR * abs(p[-1, 2] - p[0, 2]) - 1e-12
