import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bieberbach.errors import DomainError
from bieberbach.groups import make_flat_quotient, make_quotient
from bieberbach.lattice import make_lattice
from bieberbach.volume import (cell_integral, cell_integral_full, cell_integral_with_error,
                               manifold_volume, monte_carlo_volume)

PI = np.pi

# 25-digit Cartesian iterated quadrature (mpmath), independent of the polar formula
FROZEN = [
    ("hexagonal", PI / 4, 1.784502475033831731802272),
    ("hexagonal", PI / 6, 0.8786033357932737523197105),
    ("hexagonal", PI / 12, 0.2329247697680162222533906),
    ("square", PI / 8, 0.5855197632111489354124742),
    ("square", 0.7557810342874255532322562, 1.868713149434774738322559),
    ("square", PI / 4, 1.983858658684692653492243),
]


@pytest.mark.parametrize("kind,a,expected", FROZEN)
def test_cell_integral_frozen(kind, a, expected):
    lat = make_lattice(kind, a)
    assert cell_integral(lat) == pytest.approx(expected, rel=1e-13)
    assert cell_integral_full(lat) == pytest.approx(expected, rel=1e-12)


def test_error_estimate_is_small():
    val, err = cell_integral_with_error(make_lattice("hexagonal", PI / 4))
    assert err < 1e-12 * val


@pytest.mark.parametrize("kind", ["square", "hexagonal"])
def test_small_cell_limit(kind):
    lat = make_lattice(kind, 1e-3)
    assert cell_integral(lat) / lat.cell.area == pytest.approx(1.0, abs=1e-6)


def test_domain_error():
    lat = make_lattice("hexagonal", 1.5)      # circumradius 1.73 > pi/2
    with pytest.raises(DomainError):
        cell_integral(lat)


@pytest.mark.parametrize("mtype,kind,a,expected", [
    ("C4", "square", PI / 8, 8 * PI / 4 * 0.5855197632111489354124742),
    ("C2", "hexagonal", PI / 4, 8 * PI / 2 * 1.784502475033831731802272),
    ("C6", "hexagonal", PI / 12, 8 * PI / 6 * 0.2329247697680162222533906),
    ("C3", "hexagonal", PI / 6, 8 * PI / 3 * 0.8786033357932737523197105),
])
def test_manifold_volume(mtype, kind, a, expected):
    v = manifold_volume(make_quotient(mtype, kind, a))
    assert v.value == pytest.approx(expected, rel=1e-13)
    assert 0 < v.estimated_error < 1e-11


def test_named_values():
    assert manifold_volume(make_quotient("C4", "square", PI / 8)).value == pytest.approx(3.6789, abs=1e-4)
    assert manifold_volume(make_quotient("C2", "hexagonal", PI / 4)).value == pytest.approx(22.4247, abs=1e-4)


def test_flat_volumes():
    assert manifold_volume(make_flat_quotient("C1", np.eye(3))).value == pytest.approx(1.0)
    assert manifold_volume(make_flat_quotient("C22", np.diag([1, 2, 3.0]))).value == pytest.approx(1.5)


def test_monte_carlo_agrees():
    spec = make_quotient("C2", "hexagonal", PI / 4)
    mc, se = monte_carlo_volume(spec, n_samples=1_000_000, seed=1)
    assert abs(mc - manifold_volume(spec).value) < 5 * se


@settings(max_examples=20, deadline=None)
@given(a=st.floats(0.01, 1.3), kind=st.sampled_from(["square", "hexagonal"]))
def test_symmetric_and_full_integrals_agree(a, kind):
    lat = make_lattice(kind, a if kind == "hexagonal" else a * 0.85)
    assert cell_integral(lat) == pytest.approx(cell_integral_full(lat), rel=1e-11)
    assert 0 < cell_integral(lat) < lat.cell.area
