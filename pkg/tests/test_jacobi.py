import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bieberbach.errors import DomainError, SpecError
from bieberbach.metric import singular_metric
from bieberbach.oracle.jacobi import (ALPHA, boundary_term, boundary_term_closed, index_form,
                                      jacobi_fields, length_second_derivative,
                                      second_variation_fd)

PI = np.pi


@pytest.mark.parametrize("c", [0.2, 1.0, PI / 2, 2.0, 2.5])
def test_boundary_data(c):
    J = jacobi_fields(c)
    assert J.f1(0.0) == pytest.approx(1.0)
    assert J.f2(0.0) == 0.0
    assert J.f1(c) == pytest.approx(np.cos(ALPHA))
    assert J.f2(c) == pytest.approx(np.sin(ALPHA))


@pytest.mark.parametrize("c", [0.3, 1.2, 2.0])
def test_jacobi_equation_residual(c):
    J = jacobi_fields(c)
    s = np.linspace(0, c, 201)
    h = 1e-4
    for f in J:
        second = (f(s + h) - 2 * f(s) + f(s - h)) / h ** 2
        assert np.max(np.abs(second + f(s))) < 1e-6
    # exact derivatives
    assert np.allclose(J.df1(s), (J.f1(s + 1e-7) - J.f1(s - 1e-7)) / 2e-7, atol=1e-7)


def test_coefficient_vanishes_at_two_pi_over_three():
    J = jacobi_fields(2 * PI / 3)
    s = np.linspace(0, 2, 9)
    assert np.allclose(J.f1(s), np.cos(s), atol=1e-15)


@pytest.mark.parametrize("c", [0.0, PI, -1.0, 4.0])
def test_singular_c(c):
    with pytest.raises(SpecError):
        jacobi_fields(c)


def test_index_form_values():
    assert index_form(2 * PI / 3) == 0.0
    assert index_form(PI / 2) == pytest.approx(0.5, abs=1e-15)
    assert index_form(0.1) > 0
    c = np.linspace(0.01, 2 * PI / 3 - 0.01, 100)
    assert np.all(index_form(c) > 0)
    assert index_form(2.3) < 0


def test_index_form_factorization():
    c = np.linspace(0.05, 3.0, 50)
    assert np.allclose(index_form(c), (np.cos(c) + 0.5) * (1 - np.cos(c) / 2))


@settings(max_examples=50, deadline=None)
@given(c=st.floats(0.01, 3.1))
def test_boundary_term_closed_form(c):
    assert boundary_term(c) == pytest.approx(boundary_term_closed(c), rel=1e-9, abs=1e-12)


def test_displayed_expression_differs_from_boundary_term():
    # same sign on (0, pi), same zero at 2pi/3, different magnitude
    assert boundary_term(PI / 2) == pytest.approx(1.0)
    assert index_form(PI / 2) == pytest.approx(0.5)
    c = np.linspace(0.05, 3.0, 40)
    assert np.all(np.sign(index_form(c)) == np.sign(boundary_term_closed(c)))


@pytest.mark.parametrize("c", [0.3, 0.9, PI / 2, 1.9])
def test_second_derivative_of_length_is_boundary_term(c):
    assert length_second_derivative(c) == pytest.approx(boundary_term(c), rel=2e-4)


def test_second_variation_fd_normalization():
    fd = second_variation_fd(PI / 2)
    assert fd > 0
    assert fd == pytest.approx(PI / 2 * boundary_term(PI / 2), rel=2e-4)


def test_second_variation_vanishes_at_two_pi_over_three():
    c = 2 * PI / 3
    t = 1e-3 * c
    assert abs(second_variation_fd(c)) < 10 * t


def test_halving_t_changes_estimate_by_order_t():
    c = 1.1
    d1 = length_second_derivative(c, t=2e-3)
    d2 = length_second_derivative(c, t=1e-3)
    assert abs(d1 - d2) < 2e-3


def test_perturbation_must_stay_in_cell():
    spec = singular_metric("hexagonal", PI / 6)
    with pytest.raises(DomainError):
        second_variation_fd(1.0, t=1.0, spec=spec)
    with pytest.raises(SpecError):
        second_variation_fd(1.0, spec=singular_metric("square", PI / 6))
