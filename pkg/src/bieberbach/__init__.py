"""Systolic ratios of singular metrics on orientable Bieberbach 3-manifolds."""
from .errors import DomainError, ResourceError, SpecError
from .groups import (Isometry3, QuotientSpec, compose, deck_words, generators, invariant_axes,
                     inverse, make_flat_quotient, make_quotient, power)
from .lattice import Lattice2D, dist_to_lattice, make_lattice
from .metric import MetricSpec, Polyline3, curve_length, flat_metric, singular_metric
from .systole import (flat_ratio, flat_supremum, gc_spec, quotient_systole, solve_gc_parameter,
                      systolic_ratio, theorem_spec, torus_systole)
from .volume import cell_integral, manifold_volume, monte_carlo_volume

__version__ = "0.1.0"
