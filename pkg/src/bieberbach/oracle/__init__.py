"""Discrete cross-checks: grid-graph distances, Jacobi fields, surface checks."""
from .checks import (BavardCheck, CosetCheck, bavard_area, bavard_check, coset_displacement,
                     densify, minimal_projection)
from .graph import (GeodesicGraph, SystoleEstimate, anisotropy, build_graph,
                    equivariant_distance, richardson_check, stencil, systole_estimate)
from .jacobi import (boundary_term, boundary_term_closed, index_form, jacobi_fields,
                     length_second_derivative, second_variation_fd)
