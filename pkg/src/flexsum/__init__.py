"""Polyhedral inner and outer approximation of aggregate EV charging
flexibility, with LP containment certificates, disaggregation, and an exact
2D oracle for validation."""

from .containment import (ContainmentCertificate, certificate_violation,
                          check_containment, encode_containment_rows)
from .disaggregation import disaggregate, disaggregation_report, recover_base_point
from .errors import DomainError, FlexsumError, SolverFailure
from .ev_model import (EvParams, Scenario, clock_to_index, limits_from_params,
                       sample_scenario)
from .experiments import (SweepRow, group_disaggregation, heterogeneity_sweep,
                          peak_power_profile, summarize_sweep)
from .inner_approx import (PerSetTransform, TransformResult, solve_decomposed,
                           solve_general_affine, solve_homothet_baseline, solve_inner,
                           solve_structure_preserving)
from .lp_backend import LinearProgram, LpSolution, default_tolerance, solve_lp
from .oracle2d import (exact_sum, minkowski_sum_polygons, polygon_area,
                       vertices_of_hpolygon)
from .outer_approx import (OuterPerSet, OuterResult, dilate_outer, invert_map,
                           outer_contains, solve_outer_lp)
from .polytope import (AHPolytope, BaseSet, BatteryModel, HPolytope,
                       battery_constraint_matrix, battery_rhs, battery_to_hpolytope,
                       build_base_set, build_cumulative_matrix, chebyshev_center,
                       chebyshev_radius, contains_point, log_abs_det,
                       membership_violation, sample_points, support_point,
                       volume_ratio)

__version__ = "0.1.0"
