"""Two-dimensional Finsler toolkit: sprays, compatibility residuals, fiber
classification, and wind navigation."""

from .connections import (Connection, ContractedDifference, DifferenceData,
                          TorsionNormalization, normalize_torsion)
from .classify import (ClassificationResult, CubicAnalysis, IntegralCondition,
                       NormalFormCheck, VERDICT_BERWALD, VERDICT_NO_SOLUTION,
                       VERDICT_NORMAL_FORM, classify_difference, classify_k,
                       classify_pair, cubic_analysis, integral_condition,
                       k_from_factorization, k_from_riemannian,
                       normal_form_check, normal_form_k,
                       numeric_principal_value, riemannian_witness,
                       solution_metric, solution_residual)
from .errors import (DomainError, FinslerError, InvalidMetricError,
                     NonConvexError, SingularIntegrandError, TorsionError)
from .fiber import (FourierProfile, KCoefficients, PeriodicityReport,
                    ProfileSum, RiemannianNormProfile, cubic_poly,
                    cubic_poly_prime, difference_from_k,
                    fiber_equation_residual, hess_factor_quadrature,
                    k_from_difference, log_hess_derivative, periodic_basis,
                    periodicity_defect, pde_residual_profile, polar_hessian,
                    poles_in_range, profile_from_hess_factor, profile_table,
                    sin_profile, theta_grid, trig_poly, write_profile_csv)
from .kernels import BACKEND, warm_up
from .metrics import (BlackBoxMetric, ConvexityReport, FiberProfileMetric,
                      FundamentalTensor, LinearPullbackMetric, Metric,
                      RandersMetric, RiemannianMetric, SymmetrizedMetric,
                      is_spd, metric_from_json, metric_to_json, pullback,
                      spd_sqrt, symmetrize)
from .navigation import (EllipsoidEquivalence, MonochromaticityReport,
                         NavigationData, ShiftedEllipsoid,
                         ellipsoid_equivalence, metric_from_navigation,
                         monochromatic_check_randers,
                         navigation_from_indicatrix, randers_closed_check,
                         randers_gb_check, randers_invariant,
                         randers_to_navigation)
from .spray import (Circle, GeodesicResult, Polyline, Segment,
                    TransportResult, curve_from_json, douglas_residual,
                    gb_residual, integrate_geodesic, parallel_transport,
                    path_hausdorff, pde_residual, pde_system_residual,
                    spray_coefficients, spray_from_connection)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
