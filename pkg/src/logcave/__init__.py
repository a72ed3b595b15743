"""Log-concave approximations of distributions on the line and regression
with log-concave errors."""

from importlib import resources

from .density import LogConcaveDensity, affine_transform, l1_distance, normalize
from .distances import (DistanceReport, bounded_lipschitz_lower, bounded_lipschitz_upper,
                        distance_report, kolmogorov_smirnov, mallows_d1)
from .empirical import EmpiricalDistribution, convolve, from_samples, mixture
from .errors import (DegenerateSupport, DomainError, LogcaveError, NoConvergence,
                     PerfectFit)
from .project import (Certificate, FitOptions, FitTrace, certify, convex_order_check, fit,
                      loglik, loglik_upper_bound, prefix_integral, profile_loglik)
from .regress import (DEOptions, RegressionFit, fit_alternating, fit_isotonic, fit_linear,
                      isotonic_quantile_baseline, quantile_curve)

__version__ = "0.1.0"


def data_path(name: str):
    """Path of a bundled data file, e.g. ``data_path("t2_grid.csv")``."""
    return resources.files(__name__).joinpath("data", name)
