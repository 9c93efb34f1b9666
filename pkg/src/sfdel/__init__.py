"""Frequency-domain empirical likelihood for irregularly spaced spatial data."""
from .el import ELSolution, Status, solve_el
from .estimating import (Autocorrelation, ExponentialVariogram, GaussianVariogram, SpectralCDF,
                         VariogramLS, g_eval, spectral_moment_residual, variogram_gradient)
from .fields import (ChiSqShifted, ExponentialSeparable, FieldSpec, GaussianIdentity,
                     GaussianIsotropic, covariance_matrix, simulate_field, spectral_density)
from .inference import (Interval, GridMask, confidence_region, point_estimate, scaled_statistic,
                        scaling_factor, test)
from .sampling import (PrototypeRegion, Seed, SiteSample, TruncatedGaussianMixture, Uniform,
                       draw_sites, default_mixture)
from .spectral import build_grid, dft, periodogram

__version__ = "0.1.0"
