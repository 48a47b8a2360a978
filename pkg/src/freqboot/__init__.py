"""Frequency-domain resampling for gridded spatial data.

Periodogram-based spectral mean statistics, spatial block subsampling
variance/bias estimators, the frequency-domain wild bootstrap, its
variance-corrected hybrid, field simulators, and a Monte Carlo
experiment runner.
"""

from .bootstrap import (BootstrapDraws, bootstrap_distribution,
                        draw_exponential_weights, fdwb_statistic,
                        fdwb_variance, hfdb_statistic)
from .density import (SpectralDensityEstimate, default_bandwidth,
                      kernel_density_estimate)
from .errors import ConfigError, FreqbootError, NumericalError
from .infer import (ConfidenceInterval, IsotropyTestResult,
                    confidence_interval, isotropy_test, sample_variogram,
                    subsample_confidence_interval)
from .lattice import (FrequencyGrid, LatticeField, Periodogram,
                      build_frequency_grid, load_field_binary,
                      load_field_csv, periodogram, periodogram_at,
                      save_field_binary, save_field_csv)
from .spectral import (AnalyticLimits, PsiFunction, SpectralMeanValue,
                       analytic_limits, analytic_sigma1_sq,
                       centered_statistic, psi_cos_lag, psi_from_name,
                       psi_isotropy_contrast, psi_spectral_cdf,
                       spectral_mean)
from .subsample import (BlockSpec, SubsampleEnsemble, VarianceEstimates,
                        bias_estimate, block_variogram,
                        block_variogram_contrast, default_block_candidates,
                        enumerate_blocks, select_block_size_min_volatility,
                        subsample_edf, subsample_ensemble,
                        variance_estimates)
from .simulate import (MaternSpectral, SeparableARMA, SphericalAniso,
                       TransformedGaussian, WhiteNoise, anisotropy_matrix,
                       matern_model, matern_spectral_density,
                       model_autocovariance, model_spectral_density,
                       simulate_exp_cholesky, simulate_gaussian,
                       simulate_process, simulate_separable,
                       simulate_transformed, spherical_covariance)

__version__ = "0.1.0"
