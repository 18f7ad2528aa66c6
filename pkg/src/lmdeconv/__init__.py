"""Anisotropic functional Fourier deconvolution under long-memory errors.

Hard-thresholded hyperbolic (Meyer x Daubechies) wavelet estimator, exact
long-memory noise generators, and a Monte Carlo harness for checking risk
scalings and convergence-rate exponents.
"""

__version__ = "0.1.0"

from .bench import BesovSpec, ExperimentPlan, RateReport, Regime, empirical_risk, monte_carlo_risk, rate_fit, run_experiment, theoretical_exponent
from .estimator import EstimatorParams, ThresholdCalibration, beta_tilde, calibrate_rho, dft_profiles, estimate, resolution_levels, threshold
from .longmem import EigenCertificate, Generator, NoiseSpec, certify_a1, fgn_autocovariance, sample_noise
from .model import KernelFamily, KernelSpec, ObservationGrid, TestFunction, builtin_test_functions, kernel_fourier, simulate
from .wavelets import CoeffTable, DaubBasisSpec, FreqSupport, MeyerBasisSpec, WaveletIndex, analyze_2d, daubechies_eval, meyer_fourier_coeff, meyer_support, synthesize_2d
