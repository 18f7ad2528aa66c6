"""Hard-thresholding wavelet estimator for functional Fourier deconvolution."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, IllPosednessError, ShapeError
from .longmem import NoiseSpec, certificate_bounds, certify_a1
from .model import KernelSpec, ObservationGrid, certify_kernel, kernel_fourier, kernel_table
from .wavelets import (
    SCALING, CoeffTable, DaubBasisSpec, MeyerBasisSpec, WaveletIndex, analyze_space,
    analyze_time_spectrum, daubechies_eval, meyer_analysis_matrix, meyer_fourier_coeff,
    meyer_scaling_fourier_coeff, meyer_support, synthesize_2d,
)

DEFAULT_MEYER = MeyerBasisSpec()
DEFAULT_DAUB = DaubBasisSpec()
KERNEL_FLOOR = 1e-300
DEFAULT_CERT_LADDER = (64, 128, 256, 512, 1024)


def resolution_levels(M: int, N: int, nu: float, alpha_star: float,
                      time_coarsest: int = 0, space_coarsest: int = 0):
    """Finest-level bounds ``(J1, J2, capped)``.

    ``2**J1 ~ (M N**alpha_star)**(1/(2 nu + 1))`` and ``2**J2 ~ M N**alpha_star``,
    capped at ``log2(N) - 2`` and ``log2(M)`` so that every retained Meyer
    band stays below Nyquist and every Daubechies level is resolved.
    """
    if M < 8 or N < 8:
        raise DomainError("resolution levels need M, N >= 8")
    log_n = math.log2(M) + alpha_star * math.log2(N)
    J1_raw = math.floor(log_n / (2 * nu + 1) + 1e-9)
    J2_raw = math.floor(log_n + 1e-9)
    cap1, cap2 = int(math.log2(N)) - 2, int(math.log2(M))
    J1 = max(min(J1_raw, cap1), time_coarsest)
    J2 = max(min(J2_raw, cap2), space_coarsest)
    return J1, J2, (J1_raw > cap1 or J2_raw > cap2)


@dataclass(frozen=True)
class EstimatorParams:
    nu: float
    rho: float
    alphas: tuple[float, ...]
    sigma: float
    J1: int
    J2: int
    capped: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.rho < 0:
            raise DomainError("rho must be nonnegative")

    @property
    def alpha_star(self) -> float:
        return max(self.alphas)

    @classmethod
    def build(cls, M: int, N: int, nu: float, alphas, sigma: float, rho: float,
              meyer: MeyerBasisSpec = DEFAULT_MEYER, daub: DaubBasisSpec = DEFAULT_DAUB):
        alphas = tuple(alphas)
        if len(alphas) != M:
            raise ShapeError(f"{len(alphas)} long-memory parameters for {M} profiles")
        J1, J2, capped = resolution_levels(M, N, nu, max(alphas),
                                           meyer.coarsest_level, daub.coarsest_level)
        return cls(nu, rho, alphas, sigma, J1, J2, capped)


def threshold(j1: int, M: int, N: int, params: EstimatorParams) -> float:
    """``rho 2**(nu j1) sqrt(ln(M N**a*) / (M N**a*))``."""
    n_eff = M * N ** params.alpha_star
    if n_eff <= 1:
        raise DomainError(f"M N^alpha* = {n_eff} must exceed 1")
    return params.rho * 2.0 ** (params.nu * j1) * math.sqrt(math.log(n_eff) / n_eff)


def threshold_matrix(shape, M: int, N: int, params: EstimatorParams,
                     time_coarsest: int = 0, space_coarsest: int = 0) -> np.ndarray:
    """Per-coefficient thresholds for a ``(2**J1, 2**J2)`` table.

    Rows carrying the time scaling function use the coarsest-level value;
    the block that is coarse in both variables gets 0.
    """
    rows, cols = shape
    levels = np.array([SCALING if r < 2 ** time_coarsest else r.bit_length() - 1
                       for r in range(rows)])
    levels = np.where(levels == SCALING, time_coarsest, levels)
    lam = np.array([threshold(int(j), M, N, params) for j in levels])
    out = np.repeat(lam[:, None], cols, axis=1)
    out[: 2 ** time_coarsest, : 2 ** space_coarsest] = 0.0
    return out


def hard_threshold(table: CoeffTable, thresholds: np.ndarray) -> CoeffTable:
    """Keep ``|beta| > lambda`` (strict); the doubly-coarse block is always kept."""
    kept = np.abs(table.values) > thresholds
    kept[: 2 ** table.time_coarsest, : 2 ** table.space_coarsest] = True
    return CoeffTable(np.where(kept, table.values, 0.0), table.time_coarsest,
                      table.space_coarsest, thresholds.copy(), kept)


def dft_profiles(Y) -> np.ndarray:
    """Normalized DFT of every profile; rows in FFT order ``m = 0, 1, ..., -1``."""
    data = Y.data if isinstance(Y, ObservationGrid) else np.asarray(Y, dtype=float)
    return np.fft.fft(data, axis=0) / data.shape[0]


def _check_kernel(g: np.ndarray):
    if np.min(np.abs(g)) < KERNEL_FLOOR:
        raise IllPosednessError("kernel Fourier coefficient below 1e-300 inside the band")


def beta_tilde(Yhat: np.ndarray, kernel: KernelSpec, idx: WaveletIndex,
               meyer: MeyerBasisSpec = DEFAULT_MEYER, daub: DaubBasisSpec = DEFAULT_DAUB) -> complex:
    """One coefficient estimate ``sum_m conj(psi_m) mean_l[Y_m(x_l)/g_m(x_l) eta(x_l)]``."""
    N, M = Yhat.shape
    if idx.j1 == SCALING:
        m = np.arange(-(N // 2) + 1, N // 2)
        psi = meyer_scaling_fourier_coeff(meyer, idx.k1, m)
        m, psi = m[psi != 0], psi[psi != 0]
    else:
        m = np.array(meyer_support(meyer, idx.j1).members)
        if m.size and np.abs(m).max() >= N // 2:
            raise DomainError(f"level {idx.j1} reaches Nyquist on an N={N} grid")
        psi = meyer_fourier_coeff(meyer, idx.j1, idx.k1, m)
    x = np.arange(M) / M
    g = kernel_fourier(kernel, m[:, None], x[None, :])
    _check_kernel(g)
    eta = daubechies_eval(daub, idx.j2, idx.k2, M)
    profile_means = np.mean(Yhat[m % N] / g * eta[None, :], axis=1)
    return complex(np.sum(np.conj(psi) * profile_means))


def estimate_coefficients(Yhat: np.ndarray, kernel: KernelSpec, J1: int, J2: int,
                          meyer: MeyerBasisSpec = DEFAULT_MEYER,
                          daub: DaubBasisSpec = DEFAULT_DAUB) -> CoeffTable:
    """All coefficient estimates over Omega(J1, J2) (plus coarse layers) at once."""
    N, M = Yhat.shape
    band, _ = meyer_analysis_matrix(meyer, N, J1)
    g = kernel_table(kernel, N, M)[band]
    _check_kernel(g)
    deconvolved = np.zeros_like(Yhat, dtype=complex)
    deconvolved[band] = Yhat[band] / g
    time_coeffs = analyze_time_spectrum(deconvolved, meyer, J1)
    return CoeffTable(analyze_space(time_coeffs, daub, J2), meyer.coarsest_level, daub.coarsest_level)


def estimate(Y, kernel: KernelSpec, params: EstimatorParams,
             meyer: MeyerBasisSpec = DEFAULT_MEYER, daub: DaubBasisSpec = DEFAULT_DAUB):
    """Thresholded estimate; returns ``(f_hat grid, thresholded CoeffTable)``."""
    Yhat = dft_profiles(Y)
    N, M = Yhat.shape
    if len(params.alphas) != M:
        raise ShapeError(f"params carry {len(params.alphas)} profiles, data has {M}")
    raw = estimate_coefficients(Yhat, kernel, params.J1, params.J2, meyer, daub)
    lam = threshold_matrix(raw.shape, M, N, params, meyer.coarsest_level, daub.coarsest_level)
    table = hard_threshold(raw, lam)
    return synthesize_2d(table, N, M, meyer, daub), table


@dataclass(frozen=True)
class ThresholdCalibration:
    c2_hat: float
    K1_hat: float
    sigma: float
    nu: float

    @property
    def sigma_o_sq(self) -> float:
        return self.c2_hat * self.sigma ** 2 / self.K1_hat * (8 * math.pi / 3) ** (2 * self.nu)

    @property
    def rho_min(self) -> float:
        return 2.0 * math.sqrt(self.sigma_o_sq)


def calibrate_rho(kernel: KernelSpec, noise: NoiseSpec, nu: float | None = None,
                  N: int = 1024, ladder=DEFAULT_CERT_LADDER) -> ThresholdCalibration:
    """Smallest rho for which the large-deviation exponent (gamma = 1) reaches 2.

    ``c2_hat`` is the largest ``lambda_max / N**(1 - alpha_l)`` over all
    profiles and ladder lengths; ``K1_hat`` is the smallest enumerated
    ``|g_m(x)|**2 |m|**(2 nu)`` on an ``N x M`` grid.
    """
    nu = kernel.nu if nu is None else nu
    c2 = 0.0
    for alpha in sorted(set(noise.alphas)):
        l = noise.alphas.index(alpha)
        c2 = max(c2, certificate_bounds(certify_a1(noise, l, ladder))[1])
    K1, _ = certify_kernel(replace(kernel, nu=nu), N, noise.M)
    return ThresholdCalibration(c2, K1, noise.sigma, nu)
