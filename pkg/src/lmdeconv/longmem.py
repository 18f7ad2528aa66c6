"""Long-memory Gaussian noise: exact samplers and eigenvalue certificates.

The long-memory parameter ``alpha`` in (0, 1] is mapped to the Hurst index
by ``H = 1 - alpha/2`` (fGn) and to the fractional difference order by
``d = (1 - alpha)/2`` (FARIMA(0, d, 0)). ``alpha = 1`` is white noise for
every family. All processes have unit marginal variance.
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericalError, ShapeError
from .wavelets import is_power_of_two


class Generator(str, Enum):
    FGN = "fgn"
    FARIMA = "farima"
    IID = "iid"


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    alphas: tuple[float, ...]
    generator: Generator = Generator.FGN
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "generator", Generator(self.generator))
        if self.sigma < 0:
            raise DomainError("sigma must be nonnegative")
        if not self.alphas:
            raise DomainError("alphas must name at least one profile")
        for a in self.alphas:
            if not 0.0 < a <= 1.0:
                raise DomainError(f"long-memory parameter {a} outside (0, 1]")
        if self.generator is Generator.IID and any(a != 1.0 for a in self.alphas):
            raise DomainError("the IID generator requires alpha = 1 on every profile")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    @property
    def M(self) -> int:
        return len(self.alphas)

    @property
    def alpha_star(self) -> float:
        return max(self.alphas)

    @classmethod
    def homogeneous(cls, sigma, alpha, M, generator=Generator.FGN, seed=0):
        return cls(sigma, (alpha,) * M, generator, seed)


def hurst_from_alpha(alpha: float) -> float:
    return 1.0 - alpha / 2.0


def fgn_autocovariance(hurst: float, lag):
    """Autocovariance of unit-variance fractional Gaussian noise."""
    if not 0.5 <= hurst < 1.0:
        raise DomainError(f"Hurst index {hurst} outside [0.5, 1)")
    k = np.abs(np.asarray(lag, dtype=float))
    two_h = 2.0 * hurst
    r = 0.5 * ((k + 1) ** two_h - 2 * k ** two_h + np.abs(k - 1) ** two_h)
    return r[()] if r.ndim == 0 else r


def farima_autocorrelation(d: float, n: int) -> np.ndarray:
    """Autocorrelation of FARIMA(0, d, 0) at lags 0..n-1."""
    if not 0.0 <= d < 0.5:
        raise DomainError(f"fractional order {d} outside [0, 0.5)")
    k = np.arange(1, n)
    ratios = (k - 1 + d) / (k - d)
    return np.concatenate([[1.0], np.cumprod(ratios)])


@functools.lru_cache(maxsize=128)
def _autocovariance(generator: Generator, alpha: float, n: int) -> np.ndarray:
    if generator is Generator.IID or alpha == 1.0:
        r = np.zeros(n)
        r[0] = 1.0
    elif generator is Generator.FGN:
        r = fgn_autocovariance(hurst_from_alpha(alpha), np.arange(n))
    else:
        r = farima_autocorrelation((1.0 - alpha) / 2.0, n)
    r.setflags(write=False)
    return r


def autocovariance(generator, alpha: float, n: int) -> np.ndarray:
    return _autocovariance(Generator(generator), float(alpha), int(n))


@functools.lru_cache(maxsize=128)
def _circulant_sqrt(generator: Generator, alpha: float, n: int) -> np.ndarray:
    r = _autocovariance(generator, alpha, n + 1)
    row = np.concatenate([r, r[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        raise NumericalError(
            f"circulant embedding is not PSD for {generator.value}, alpha={alpha}, N={n}")
    weights = np.sqrt(np.clip(lam, 0.0, None) / row.size)
    weights.setflags(write=False)
    return weights


def sample_stationary(generator, alpha: float, n: int, rng: np.random.Generator,
                      size: tuple[int, ...] = ()) -> np.ndarray:
    """Draw ``size + (n,)`` samples by circulant (Davies-Harte) embedding."""
    generator = Generator(generator)
    if generator is Generator.IID or alpha == 1.0:
        return rng.standard_normal(size + (n,))
    w = _circulant_sqrt(generator, float(alpha), n)
    z = rng.standard_normal(size + (2 * n,)) + 1j * rng.standard_normal(size + (2 * n,))
    return np.fft.fft(w * z, axis=-1)[..., :n].real


def stream(seed: int, profile_index: int, replicate: int = 0) -> np.random.Generator:
    """Independent RNG for one (seed, profile, replicate) triple."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate, profile_index)))


def sample_noise(spec: NoiseSpec, N: int, profile_index: int, replicate: int = 0) -> np.ndarray:
    """Unit-variance noise vector for profile ``profile_index``."""
    if not is_power_of_two(N):
        raise ShapeError(f"N={N} is not a power of two")
    if not 0 <= profile_index < spec.M:
        raise DomainError(f"profile {profile_index} outside [0, {spec.M})")
    rng = stream(spec.seed, profile_index, replicate)
    return sample_stationary(spec.generator, spec.alphas[profile_index], N, rng)


def sample_noise_grid(spec: NoiseSpec, N: int, replicate: int = 0) -> np.ndarray:
    """``N x M`` array whose column ``l`` is ``sample_noise(spec, N, l, replicate)``."""
    return np.stack([sample_noise(spec, N, l, replicate) for l in range(spec.M)], axis=1)


@dataclass(frozen=True)
class EigenCertificate:
    N: int
    alpha: float
    lambda_min: float
    lambda_max: float

    @property
    def c1_hat(self) -> float:
        return self.lambda_min / self.N ** (1.0 - self.alpha)

    @property
    def c2_hat(self) -> float:
        return self.lambda_max / self.N ** (1.0 - self.alpha)

    def as_row(self):
        return (self.N, self.alpha, self.lambda_min, self.lambda_max, self.c1_hat, self.c2_hat)


def covariance_matrix(generator, alpha: float, N: int) -> np.ndarray:
    return scipy.linalg.toeplitz(autocovariance(generator, alpha, N))


@functools.lru_cache(maxsize=256)
def _extreme_eigenvalues(generator: Generator, alpha: float, N: int) -> tuple[float, float]:
    if generator is Generator.IID or alpha == 1.0:
        return 1.0, 1.0
    try:
        ev = scipy.linalg.eigvalsh(covariance_matrix(generator, alpha, N))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigen-solver failed at N={N}: {exc}") from exc
    return float(ev[0]), float(ev[-1])


def certify_a1(spec: NoiseSpec, profile_index: int, N_ladder) -> list[EigenCertificate]:
    """Extreme eigenvalues of the exact Toeplitz covariance along a ladder of N."""
    alpha = spec.alphas[profile_index]
    out = []
    for N in N_ladder:
        if N < 8:
            raise DomainError(f"ladder length {N} < 8")
        lo, hi = _extreme_eigenvalues(spec.generator, alpha, int(N))
        out.append(EigenCertificate(int(N), alpha, lo, hi))
    return out


def certificate_bounds(certs) -> tuple[float, float]:
    """``(min c1_hat, max c2_hat)`` across a ladder."""
    return min(c.c1_hat for c in certs), max(c.c2_hat for c in certs)


def write_certificates_csv(certs, fh):
    writer = csv.writer(fh, lineterminator="\r\n")
    writer.writerow(["N", "alpha", "lambda_min", "lambda_max", "c1_hat", "c2_hat"])
    for c in certs:
        writer.writerow([c.N, repr(c.alpha), *(repr(v) for v in c.as_row()[2:])])
