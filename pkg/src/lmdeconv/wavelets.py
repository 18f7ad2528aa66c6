"""Periodized wavelet bases on [0, 1] and the hyperbolic 2-D transform.

Time uses a band-limited periodic Meyer basis handled entirely in the
Fourier domain. Space uses a periodized Daubechies basis handled by an
orthogonal periodic DWT. Coefficients of the tensor basis are stored in a
dense ``(2**J1, 2**J2)`` array with the usual pyramid layout along each
axis::

    [scaling (2**m0 entries) | level m0 | level m0+1 | ... | level J-1]

so that a wavelet ``(j, k)`` sits at position ``2**j + k`` and the
scaling function ``k`` at position ``k``. Scaling entries are reported with
level ``-1``.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import pywt

from .errors import DomainError, NumericalError, ResolutionError, ShapeError

SCALING = -1


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _log2(n: int) -> int:
    if not is_power_of_two(n):
        raise ShapeError(f"grid size {n} is not a power of two")
    return n.bit_length() - 1


class WaveletIndex(NamedTuple):
    j1: int
    k1: int
    j2: int
    k2: int


# ---------------------------------------------------------------------------
# Meyer side
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeyerBasisSpec:
    coarsest_level: int = 0
    aux_poly_degree: int = 3

    def __post_init__(self):
        if self.coarsest_level < 0:
            raise DomainError("coarsest_level must be >= 0")
        if self.aux_poly_degree < 0:
            raise DomainError("aux_poly_degree must be >= 0")


def meyer_aux(x, degree: int = 3):
    """Meyer smoothing polynomial, 0 on x <= 0 and 1 on x >= 1.

    ``degree=3`` gives ``x**4 (35 - 84x + 70x**2 - 20x**3)``. In general the
    polynomial is ``x**(d+1) * sum_k C(d+k, k) (1-x)**k`` which has ``d``
    vanishing derivatives at both ends and satisfies ``v(x) + v(1-x) = 1``.
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    tail = sum(math.comb(degree + k, k) * (1.0 - x) ** k for k in range(degree + 1))
    return x ** (degree + 1) * tail


def meyer_phi_hat(xi, degree: int = 3):
    """Fourier transform of the Meyer scaling function (real, even)."""
    a = np.abs(np.asarray(xi, dtype=float))
    out = np.zeros_like(a)
    out[a <= 2 * np.pi / 3] = 1.0
    band = (a > 2 * np.pi / 3) & (a < 4 * np.pi / 3)
    out[band] = np.cos(np.pi / 2 * meyer_aux(3 * a[band] / (2 * np.pi) - 1, degree))
    return out


def meyer_psi_hat(xi, degree: int = 3):
    """Fourier transform of the Meyer mother wavelet.

    Convention ``psi_hat(xi) = int psi(t) exp(-i xi t) dt``; the phase
    ``exp(-i xi / 2)`` makes ``psi`` real. Vanishes outside
    ``2pi/3 < |xi| < 8pi/3``.
    """
    xi = np.asarray(xi, dtype=float)
    a = np.abs(xi)
    mod = np.zeros_like(a)
    low = (a > 2 * np.pi / 3) & (a <= 4 * np.pi / 3)
    high = (a > 4 * np.pi / 3) & (a < 8 * np.pi / 3)
    mod[low] = np.sin(np.pi / 2 * meyer_aux(3 * a[low] / (2 * np.pi) - 1, degree))
    mod[high] = np.cos(np.pi / 2 * meyer_aux(3 * a[high] / (4 * np.pi) - 1, degree))
    return mod * np.exp(-0.5j * xi)


def _check_meyer_index(spec: MeyerBasisSpec, j1: int, k1: int):
    if j1 < spec.coarsest_level:
        raise DomainError(f"level {j1} below coarsest level {spec.coarsest_level}")
    if not 0 <= k1 < 2 ** j1:
        raise DomainError(f"translation {k1} outside [0, {2 ** j1})")


def meyer_fourier_coeff(spec: MeyerBasisSpec, j1: int, k1: int, m):
    """Fourier coefficient ``int_0^1 psi_{j1,k1}(t) exp(-2 pi i m t) dt``.

    Equals ``2**(-j1/2) exp(-2 pi i m k1 / 2**j1) psi_hat(2 pi m / 2**j1)``;
    exactly zero off the band ``2**j1/3 < |m| < 2**(j1+2)/3``.
    """
    _check_meyer_index(spec, j1, k1)
    m = np.asarray(m)
    scale = 2.0 ** j1
    val = (2.0 ** (-j1 / 2) * np.exp(-2j * np.pi * m * k1 / scale)
           * meyer_psi_hat(2 * np.pi * m / scale, spec.aux_poly_degree))
    return val[()] if val.ndim == 0 else val


def meyer_scaling_fourier_coeff(spec: MeyerBasisSpec, k: int, m):
    """Fourier coefficient of the periodized scaling function at the coarsest level."""
    j0 = spec.coarsest_level
    if not 0 <= k < 2 ** j0:
        raise DomainError(f"translation {k} outside [0, {2 ** j0})")
    m = np.asarray(m)
    scale = 2.0 ** j0
    val = (2.0 ** (-j0 / 2) * np.exp(-2j * np.pi * m * k / scale)
           * meyer_phi_hat(2 * np.pi * m / scale, spec.aux_poly_degree))
    return val[()] if val.ndim == 0 else val


@dataclass(frozen=True)
class FreqSupport:
    level: int
    members: tuple[int, ...]

    def __contains__(self, m) -> bool:
        return m in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def meyer_support(spec: MeyerBasisSpec, j1: int) -> FreqSupport:
    """Integer frequencies where the level-``j1`` Meyer coefficients are nonzero."""
    _check_meyer_index(spec, j1, 0)
    top = 2 ** (j1 + 2) // 3 + 1
    m = np.arange(-top, top + 1)
    m = m[(3 * np.abs(m) > 2 ** j1) & (3 * np.abs(m) < 2 ** (j1 + 2))]
    nz = np.abs(meyer_psi_hat(2 * np.pi * m / 2.0 ** j1, spec.aux_poly_degree)) > 0
    return FreqSupport(j1, tuple(int(v) for v in m[nz]))


def _time_band(J: int, N: int) -> np.ndarray:
    """FFT-order indices of the frequencies reachable by levels below ``J``."""
    limit = 2 ** (J + 1) // 3 + 1
    m = np.fft.fftfreq(N, 1.0 / N).astype(int)
    return np.flatnonzero(np.abs(m) <= limit)


@functools.lru_cache(maxsize=64)
def meyer_analysis_matrix(spec: MeyerBasisSpec, N: int, J: int):
    """Rows = conjugated Fourier coefficients of every time basis function.

    Returns ``(band, T)`` where ``band`` holds FFT-order indices of the
    frequencies involved and ``T[r, i]`` is ``conj(psi_r at m=freq[band[i]])``.
    Coefficients of a grid function with normalized DFT ``F`` are
    ``T @ F[band]``; the spectrum of ``sum_r c_r psi_r`` is ``T^H @ c``.
    """
    n_levels = _log2(N)
    if J < spec.coarsest_level:
        raise ResolutionError(f"J1={J} below coarsest level {spec.coarsest_level}")
    if J > n_levels - 1:
        raise ResolutionError(f"J1={J} exceeds log2(N)-1={n_levels - 1}")
    band = _time_band(J, N)
    m = np.fft.fftfreq(N, 1.0 / N)[band]
    T = np.zeros((2 ** J, band.size), dtype=complex)
    j0 = spec.coarsest_level
    for k in range(2 ** j0):
        T[k] = np.conj(meyer_scaling_fourier_coeff(spec, k, m))
    for j in range(j0, J):
        base = 2.0 ** (-j / 2) * meyer_psi_hat(2 * np.pi * m / 2.0 ** j, spec.aux_poly_degree)
        k = np.arange(2 ** j)[:, None]
        T[2 ** j: 2 ** (j + 1)] = np.conj(base[None, :] * np.exp(-2j * np.pi * m[None, :] * k / 2.0 ** j))
    T.setflags(write=False)
    band.setflags(write=False)
    return band, T


def meyer_eval(spec: MeyerBasisSpec, j1: int, k1: int, N: int) -> np.ndarray:
    """Periodized Meyer wavelet sampled at ``t_i = i/N``, i = 0..N-1."""
    _check_meyer_index(spec, j1, k1)
    if j1 > _log2(N) - 2:
        raise ResolutionError(f"level {j1} aliases on an N={N} grid")
    m = np.fft.fftfreq(N, 1.0 / N)
    spectrum = meyer_fourier_coeff(spec, j1, k1, m)
    return np.real(np.fft.ifft(spectrum) * N)


# ---------------------------------------------------------------------------
# Daubechies side
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DaubBasisSpec:
    filter_order: int = 8
    coarsest_level: int = 0
    filter_taps: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.coarsest_level < 0:
            raise DomainError("coarsest_level must be >= 0")
        if not self.filter_taps:
            taps = tuple(float(v) for v in pywt.Wavelet(f"db{self.filter_order}").rec_lo)
            object.__setattr__(self, "filter_taps", taps)
        h = np.asarray(self.filter_taps)
        if abs(h.sum() - np.sqrt(2)) > 1e-12:
            raise DomainError("scaling filter taps must sum to sqrt(2)")
        for shift in range(0, h.size, 2):
            target = 1.0 if shift == 0 else 0.0
            if abs(np.dot(h[: h.size - shift], h[shift:]) - target) > 1e-12:
                raise DomainError("scaling filter fails double-shift orthonormality")

    @property
    def lowpass(self) -> np.ndarray:
        return np.asarray(self.filter_taps)

    @property
    def highpass(self) -> np.ndarray:
        h = self.lowpass
        return ((-1.0) ** np.arange(h.size)) * h[::-1]


def _dwt_step(x: np.ndarray, h: np.ndarray, g: np.ndarray):
    n = x.shape[-1]
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(h.size)[None, :]) % n
    windows = x[..., idx]
    return windows @ h, windows @ g


def dwt(x, spec: DaubBasisSpec) -> np.ndarray:
    """Orthogonal periodic DWT along the last axis, pyramid layout."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    L = _log2(n)
    if spec.coarsest_level > L:
        raise ResolutionError("coarsest level exceeds log2 of the signal length")
    h, g = spec.lowpass, spec.highpass
    out = np.empty_like(x)
    approx = x
    while approx.shape[-1] > 2 ** spec.coarsest_level:
        size = approx.shape[-1]
        approx, detail = _dwt_step(approx, h, g)
        out[..., size // 2: size] = detail
    out[..., : approx.shape[-1]] = approx
    return out


@functools.lru_cache(maxsize=64)
def dwt_matrix(spec: DaubBasisSpec, M: int) -> np.ndarray:
    """Orthogonal ``M x M`` matrix of the periodic DWT (rows = basis vectors)."""
    D = dwt(np.eye(M), spec).T.copy()
    D.setflags(write=False)
    return D


def idwt(c, spec: DaubBasisSpec) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return c @ dwt_matrix(spec, c.shape[-1])


def daubechies_eval(spec: DaubBasisSpec, j2: int, k2: int, M: int) -> np.ndarray:
    """Periodized Daubechies wavelet sampled at ``x_l = l/M``, l = 0..M-1.

    Pass ``j2 = SCALING`` for the coarsest scaling function. Normalized so
    that ``mean(eta_a * eta_b)`` is the Kronecker delta.
    """
    L = _log2(M)
    if j2 == SCALING:
        if not 0 <= k2 < 2 ** spec.coarsest_level:
            raise DomainError(f"scaling translation {k2} out of range")
        row = k2
    else:
        if j2 >= L:
            raise ResolutionError(f"level {j2} needs more than M={M} grid points")
        if j2 < spec.coarsest_level:
            raise DomainError(f"level {j2} below coarsest level {spec.coarsest_level}")
        if not 0 <= k2 < 2 ** j2:
            raise DomainError(f"translation {k2} outside [0, {2 ** j2})")
        row = 2 ** j2 + k2
    return np.sqrt(M) * dwt_matrix(spec, M)[row]


# ---------------------------------------------------------------------------
# Coefficient tables and the 2-D transform
# ---------------------------------------------------------------------------

def position(j: int, k: int) -> int:
    return k if j == SCALING else 2 ** j + k


def level_of(pos: int, coarsest: int) -> tuple[int, int]:
    if pos < 2 ** coarsest:
        return SCALING, pos
    j = pos.bit_length() - 1
    return j, pos - 2 ** j


def level_array(size: int, coarsest: int) -> np.ndarray:
    """Level of each pyramid position (``SCALING`` for the coarse block)."""
    pos = np.arange(size)
    lev = np.where(pos > 0, np.floor(np.log2(np.maximum(pos, 1))).astype(int), 0)
    lev[pos < 2 ** coarsest] = SCALING
    return lev


@dataclass
class CoeffTable:
    """Tensor-basis coefficients over Omega(J1, J2) plus the coarse layers.

    ``values[r, c]`` is the coefficient of ``psi_r(t) eta_c(x)`` with ``r``
    and ``c`` pyramid positions. ``thresholds`` and ``kept`` are filled in
    by the estimator.
    """

    values: np.ndarray
    time_coarsest: int = 0
    space_coarsest: int = 0
    thresholds: np.ndarray | None = None
    kept: np.ndarray | None = None

    @property
    def J1(self) -> int:
        return self.values.shape[0].bit_length() - 1

    @property
    def J2(self) -> int:
        return self.values.shape[1].bit_length() - 1

    @property
    def shape(self):
        return self.values.shape

    def locate(self, idx: WaveletIndex) -> tuple[int, int]:
        if not (idx.j1 < self.J1 and idx.j2 < self.J2):
            raise DomainError(f"{idx} outside Omega(J1={self.J1}, J2={self.J2})")
        return position(idx.j1, idx.k1), position(idx.j2, idx.k2)

    def __getitem__(self, idx: WaveletIndex) -> complex:
        return self.values[self.locate(idx)]

    def index(self, r: int, c: int) -> WaveletIndex:
        j1, k1 = level_of(r, self.time_coarsest)
        j2, k2 = level_of(c, self.space_coarsest)
        return WaveletIndex(j1, k1, j2, k2)

    def time_levels(self) -> np.ndarray:
        return level_array(self.values.shape[0], self.time_coarsest)

    def space_levels(self) -> np.ndarray:
        return level_array(self.values.shape[1], self.space_coarsest)

    def level_block(self, j1: int, j2: int | None = None) -> np.ndarray:
        rows = slice(2 ** j1, 2 ** (j1 + 1)) if j1 != SCALING else slice(0, 2 ** self.time_coarsest)
        if j2 is None:
            return self.values[rows]
        cols = slice(2 ** j2, 2 ** (j2 + 1)) if j2 != SCALING else slice(0, 2 ** self.space_coarsest)
        return self.values[rows, cols]

    def copy(self) -> "CoeffTable":
        return CoeffTable(
            self.values.copy(), self.time_coarsest, self.space_coarsest,
            None if self.thresholds is None else self.thresholds.copy(),
            None if self.kept is None else self.kept.copy(),
        )

    def rows(self):
        """Yield ``(j1, k1, j2, k2, re, im, threshold, kept)`` tuples."""
        tl, sl = self.time_levels(), self.space_levels()
        for r in range(self.values.shape[0]):
            k1 = r if tl[r] == SCALING else r - 2 ** tl[r]
            for c in range(self.values.shape[1]):
                k2 = c if sl[c] == SCALING else c - 2 ** sl[c]
                v = self.values[r, c]
                thr = float(self.thresholds[r, c]) if self.thresholds is not None else 0.0
                kept = bool(self.kept[r, c]) if self.kept is not None else True
                yield int(tl[r]), int(k1), int(sl[c]), int(k2), float(v.real), float(v.imag), thr, int(kept)

    def write_csv(self, fh) -> int:
        """Write the RFC-4180 coefficient table; returns the kept count."""
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["j1", "k1", "j2", "k2", "re", "im", "threshold", "kept"])
        n_kept = 0
        for row in self.rows():
            writer.writerow([*row[:4], repr(row[4]), repr(row[5]), repr(row[6]), row[7]])
            n_kept += row[7]
        return n_kept


def _check_grid(N: int, M: int, J1: int, J2: int):
    if not (is_power_of_two(N) and is_power_of_two(M)):
        raise ShapeError(f"grid {N}x{M} is not a power-of-two grid")
    if J2 > _log2(M):
        raise ResolutionError(f"J2={J2} exceeds log2(M)={_log2(M)}")


def analyze_time_spectrum(spectrum: np.ndarray, meyer: MeyerBasisSpec, J1: int) -> np.ndarray:
    """Meyer coefficients from a normalized DFT taken along axis 0."""
    N = spectrum.shape[0]
    band, T = meyer_analysis_matrix(meyer, N, J1)
    return T @ spectrum[band]


def analyze_space(values: np.ndarray, daub: DaubBasisSpec, J2: int) -> np.ndarray:
    """Daubechies coefficients along the last axis, truncated to 2**J2."""
    M = values.shape[-1]
    D = dwt_matrix(daub, M)[: 2 ** J2]
    return values @ D.T / np.sqrt(M)


def analyze_2d(f_grid, meyer: MeyerBasisSpec, daub: DaubBasisSpec, J1: int, J2: int) -> CoeffTable:
    """Grid-quadrature coefficients of ``f`` on the tensor basis.

    ``f_grid[i, l]`` holds ``f(i/N, l/M)``.
    """
    f_grid = np.asarray(f_grid, dtype=float)
    N, M = f_grid.shape
    _check_grid(N, M, J1, J2)
    spectrum = np.fft.fft(f_grid, axis=0) / N
    time_coeffs = analyze_time_spectrum(spectrum, meyer, J1)
    return CoeffTable(analyze_space(time_coeffs, daub, J2), meyer.coarsest_level, daub.coarsest_level)


def synthesize_2d(coeffs: CoeffTable, N: int, M: int, meyer: MeyerBasisSpec,
                  daub: DaubBasisSpec, tol: float = 1e-6) -> np.ndarray:
    """Evaluate ``sum c_w psi_{j1,k1}(t_i) eta_{j2,k2}(x_l)`` on the grid."""
    J1, J2 = coeffs.J1, coeffs.J2
    _check_grid(N, M, J1, J2)
    D = dwt_matrix(daub, M)[: 2 ** J2]
    time_coeffs = np.sqrt(M) * (coeffs.values @ D)
    band, T = meyer_analysis_matrix(meyer, N, J1)
    spectrum = np.zeros((N, M), dtype=complex)
    spectrum[band] = T.conj().T @ time_coeffs
    grid = np.fft.ifft(spectrum, axis=0) * N
    energy = np.sum(grid.real ** 2)
    residual = np.sum(grid.imag ** 2)
    if residual > tol * energy and residual > 1e-24:
        raise NumericalError(
            f"imaginary residual {residual:.3e} exceeds {tol:g} of real energy {energy:.3e}")
    return grid.real.copy()
