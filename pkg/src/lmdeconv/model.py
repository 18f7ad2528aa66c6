"""Kernels, test functions and forward simulation of the functional model.

Rows of every grid are time samples ``t_i = i/N`` and columns are profiles
``x_l = l/M`` (``i = 0..N-1``, ``l = 0..M-1``; the periodic grid ``i/N`` for
``i = 1..N`` is the same set of points).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import GridFormatError, ShapeError
from .longmem import NoiseSpec, sample_noise_grid
from .wavelets import is_power_of_two

GRID_MAGIC = b"FDGRID01"
_HEADER = struct.Struct("<8sII")


class KernelFamily(str, Enum):
    PURE_POWER = "pure_power"
    SMOOTH_POWER = "smooth_power"


MODULATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "cosine": lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x),
    "ramp": lambda x: 0.5 + 1.5 * np.asarray(x, dtype=float),
}


@dataclass(frozen=True)
class KernelSpec:
    nu: float
    family: KernelFamily = KernelFamily.PURE_POWER
    modulation: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if self.nu < 0:
            raise ValueError("nu must be nonnegative")
        if self.modulation is not None and self.modulation not in MODULATIONS:
            raise ValueError(f"unknown modulation {self.modulation!r}; "
                             f"choose from {sorted(MODULATIONS)}")


def kernel_fourier(spec: KernelSpec, m, x=0.0):
    """Functional Fourier coefficient ``g_m(x)``; broadcasts over ``m`` and ``x``.

    The DC coefficient is 1 for both families.
    """
    m = np.abs(np.asarray(m, dtype=float))
    x = np.asarray(x, dtype=float)
    if spec.family is KernelFamily.PURE_POWER:
        with np.errstate(divide="ignore"):
            g = np.where(m == 0, 1.0, m ** -spec.nu)
    else:
        g = (1.0 + m ** 2) ** (-spec.nu / 2.0)
    if spec.modulation is not None:
        g = g * np.where(m == 0, 1.0, MODULATIONS[spec.modulation](x))
    g = np.broadcast_to(g, np.broadcast_shapes(m.shape, x.shape)).astype(complex)
    return g[()] if g.ndim == 0 else g


def kernel_table(spec: KernelSpec, N: int, M: int) -> np.ndarray:
    """``g_m(x_l)`` as an ``N x M`` array, rows in FFT frequency order."""
    m = np.fft.fftfreq(N, 1.0 / N)[:, None]
    x = (np.arange(M) / M)[None, :]
    return kernel_fourier(spec, m, x)


def certify_kernel(spec: KernelSpec, N: int, M: int) -> tuple[float, float]:
    """Enumerated ``(K1, K2)`` bounding ``|g_m(x)|**2 |m|**(2 nu)`` over the grid."""
    m = np.arange(1, N // 2 + 1)[:, None]
    x = (np.arange(M) / M)[None, :]
    ratio = np.abs(kernel_fourier(spec, m, x)) ** 2 * m ** (2 * spec.nu)
    return float(ratio.min()), float(ratio.max())


@dataclass
class ObservationGrid:
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ShapeError("observation grid must be two-dimensional")
        N, M = self.data.shape
        if not (is_power_of_two(N) and is_power_of_two(M)) or N < 8 or M < 8:
            raise ShapeError(f"grid {N}x{M} must have power-of-two sides >= 8")

    @property
    def N(self) -> int:
        return self.data.shape[0]

    @property
    def M(self) -> int:
        return self.data.shape[1]

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.N) / self.N

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.M) / self.M


def write_grid(path, data) -> None:
    """Write an ``N x M`` float64 array in FDGRID01 format."""
    data = np.ascontiguousarray(data, dtype="<f8")
    N, M = data.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(GRID_MAGIC, N, M))
        fh.write(data.tobytes(order="C"))


def read_grid(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise GridFormatError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, N, M = _HEADER.unpack_from(raw)
    if magic != GRID_MAGIC:
        raise GridFormatError(f"{path}: bad magic {magic!r}, expected {GRID_MAGIC!r}")
    if N == 0:
        raise GridFormatError(f"{path}: header field N is zero")
    if M == 0:
        raise GridFormatError(f"{path}: header field M is zero")
    payload = raw[_HEADER.size:]
    if len(payload) != 8 * N * M:
        raise GridFormatError(
            f"{path}: payload has {len(payload)} bytes but header N={N}, M={M} "
            f"requires {8 * N * M}")
    return np.frombuffer(payload, dtype="<f8").reshape(N, M).astype(float)


def write_grid_csv(fh, data) -> None:
    import csv

    data = np.asarray(data)
    writer = csv.writer(fh, lineterminator="\r\n")
    writer.writerow(["i", "l", "t", "x", "value"])
    N, M = data.shape
    for i in range(N):
        for l in range(M):
            writer.writerow([i, l, repr(i / N), repr(l / M), repr(float(data[i, l]))])


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Named bivariate test function with nominal ``(s1, s2, p, q, A)``.

    ``evaluator(t, x)`` must broadcast over array arguments and be
    1-periodic in ``t``.
    """

    __test__ = False

    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    nominal_smoothness: tuple[float, float, float, float, float]
    description: str = ""

    def sample(self, N: int, M: int) -> np.ndarray:
        t = (np.arange(N) / N)[:, None]
        x = (np.arange(M) / M)[None, :]
        return np.broadcast_to(self.evaluator(t, x), (N, M)).astype(float)


def _smooth(t, x):
    return (np.sin(2 * np.pi * t) * (1.0 + 0.5 * np.cos(2 * np.pi * x))
            + 0.5 * np.cos(4 * np.pi * t) * np.sin(2 * np.pi * x) + 0.25)


def _periodic_triangle(t, centre, width):
    d = np.abs(((t - centre + 0.5) % 1.0) - 0.5)
    return np.clip(1.0 - d / width, 0.0, None)


def _timebump(t, x):
    profile = 1.0 + 0.3 * np.sin(2 * np.pi * x)
    bumps = (_periodic_triangle(t, 0.2, 0.03) + 0.7 * _periodic_triangle(t, 0.55, 0.02)
             - 0.5 * _periodic_triangle(t, 0.8, 0.05))
    return profile * bumps


def _spacerough(t, x):
    return (np.cos(2 * np.pi * t) + 0.5) * _periodic_triangle(x, 0.5, 0.35)


_ROUGH_FREQS = np.arange(1, 1025)
_ROUGH_PHASES = np.random.default_rng(20180301).uniform(0.0, 2 * np.pi, _ROUGH_FREQS.size)


def _timerough_t(t):
    t = np.asarray(t, dtype=float)
    flat = t.reshape(-1, 1)
    h = np.cos(2 * np.pi * flat * _ROUGH_FREQS + _ROUGH_PHASES) @ _ROUGH_FREQS ** -2.5
    return h.reshape(t.shape)


def _timerough(t, x):
    return _timerough_t(t) * (1.0 + 0.5 * np.cos(2 * np.pi * x) + 0.25 * np.sin(4 * np.pi * x))


_BUILTINS = (
    TestFunction("SMOOTH", _smooth, (10.0, 10.0, 2.0, 2.0, 1.0),
                 "trigonometric polynomial, degree 2 in t and 1 in x"),
    TestFunction("TIMEBUMP", _timebump, (1.0, 10.0, 1.0, np.inf, 1.0),
                 "three periodic triangular bumps in t, smooth in x"),
    TestFunction("SPACEROUGH", _spacerough, (10.0, 1.0, 2.0, np.inf, 1.0),
                 "cosine in t times a piecewise-linear tent in x"),
    TestFunction("TIMEROUGH", _timerough, (2.0, 10.0, 2.0, np.inf, 1.0),
                 "random-phase Fourier series with |m|^-2.5 decay in t, smooth in x"),
)


def builtin_test_functions() -> list[TestFunction]:
    return list(_BUILTINS)


def get_test_function(name: str) -> TestFunction:
    for f in _BUILTINS:
        if f.name == name.upper():
            return f
    raise KeyError(f"unknown test function {name!r}; available: {[f.name for f in _BUILTINS]}")


# ---------------------------------------------------------------------------
# Forward model
# ---------------------------------------------------------------------------

def convolve(f_grid: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    """Circular convolution along time, profile by profile, via the DFT."""
    N, M = f_grid.shape
    spectrum = np.fft.fft(f_grid, axis=0) * kernel_table(kernel, N, M)
    return np.fft.ifft(spectrum, axis=0).real


def add_noise(clean: np.ndarray, noise: NoiseSpec, replicate: int = 0) -> ObservationGrid:
    N, M = clean.shape
    if noise.M != M:
        raise ShapeError(f"noise spec has {noise.M} profiles but the grid has {M}")
    if noise.sigma == 0:
        return ObservationGrid(clean.copy())
    return ObservationGrid(clean + noise.sigma * sample_noise_grid(noise, N, replicate))


def simulate(f: TestFunction, kernel: KernelSpec, noise: NoiseSpec, N: int, M: int,
             replicate: int = 0) -> ObservationGrid:
    """Noisy observations ``Y(t_i, x_l) = (f * g)(t_i, x_l) + sigma xi_il``."""
    if not (is_power_of_two(N) and is_power_of_two(M)):
        raise ShapeError(f"grid {N}x{M} is not a power-of-two grid")
    return add_noise(convolve(f.sample(N, M), kernel), noise, replicate)
