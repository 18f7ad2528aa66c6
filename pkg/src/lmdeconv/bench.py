"""Monte Carlo risk estimation, rate fitting and the theoretical-exponent oracle."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import ConfigError, DomainError, FitError, ShapeError
from .estimator import DEFAULT_DAUB, DEFAULT_MEYER, EstimatorParams, calibrate_rho, estimate
from .longmem import Generator, NoiseSpec
from .model import KernelSpec, TestFunction, add_noise, convolve, get_test_function

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Regime oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BesovSpec:
    s1: float
    s2: float
    p: float
    q: float = 2.0
    A: float = 1.0

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise DomainError(f"need p >= 1 and q >= 1, got p={self.p}, q={self.q}")
        if self.A <= 0:
            raise DomainError("Besov radius A must be positive")
        bound = max(1.0 / self.p, 0.5)
        if min(self.s1, self.s2) < bound:
            raise DomainError(
                f"min(s1, s2) = {min(self.s1, self.s2)} violates min(s1, s2) >= max(1/p, 1/2) = {bound}")

    @property
    def s1_star(self) -> float:
        return self.s1 + 0.5 - 1.0 / self.p

    @property
    def s2_star(self) -> float:
        return self.s2 + 0.5 - 1.0 / self.p

    @property
    def s1_prime(self) -> float:
        return self.s1 + 0.5 - 1.0 / min(2.0, self.p)


class Regime(str, Enum):
    DENSE_SPACE = "dense_space"
    DENSE_TIME = "dense_time"
    SPARSE = "sparse"


@dataclass
class RateReport:
    regime: Regime
    exponent: float
    log_exponent_upper: float
    lower_exponent: float
    xi1: int
    xi2: int
    fitted_slope: float = math.nan
    slope_stderr: float = math.nan
    ladder: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def theoretical_exponent(besov: BesovSpec, nu: float) -> RateReport:
    """Regime, risk exponent and log power of the upper bound, plus the lower-bound exponent."""
    s1, s2, p = besov.s1, besov.s2, besov.p
    dense_edge = s2 * (2 * nu + 1)
    sparse_edge = (2 * nu + 1) * (1.0 / p - 0.5)
    xi1 = int(math.isclose(s1, dense_edge, rel_tol=1e-12, abs_tol=1e-12))
    xi2 = int(math.isclose(s1, sparse_edge, rel_tol=1e-12, abs_tol=1e-12))
    if s1 > dense_edge or xi1:
        regime, exponent = Regime.DENSE_SPACE, 2 * s2 / (2 * s2 + 1)
        log_power = xi1 + exponent
    elif s1 > sparse_edge and not xi2:
        regime, exponent = Regime.DENSE_TIME, 2 * s1 / (2 * s1 + 2 * nu + 1)
        log_power = exponent
    else:
        sp = besov.s1_prime
        regime, exponent = Regime.SPARSE, 2 * sp / (2 * sp + 2 * nu)
        log_power = xi2 + exponent

    if s1 > dense_edge and not xi1:
        lower = 2 * s2 / (2 * s2 + 1)
    elif s1 > sparse_edge or xi2:
        lower = 2 * s1 / (2 * s1 + 2 * nu + 1)
    else:
        ss = besov.s1_star
        lower = 2 * ss / (2 * ss + 2 * nu)
    if p < 2 and not math.isclose(lower, exponent, rel_tol=1e-12):
        raise ConfigError(f"lower exponent {lower} differs from upper exponent {exponent} with p < 2")
    return RateReport(regime, exponent, log_power, lower, xi1, xi2)


# ---------------------------------------------------------------------------
# Risk
# ---------------------------------------------------------------------------

def empirical_risk(f_hat, f_true) -> float:
    """Rectangle-rule squared L2 distance on the unit square."""
    f_hat, f_true = np.asarray(f_hat), np.asarray(f_true)
    if f_hat.shape != f_true.shape:
        raise ShapeError(f"shape mismatch {f_hat.shape} vs {f_true.shape}")
    return float(np.mean((f_hat - f_true) ** 2))


def monte_carlo_risk(f: TestFunction, kernel: KernelSpec, noise: NoiseSpec, N: int, M: int,
                     params: EstimatorParams, R: int, workers: int = 1, first_replicate: int = 0,
                     meyer=DEFAULT_MEYER, daub=DEFAULT_DAUB):
    """Mean risk and its standard error over ``R`` seeded replicates.

    Replicate ``r`` always uses noise stream ``first_replicate + r``, so any
    ``workers`` count gives bit-identical results.
    """
    if R < 2:
        raise DomainError("need at least two replicates")
    truth = f.sample(N, M)
    clean = convolve(truth, kernel)

    def one(r):
        Y = add_noise(clean, noise, first_replicate + r)
        f_hat, _ = estimate(Y, kernel, params, meyer, daub)
        return empirical_risk(f_hat, truth)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            risks = np.array(list(pool.map(one, range(R))))
    else:
        risks = np.array([one(r) for r in range(R)])
    return float(risks.mean()), float(risks.std(ddof=1) / math.sqrt(R))


def rate_fit(ladder_results):
    """OLS of ``ln(risk)`` on ``ln(M N**alpha*)``; returns ``(-slope, stderr)``."""
    if len(ladder_results) < 4:
        raise FitError("rate fit needs at least 4 ladder points")
    x = np.array([math.log(M * N ** a) for M, N, a, _ in ladder_results])
    risks = np.array([r for *_, r in ladder_results], dtype=float)
    if np.any(risks <= 0):
        raise FitError("risks must be positive")
    if np.ptp(x) == 0:
        raise FitError("all ladder abscissae coincide")
    fit = stats.linregress(x, np.log(risks))
    return -float(fit.slope), float(fit.stderr)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

@dataclass
class ExperimentPlan:
    function: str
    nu: float
    ladder: list
    sigma: float = 1.0
    kernel_family: str = "pure_power"
    modulation: str | None = None
    generator: str = "fgn"
    alpha: float = 1.0
    alphas: tuple = ()
    replicates: int = 50
    rho: float | str = "auto"
    log_deflate: bool = True
    seed: int = 0
    workers: int = 1

    def profile_alphas(self, M: int) -> tuple[float, ...]:
        """Explicit ``alphas`` fill the first profiles; the rest get ``alpha``."""
        if len(self.alphas) > M:
            raise ConfigError(f"{len(self.alphas)} explicit alphas exceed M={M}")
        return tuple(self.alphas) + (self.alpha,) * (M - len(self.alphas))

    def kernel(self) -> KernelSpec:
        return KernelSpec(self.nu, self.kernel_family, self.modulation)

    def noise(self, M: int) -> NoiseSpec:
        return NoiseSpec(self.sigma, self.profile_alphas(M), Generator(self.generator), self.seed)

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentPlan":
        try:
            kernel = cfg.get("kernel", {})
            noise = cfg.get("noise", {})
            ladder = [tuple(int(v) for v in pair) for pair in cfg["ladder"]]
            if any(len(pair) != 2 for pair in ladder):
                raise ConfigError("ladder entries must be [M, N] pairs")
            alphas = noise.get("alphas", ())
            return cls(
                function=str(cfg["function"]),
                nu=float(kernel.get("nu", 1.0)),
                kernel_family=str(kernel.get("family", "pure_power")).lower(),
                modulation=kernel.get("modulation"),
                generator=str(noise.get("generator", "fgn")).lower(),
                alpha=float(noise.get("alpha", 1.0)),
                alphas=tuple(float(a) for a in alphas),
                sigma=float(cfg.get("sigma", noise.get("sigma", 1.0))),
                ladder=ladder,
                replicates=int(cfg.get("replicates", 50)),
                rho=cfg.get("rho", "auto"),
                log_deflate=bool(cfg.get("log_deflate", True)),
                seed=int(cfg.get("seed", 0)),
                workers=int(cfg.get("workers", 1)),
            )
        except KeyError as exc:
            raise ConfigError(f"experiment plan is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid experiment plan: {exc}") from None


def resolve_rho(plan: ExperimentPlan) -> float:
    """Plan rho, or the calibrated minimum at the largest ladder N when ``"auto"``."""
    if plan.rho != "auto":
        return float(plan.rho)
    M, N = max(plan.ladder, key=lambda pair: pair[1])
    return calibrate_rho(plan.kernel(), plan.noise(M), plan.nu, N=N).rho_min


def run_experiment(plan: ExperimentPlan, out_dir=None) -> RateReport:
    f = get_test_function(plan.function)
    besov = BesovSpec(*f.nominal_smoothness)
    report = theoretical_exponent(besov, plan.nu)
    rho = resolve_rho(plan)
    rows = []
    for M, N in plan.ladder:
        noise = plan.noise(M)
        params = EstimatorParams.build(M, N, plan.nu, noise.alphas, plan.sigma, rho)
        mean, se = monte_carlo_risk(f, plan.kernel(), noise, N, M, params,
                                    plan.replicates, plan.workers)
        log.info("M=%d N=%d alpha*=%.3g J1=%d J2=%d risk=%.4g se=%.2g",
                 M, N, noise.alpha_star, params.J1, params.J2, mean, se)
        rows.append((M, N, noise.alpha_star, mean, se))
    report.ladder = rows
    fit_input = []
    for M, N, a, mean, _ in rows:
        deflate = math.log(M * N) ** report.log_exponent_upper if plan.log_deflate else 1.0
        fit_input.append((M, N, a, mean / deflate))
    if len(fit_input) >= 4:
        report.fitted_slope, report.slope_stderr = rate_fit(fit_input)
    if all(a == 1.0 for M, _ in plan.ladder for a in plan.profile_alphas(M)):
        report.notes.append("alpha_l = 1 on every profile: the rates reduce to the "
                            "independent-error rates with epsilon^2 = sigma^2/(MN)")
    report.notes.append(f"rho = {rho!r}")
    if out_dir is not None:
        write_experiment_outputs(Path(out_dir), report, fit_input)
    return report


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a temporary sibling and rename so readers never see partial files."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_experiment_outputs(out_dir: Path, report: RateReport, fit_input) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "risks.csv", _csv_text(
        ["M", "N", "alpha_star", "mean_risk", "se"],
        [(M, N, repr(a), repr(r), repr(se)) for M, N, a, r, se in report.ladder]))
    atomic_write_text(out_dir / "report.csv", _csv_text(
        ["regime", "theoretical_exponent", "fitted_slope", "stderr"],
        [(report.regime.value, repr(report.exponent), repr(report.fitted_slope),
          repr(report.slope_stderr))]))
    atomic_write_text(out_dir / "plot_risk.csv", _csv_text(
        ["x", "y"],
        [(repr(math.log(M * N ** a)), repr(math.log(r))) for M, N, a, r, _ in report.ladder]))
    atomic_write_text(out_dir / "plot_fit_input.csv", _csv_text(
        ["x", "y"], [(repr(math.log(M * N ** a)), repr(math.log(r))) for M, N, a, r in fit_input]))
