"""Command-line interface: ``lmdeconv {simulate,estimate,bench,rates}``."""

from __future__ import annotations

import argparse
import hashlib
import io
import itertools
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bench import (
    BesovSpec, ExperimentPlan, _csv_text, atomic_write_text, empirical_risk, run_experiment,
    theoretical_exponent,
)
from .errors import ConfigError, DomainError, GridFormatError
from .estimator import EstimatorParams, calibrate_rho, estimate
from .longmem import Generator, NoiseSpec
from .model import KernelSpec, convolve, get_test_function, read_grid, simulate, write_grid

log = logging.getLogger("lmdeconv")

# s1, s2, p, nu: the three exponent cases followed by the two xi boundaries
GOLDEN_RATE_CASES = (
    (4.0, 1.0, 2.0, 1.0),
    (2.0, 1.0, 2.0, 1.0),
    (1.0, 1.0, 1.0, 1.0),
    (3.0, 1.0, 2.0, 1.0),
    (1.5, 1.0, 1.0, 1.0),
)


# ---------------------------------------------------------------------------
# config helpers
# ---------------------------------------------------------------------------

def load_config(path) -> dict:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{path}: {where}: {exc.problem}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a mapping of sections")
    return cfg


def _field(cfg: dict, dotted: str, kind=None, default=...):
    node = cfg
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is ...:
                raise ConfigError(f"missing field {dotted!r}")
            return default
        node = node[part]
    if kind is None or node is None:
        return node
    try:
        return kind(node)
    except (TypeError, ValueError):
        raise ConfigError(f"field {dotted!r}: cannot interpret {node!r} as {kind.__name__}") from None


def kernel_from_config(cfg: dict) -> KernelSpec:
    try:
        return KernelSpec(_field(cfg, "kernel.nu", float),
                          _field(cfg, "kernel.family", str, "pure_power").lower(),
                          _field(cfg, "kernel.modulation", str, None))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"kernel: {exc}") from None


def noise_from_config(cfg: dict, M: int) -> NoiseSpec:
    explicit = _field(cfg, "noise.alphas", list, [])
    alpha = _field(cfg, "noise.alpha", float, 1.0)
    if len(explicit) > M:
        raise ConfigError(f"field 'noise.alphas': {len(explicit)} entries exceed M={M}")
    alphas = [float(a) for a in explicit] + [alpha] * (M - len(explicit))
    try:
        return NoiseSpec(_field(cfg, "noise.sigma", float),
                         tuple(alphas),
                         Generator(_field(cfg, "noise.generator", str, "fgn").lower()),
                         _field(cfg, "seed", int, 0))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"noise: {exc}") from None


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

class OutputDir:
    """Collects artifacts; refuses to clobber existing files unless forced."""

    def __init__(self, path, force: bool):
        self.path = Path(path)
        self.force = force
        self.written: dict[str, str] = {}
        self.path.mkdir(parents=True, exist_ok=True)

    def target(self, name: str) -> Path:
        p = self.path / name
        if p.exists() and not self.force:
            raise FileExistsError(f"{p} exists; pass --force to overwrite")
        return p

    def check(self, *names: str) -> None:
        for name in names:
            self.target(name)

    def _record(self, name: str) -> None:
        digest = hashlib.sha256((self.path / name).read_bytes()).hexdigest()
        self.written[name] = digest

    def grid(self, name: str, data) -> None:
        p = self.target(name)
        fd, tmp = tempfile.mkstemp(dir=self.path, prefix=f".{name}.", suffix=".tmp")
        os.close(fd)
        try:
            write_grid(tmp, data)
            os.replace(tmp, p)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        self._record(name)

    def text(self, name: str, content: str) -> None:
        atomic_write_text(self.target(name), content)
        self._record(name)

    def manifest(self, payload: dict) -> None:
        payload = dict(payload, version=__version__, outputs=dict(self.written))
        atomic_write_text(self.target("manifest.yaml"), yaml.safe_dump(payload, sort_keys=False))


def _plain(obj):
    """Convert numpy scalars/tuples for YAML dumping."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: dict, out: OutputDir) -> int:
    f = get_test_function(_field(cfg, "function", str))
    N, M = _field(cfg, "grid.N", int), _field(cfg, "grid.M", int)
    kernel = kernel_from_config(cfg)
    noise = noise_from_config(cfg, M)
    replicate = _field(cfg, "replicate", int, 0)
    out.check("data.fdgrid", "clean.fdgrid", "truth.fdgrid", "manifest.yaml")
    truth = f.sample(N, M)
    Y = simulate(f, kernel, noise, N, M, replicate)
    out.grid("data.fdgrid", Y.data)
    out.grid("clean.fdgrid", convolve(truth, kernel))
    out.grid("truth.fdgrid", truth)
    resolved = {
        "function": f.name,
        "grid": {"N": N, "M": M},
        "kernel": {"family": kernel.family.value, "nu": kernel.nu, "modulation": kernel.modulation},
        "noise": {"generator": noise.generator.value, "sigma": noise.sigma,
                  "alphas": list(noise.alphas)},
        "seed": noise.seed,
        "replicate": replicate,
    }
    out.manifest({"command": "simulate", "config": _plain(resolved)})
    print(f"simulated {f.name} on a {N}x{M} grid (sigma={noise.sigma}, "
          f"alpha*={noise.alpha_star}, seed={noise.seed}, replicate={replicate})")
    return 0


def _resolve_input(cfg: dict, key: str, base: Path):
    value = _field(cfg, f"input.{key}", str, None)
    if value is None:
        sim = _field(cfg, "input.simulation", str, None)
        if sim is None:
            return None
        candidate = (base / sim / f"{key}.fdgrid")
        return candidate if candidate.exists() else None
    return base / value


def cmd_estimate(cfg: dict, out: OutputDir, base: Path) -> int:
    sim_dir = _field(cfg, "input.simulation", str, None)
    if sim_dir is not None:
        manifest = load_config(base / sim_dir / "manifest.yaml").get("config", {})
        merged = dict(manifest)
        for key, value in cfg.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = value
        cfg = merged
    data_path = _resolve_input(cfg, "data", base)
    if data_path is None:
        raise ConfigError("missing field 'input.data' (or 'input.simulation')")
    data = read_grid(data_path)
    N, M = data.shape
    kernel = kernel_from_config(cfg)
    noise = noise_from_config(cfg, M)
    rho_cfg = _field(cfg, "estimator.rho", None, "auto")
    if rho_cfg == "auto":
        calib = calibrate_rho(kernel, noise, kernel.nu, N=N)
        rho = calib.rho_min
    else:
        try:
            rho = float(rho_cfg)
        except (TypeError, ValueError):
            raise ConfigError(f"field 'estimator.rho': expected a number or 'auto', got {rho_cfg!r}") from None
        calib = None
    names = ["estimate.fdgrid", "coefficients.csv", "manifest.yaml"]
    out.check(*names)
    params = EstimatorParams.build(M, N, kernel.nu, noise.alphas, noise.sigma, rho)
    f_hat, table = estimate(data, kernel, params)
    out.grid("estimate.fdgrid", f_hat)
    buf = io.StringIO()
    n_kept = table.write_csv(buf)
    out.text("coefficients.csv", buf.getvalue())

    truth_path = _resolve_input(cfg, "truth", base)
    risk = None
    if truth_path is not None and truth_path.exists():
        risk = empirical_risk(f_hat, read_grid(truth_path))
    resolved = {
        "input": {"data": str(data_path), "truth": None if truth_path is None else str(truth_path)},
        "kernel": {"family": kernel.family.value, "nu": kernel.nu, "modulation": kernel.modulation},
        "noise": {"generator": noise.generator.value, "sigma": noise.sigma, "alphas": list(noise.alphas)},
        "estimator": {"rho": rho, "rho_mode": "auto" if calib else "fixed",
                      "J1": params.J1, "J2": params.J2, "capped": params.capped,
                      "alpha_star": params.alpha_star},
    }
    if calib is not None:
        resolved["estimator"].update(c2_hat=calib.c2_hat, K1_hat=calib.K1_hat,
                                     sigma_o_sq=calib.sigma_o_sq, rho_min=calib.rho_min)
    summary = {"kept": n_kept, "total": int(table.values.size), "risk": risk}
    out.manifest({"command": "estimate", "config": _plain(resolved), "summary": summary})
    print(f"J1={params.J1} J2={params.J2} rho={rho:.6g}")
    print(f"kept {n_kept} of {table.values.size} coefficients")
    if risk is not None:
        print(f"risk {risk:.6e}")
    return 0


def cmd_bench(cfg: dict, out: OutputDir, workers: int | None) -> int:
    plan = ExperimentPlan.from_dict(cfg)
    if workers is not None:
        plan.workers = workers
    out.check("risks.csv", "report.csv", "plot_risk.csv", "plot_fit_input.csv", "manifest.yaml")
    report = run_experiment(plan, out.path)
    for name in ("risks.csv", "report.csv", "plot_risk.csv", "plot_fit_input.csv"):
        out._record(name)
    out.manifest({"command": "bench", "config": _plain(cfg),
                  "resolved_seed": plan.seed, "notes": report.notes})
    print(f"regime {report.regime.value}: theoretical exponent {report.exponent:.4f}, "
          f"fitted {report.fitted_slope:.4f} +/- {report.slope_stderr:.4f}")
    for M, N, a, risk, se in report.ladder:
        print(f"  M={M:4d} N={N:5d} alpha*={a:.3g} risk={risk:.4e} se={se:.2e}")
    for note in report.notes:
        print(f"  note: {note}")
    return 0


def rate_cases(cfg: dict):
    if "cases" in cfg:
        for i, case in enumerate(cfg["cases"]):
            try:
                yield (float(case["s1"]), float(case["s2"]), float(case["p"]), float(case["nu"]),
                       float(case.get("q", 2.0)))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"cases[{i}]: bad or missing field {exc}") from None
    elif "grid" in cfg:
        axes = [[float(v) for v in _field(cfg, f"grid.{name}", list)] for name in ("s1", "s2", "p", "nu")]
        for s1, s2, p, nu in itertools.product(*axes):
            yield s1, s2, p, nu, 2.0
    else:
        for s1, s2, p, nu in GOLDEN_RATE_CASES:
            yield s1, s2, p, nu, 2.0


def rates_table(cfg: dict):
    rows = []
    for s1, s2, p, nu, q in rate_cases(cfg):
        try:
            rep = theoretical_exponent(BesovSpec(s1, s2, p, q), nu)
        except DomainError as exc:
            rows.append((s1, s2, p, q, nu, "invalid", math.nan, math.nan, math.nan, 0, 0, str(exc)))
            continue
        rows.append((s1, s2, p, q, nu, rep.regime.value, rep.exponent, rep.log_exponent_upper,
                     rep.lower_exponent, rep.xi1, rep.xi2, ""))
    return rows


def cmd_rates(cfg: dict, out: OutputDir) -> int:
    rows = rates_table(cfg)
    header = ["s1", "s2", "p", "q", "nu", "regime", "exponent", "log_power", "lower_exponent",
              "xi1", "xi2", "note"]
    out.check("rates.csv", "manifest.yaml")
    out.text("rates.csv", _csv_text(header, [[repr(v) if isinstance(v, float) else v for v in r]
                                             for r in rows]))
    out.manifest({"command": "rates", "config": _plain(cfg)})
    print(f"{'s1':>6} {'s2':>6} {'p':>5} {'nu':>5}  {'regime':<12} {'exponent':>9} "
          f"{'log pow':>8} {'lower':>8} xi1 xi2")
    for s1, s2, p, q, nu, regime, e, lp, lo, x1, x2, note in rows:
        if regime == "invalid":
            print(f"{s1:6g} {s2:6g} {p:5g} {nu:5g}  invalid: {note}")
        else:
            print(f"{s1:6g} {s2:6g} {p:5g} {nu:5g}  {regime:<12} {e:9.6f} {lp:8.4f} {lo:8.4f} "
                  f"{x1:3d} {x2:3d}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lmdeconv",
        description="Functional Fourier deconvolution with long-memory errors.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, needs_config in (("simulate", True), ("estimate", True), ("bench", True), ("rates", False)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else {}
        if args.seed is not None:
            cfg["seed"] = args.seed
        out = OutputDir(args.out, args.force)
        base = args.config.parent if args.config else Path.cwd()
        if args.subcommand == "simulate":
            return cmd_simulate(cfg, out)
        if args.subcommand == "estimate":
            return cmd_estimate(cfg, out, base)
        if args.subcommand == "bench":
            return cmd_bench(cfg, out, args.threads)
        return cmd_rates(cfg, out)
    except (ConfigError, GridFormatError, FileExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ValueError, KeyError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
