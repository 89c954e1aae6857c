"""Reproducible experiment runners behind the command-line interface.

Each experiment writes deterministic CSV output (17 significant digits,
rows ordered by grid index regardless of worker count) plus a JSON manifest
recording the configuration hash, library version, and wall time.
"""

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from dataclasses import dataclass, asdict

from . import __version__
from .engine import EngineError, differential_fisher_max, fit_power_law
from .noise import Delta, Flat, NoisePair, VonMises
from .noon import fisher_histogram_study, noon_fisher_optimal
from .qfi import (
    block_decomposition,
    cramer_rao,
    decoherence_kernel,
    density_from_product,
    effective_density_matrix,
    qfi_block_bounds,
    qfi_exact,
)
from .spin import SpinState, to_axis_basis
from .states import (
    adiabatic_ground_state,
    coherent_x_state,
    diabatic_state,
    twin_fock_state,
)

EXPERIMENTS = (
    "noon-fi",
    "scan-lambda",
    "scan-tau",
    "scan-n",
    "noise-histogram",
    "qfi-check",
)

SCAN_PROBES = ("twin-fock", "coherent", "adiabatic-opt", "diabatic-opt", "noon")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class NumericalError(RuntimeError):
    """Numerical failure while running an experiment (CLI exit code 3)."""


def parse_noise_token(token):
    """'delta' | 'flat' | positive width -> noise distribution.

    Point-mass and uniform noise are spelled out as tokens rather than
    sentinel widths.
    """
    if isinstance(token, str):
        name = token.strip().lower()
        if name == "delta":
            return Delta()
        if name == "flat":
            return Flat()
        try:
            token = float(name)
        except ValueError:
            raise ConfigError(f"unknown noise token {token!r}") from None
    if not token > 0:
        raise ConfigError(f"noise width must be positive, got {token!r}")
    return VonMises(float(token))


def _noise_label(token):
    return token if isinstance(token, str) else f"{float(token):.17g}"


@dataclass
class ExperimentConfig:
    # grid fields distinguish "not provided" (None, filled with defaults)
    # from an explicitly empty list, which is a configuration error
    experiment: str
    n_particles: int = 100
    n_list: list | None = None
    sigma_plus: list | None = None
    sigma_minus: list | None = None
    lambda_grid: list | None = None
    tau_grid: list | None = None
    probe: str = "twin-fock"
    peaks: int = 20
    peak_sigma: float = 2 * np.pi / 100
    trials: int | None = None
    repetitions: int = 1
    seed: int = 0
    grid: int = 512
    workers: int = 1
    output: str = "."

    def filled(self):
        """Copy with experiment-specific defaults in place of omitted fields."""
        cfg = ExperimentConfig(**asdict(self))
        if cfg.trials is None:
            cfg.trials = 20 if cfg.experiment == "qfi-check" else 500
        if cfg.experiment == "noon-fi":
            span = list(np.logspace(-3, 1, 25))
            if cfg.sigma_plus is None:
                cfg.sigma_plus = span
            if cfg.sigma_minus is None:
                cfg.sigma_minus = list(span)
        elif cfg.experiment == "scan-lambda":
            if cfg.sigma_plus is None:
                cfg.sigma_plus = ["delta", "flat"]
            if cfg.lambda_grid is None:
                cfg.lambda_grid = list(
                    np.logspace(-1, np.log10(cfg.n_particles**2 * 10.0), 25)
                )
        elif cfg.experiment == "scan-tau":
            if cfg.sigma_plus is None:
                cfg.sigma_plus = ["flat"]
            if cfg.tau_grid is None:
                cfg.tau_grid = list(np.linspace(0.01, np.pi / 2, 12))
        elif cfg.experiment == "scan-n":
            if cfg.sigma_plus is None:
                cfg.sigma_plus = ["flat"]
            if cfg.n_list is None:
                cfg.n_list = [100, 140, 200, 280, 400, 600]
        elif cfg.experiment == "qfi-check":
            if cfg.n_list is None:
                cfg.n_list = [4, 6, 8]
            if cfg.sigma_plus is None:
                cfg.sigma_plus = ["flat"]
        return cfg


def validate(config):
    """Structural validation; returns a list of error messages (empty = ok)."""
    errors = []
    if config.experiment not in EXPERIMENTS:
        errors.append(f"experiment must be one of {EXPERIMENTS}, got {config.experiment!r}")
        return errors
    filled = config.filled()
    all_n = [config.n_particles] + list(filled.n_list or [])
    for n in all_n:
        if not isinstance(n, (int, np.integer)) or n <= 0 or n % 2:
            errors.append(f"particle numbers must be positive even integers, got {n!r}")
    for name in ("sigma_plus", "sigma_minus"):
        grid = getattr(filled, name)
        if grid is not None and not grid:
            errors.append(f"{name} grid must be nonempty")
        for tok in grid or []:
            try:
                parse_noise_token(tok)
            except ConfigError as exc:
                errors.append(f"{name}: {exc}")
    if config.experiment == "scan-lambda" and not filled.lambda_grid:
        errors.append("lambda grid must be nonempty")
    if any(lam < 0 for lam in filled.lambda_grid or []):
        errors.append("lambda values must be >= 0")
    if config.experiment == "scan-tau" and not filled.tau_grid:
        errors.append("tau grid must be nonempty")
    if any(not 0 <= tau <= np.pi for tau in filled.tau_grid or []):
        errors.append("tau values must lie in [0, pi]")
    if config.experiment == "scan-n" and config.probe not in SCAN_PROBES:
        errors.append(f"probe must be one of {SCAN_PROBES}, got {config.probe!r}")
    if config.experiment == "scan-n" and len(filled.n_list or []) < 3:
        errors.append("scan-n needs at least three particle numbers to fit")
    if config.repetitions < 1:
        errors.append(f"repetitions must be >= 1, got {config.repetitions!r}")
    if filled.trials < 1:
        errors.append(f"trials must be >= 1, got {filled.trials!r}")
    if config.peaks < 1:
        errors.append(f"peaks must be >= 1, got {config.peaks!r}")
    if not config.peak_sigma > 0:
        errors.append(f"peak width must be positive, got {config.peak_sigma!r}")
    if config.grid < 8:
        errors.append(f"theta grid too coarse, got {config.grid!r}")
    if config.workers < 1:
        errors.append(f"workers must be >= 1, got {config.workers!r}")
    return errors


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return f"{float(value):.17g}"


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _uncertainty(fisher, repetitions):
    return cramer_rao(fisher, repetitions) if fisher > 0 else float("inf")


def _scan_probe(name, n, sigma_token):
    if name == "twin-fock":
        return twin_fock_state(n)
    if name == "coherent":
        return coherent_x_state(n)
    if name == "adiabatic-opt":
        return adiabatic_ground_state(n, float(n))
    if name == "diabatic-opt":
        return diabatic_state(n, n ** (-0.75), axis="auto")
    raise ConfigError(f"unknown probe {name!r}")


def _run_noon_fi(cfg, out_dir):
    jobs = [
        (sm, sp)
        for sm in cfg.sigma_minus
        for sp in cfg.sigma_plus
    ]

    def one(pairtok):
        sm, sp = pairtok
        pair = NoisePair(total=parse_noise_token(sp), relative=parse_noise_token(sm))
        res = noon_fisher_optimal(cfg.n_particles, pair)
        return res.theta, res.fisher

    results = _map_ordered(one, jobs, cfg.workers)
    rows = [
        (_noise_label(sm), _noise_label(sp), theta, fisher,
         _uncertainty(fisher, cfg.repetitions))
        for (sm, sp), (theta, fisher) in zip(jobs, results)
    ]
    path = out_dir / "noon_fi.csv"
    _write_csv(path, ["sigma_minus", "sigma_plus", "theta_opt", "fisher", "delta_theta"], rows)
    return [path]


def _run_parameter_scan(cfg, out_dir, parameter):
    values = cfg.lambda_grid if parameter == "lambda" else cfg.tau_grid
    rows = []
    for sp in cfg.sigma_plus:
        noise = parse_noise_token(sp)
        for value in values:
            state = (
                adiabatic_ground_state(cfg.n_particles, value)
                if parameter == "lambda"
                else diabatic_state(cfg.n_particles, value, axis="auto")
            )
            res = differential_fisher_max(state, state, "mz-y", noise, grid=cfg.grid)
            rows.append(
                (_noise_label(sp), value, res.theta, res.fisher,
                 _uncertainty(res.fisher, cfg.repetitions))
            )
    path = out_dir / f"scan_{parameter}.csv"
    _write_csv(
        path,
        ["sigma_plus", parameter, "theta_opt", "fisher", "delta_theta"],
        rows,
    )
    return [path]


def _run_scan_n(cfg, out_dir, manifest):
    token = cfg.sigma_plus[0]
    noise = parse_noise_token(token)
    rows = []
    for n in cfg.n_list:
        if cfg.probe == "noon":
            res = noon_fisher_optimal(n, NoisePair(total=noise, relative=Delta()))
        else:
            state = _scan_probe(cfg.probe, n, token)
            res = differential_fisher_max(
                state, state, "mz-y", noise, grid=max(cfg.grid, 4 * n + 4)
            )
        rows.append((n, res.theta, res.fisher,
                     _uncertainty(res.fisher, cfg.repetitions)))
    path = out_dir / f"scan_n_{cfg.probe}.csv"
    _write_csv(path, ["n", "theta_opt", "fisher", "delta_theta"], rows)
    fit = fit_power_law([r[0] for r in rows], [r[2] for r in rows])
    manifest["power_law"] = {
        "probe": cfg.probe,
        "beta": fit.beta,
        "alpha": fit.alpha,
        "rms_residual": fit.rms_residual,
    }
    return [path]


def _run_noise_histogram(cfg, out_dir):
    study = fisher_histogram_study(
        cfg.n_particles, cfg.peaks, cfg.peak_sigma, cfg.trials, cfg.seed,
        workers=cfg.workers,
    )
    path = out_dir / "noise_histogram.csv"
    study.write_csv(path)
    return [path]


def _run_qfi_check(cfg, out_dir):
    noise = NoisePair(total=parse_noise_token(cfg.sigma_plus[0]), relative=Delta())
    rows = []
    for n in cfg.n_list:
        kernel = decoherence_kernel(noise, n)
        for trial in range(cfg.trials):
            rng = np.random.default_rng([cfg.seed, n, trial])
            probes = []
            for _ in range(2):
                amps = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
                probes.append(SpinState(n, amps / np.linalg.norm(amps)))
            res = differential_fisher_max(probes[0], probes[1], "mz-y", noise.total)
            rho = density_from_product(
                to_axis_basis(probes[0], "y"), to_axis_basis(probes[1], "y")
            )
            rho_eff = effective_density_matrix(rho, kernel)
            fq = qfi_exact(rho_eff)
            bound = qfi_block_bounds(block_decomposition(rho_eff, "sum"), n, "general")
            rows.append((n, trial, res.fisher, fq, bound))
    path = out_dir / "qfi_check.csv"
    _write_csv(path, ["n", "trial", "fisher_max", "qfi", "block_bound"], rows)
    return [path]


def _map_ordered(fn, jobs, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def config_hash(config):
    """Hash of the experiment definition: execution knobs (worker count,
    output location) do not change what is computed."""
    payload = asdict(config)
    payload.pop("workers", None)
    payload.pop("output", None)
    text = json.dumps(payload, sort_keys=True, default=float)
    return hashlib.sha256(text.encode()).hexdigest()


def run(config):
    """Validate, run, and write outputs plus manifest; returns the manifest."""
    errors = validate(config)
    if errors:
        raise ConfigError("; ".join(errors))
    cfg = config.filled()
    out_dir = Path(cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "experiment": cfg.experiment,
        "config": asdict(cfg),
        "config_sha256": config_hash(cfg),
        "library_version": __version__,
    }
    start = time.perf_counter()
    try:
        if cfg.experiment == "noon-fi":
            outputs = _run_noon_fi(cfg, out_dir)
        elif cfg.experiment == "scan-lambda":
            outputs = _run_parameter_scan(cfg, out_dir, "lambda")
        elif cfg.experiment == "scan-tau":
            outputs = _run_parameter_scan(cfg, out_dir, "tau")
        elif cfg.experiment == "scan-n":
            outputs = _run_scan_n(cfg, out_dir, manifest)
        elif cfg.experiment == "noise-histogram":
            outputs = _run_noise_histogram(cfg, out_dir)
        elif cfg.experiment == "qfi-check":
            outputs = _run_qfi_check(cfg, out_dir)
        else:  # pragma: no cover - guarded by validate
            raise ConfigError(f"unhandled experiment {cfg.experiment!r}")
    except (EngineError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise NumericalError(str(exc)) from exc
    manifest["wall_time_s"] = time.perf_counter() - start
    manifest["outputs"] = [p.name for p in outputs]
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
    return manifest
