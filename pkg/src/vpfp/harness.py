"""Experiment orchestration: config files, the epsilon sweep, persistence.

A sweep runs the fluid reference once, then one kinetic run per epsilon
against the same well-prepared initial profile, and reduces the per-run
error metrics to empirical convergence rates.  All outputs (per-run CSV
time series and the JSON summary) are deterministic for a fixed config;
wall-clock timings go to a separate file so the summary stays byte-stable.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import time as _time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ddp import ddp_run
from .diagnostics import EnergyReport, energy_functionals, limit_error
from .solver import KineticState, SolverConfig, Trajectory, make_initial_data, run
from .spectral import ConfigurationError

__all__ = [
    "SweepConfig",
    "SweepResult",
    "SweepError",
    "run_sweep",
    "estimate_rates",
    "parse_config_file",
    "default_sweep_config",
    "write_summary",
]

METRIC_KEYS = (
    "sup_moment_error",
    "sup_field_error",
    "pointwise_sup_error",
    "micro_time_integral",
)

# configuration schema: section -> {key: parser}
_SCHEMA = {
    "grid": {"n_x": int, "n_v": int, "d": int, "length": float},
    "solver": {
        "epsilon": float,
        "t_final": float,
        "dt_max": float,
        "cfl_scale": float,
        "scheme": str,
        "system": str,
        "poisson_correction": lambda s: s.lower() in ("1", "true", "yes"),
    },
    "sweep": {
        "epsilons": lambda s: tuple(float(x) for x in s.split(",")),
        "ddp_dt": float,
        "sample_interval": float,
        "amplitude": float,
        "profile_mode": int,
    },
    "diagnostics": {"k": int},
}

_DEFAULTS = {
    "grid": {"n_x": 64, "n_v": 64, "d": 1, "length": 2.0 * math.pi},
    "solver": {
        "epsilon": 0.1,
        "t_final": 1.0,
        "dt_max": 2.5e-3,
        "cfl_scale": 0.5,
        "scheme": "imex_bdf2",
        "system": "vpfp",
        "poisson_correction": False,
    },
    "sweep": {
        "epsilons": (0.2, 0.1, 0.05, 0.025),
        "ddp_dt": 2.5e-4,
        "sample_interval": 0.05,
        "amplitude": 0.01,
        "profile_mode": 1,
    },
    "diagnostics": {"k": 2},
}


def parse_config_file(path) -> dict:
    """Flat sectioned key-value config; unknown sections or keys are errors."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config file: {exc}") from exc
    cfg = {section: dict(values) for section, values in _DEFAULTS.items()}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigurationError(f"unknown config key {key!r} in section [{section}]")
            try:
                cfg[section][key] = _SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigurationError(f"bad value for {section}.{key}: {raw!r}") from exc
    return cfg


def default_sweep_config() -> dict:
    return {section: dict(values) for section, values in _DEFAULTS.items()}


def config_text(cfg: dict) -> str:
    lines = []
    for section in sorted(cfg):
        lines.append(f"[{section}]")
        for key in sorted(cfg[section]):
            val = cfg[section][key]
            if isinstance(val, tuple):
                val = ",".join(f"{x:g}" for x in val)
            lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(config_text(cfg).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SweepConfig:
    """Epsilon sweep: shared template, descending epsilon list, output dir."""

    epsilons: tuple
    template: SolverConfig
    ddp_dt: float
    sample_interval: float
    amplitude: float
    profile_mode: int
    k: int
    out_dir: Path | None = None
    raw: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        eps = self.epsilons
        if len(eps) < 2:
            raise ConfigurationError("need at least 2 epsilon values for rate estimation")
        if any(e <= 0 or e > 1 for e in eps):
            raise ConfigurationError(f"epsilons must lie in (0, 1], got {eps}")
        if any(e1 <= e2 for e1, e2 in zip(eps, eps[1:])):
            raise ConfigurationError(f"epsilons must be strictly decreasing, got {eps}")

    @classmethod
    def from_dict(cls, cfg: dict, out_dir=None) -> "SweepConfig":
        template = solver_config_from_dict(cfg)
        sw = cfg["sweep"]
        return cls(
            epsilons=tuple(sw["epsilons"]),
            template=template,
            ddp_dt=sw["ddp_dt"],
            sample_interval=sw["sample_interval"],
            amplitude=sw["amplitude"],
            profile_mode=sw["profile_mode"],
            k=cfg["diagnostics"]["k"],
            out_dir=Path(out_dir) if out_dir is not None else None,
            raw=cfg,
        )


def solver_config_from_dict(cfg: dict) -> SolverConfig:
    g, s = cfg["grid"], cfg["solver"]
    return SolverConfig(
        epsilon=s["epsilon"],
        t_final=s["t_final"],
        n_x=g["n_x"],
        n_v=g["n_v"],
        d=g["d"],
        length=g["length"],
        dt_max=s["dt_max"],
        cfl_scale=s["cfl_scale"],
        scheme=s["scheme"],
        poisson_correction=s["poisson_correction"],
    )


@dataclass
class SweepResult:
    """Per-epsilon metrics, pairwise rates and provenance for one sweep."""

    config: dict
    config_hash: str
    per_epsilon: list
    rates: dict
    incomplete: list
    timings: dict


class SweepError(RuntimeError):
    """A run inside a sweep failed; partial results were persisted."""

    def __init__(self, message: str, partial: SweepResult):
        super().__init__(message)
        self.partial = partial


def initial_profile(cfg: SweepConfig):
    mode = cfg.profile_mode
    length = cfg.template.length
    return lambda x: np.cos(mode * 2.0 * np.pi * x / length)


def run_single(cfg: SweepConfig, epsilon: float, csv_path: Path | None = None) -> Trajectory:
    """One kinetic run of the sweep, with energy reports per sample."""
    solver_cfg = SolverConfig(
        epsilon=epsilon,
        t_final=cfg.template.t_final,
        n_x=cfg.template.n_x,
        n_v=cfg.template.n_v,
        d=cfg.template.d,
        length=cfg.template.length,
        dt_max=cfg.template.dt_max,
        cfl_scale=cfg.template.cfl_scale,
        scheme=cfg.template.scheme,
        poisson_correction=cfg.template.poisson_correction,
    )
    grid = solver_cfg.make_grid()
    basis = solver_cfg.make_basis()
    initial = make_initial_data(grid, basis, initial_profile(cfg), amplitude=cfg.amplitude)

    reports: list[EnergyReport] = []

    def observer(state: KineticState):
        reports.append(energy_functionals(state, cfg.k, epsilon))

    traj = run(initial, solver_cfg, observers=[observer], sample_interval=cfg.sample_interval)
    traj.reports = reports
    if csv_path is not None:
        write_reports_csv(csv_path, reports)
    return traj


def write_reports_csv(path: Path, reports) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [EnergyReport.csv_header()]
    lines += [r.csv_row() for r in reports]
    path.write_text("\n".join(lines) + "\n")


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Run the fluid reference and every kinetic run; assemble metrics.

    A failed run persists the partial summary (marked incomplete) and
    raises SweepError.
    """
    t0 = _time.perf_counter()
    timings: dict = {}
    grid = cfg.template.make_grid()
    profile = initial_profile(cfg)
    rho0_in = cfg.amplitude * profile(grid.nodes)

    td = _time.perf_counter()
    ddp_traj = ddp_run(grid, rho0_in, cfg.ddp_dt, cfg.template.t_final,
                       sample_interval=cfg.sample_interval)
    timings["ddp_reference_s"] = _time.perf_counter() - td

    per_epsilon = []
    incomplete = []
    failure = None
    for eps in cfg.epsilons:
        tr0 = _time.perf_counter()
        try:
            csv_path = None
            if cfg.out_dir is not None:
                csv_path = cfg.out_dir / f"run_eps_{eps:g}.csv"
            traj = run_single(cfg, eps, csv_path=csv_path)
            errs = limit_error(traj, ddp_traj, cfg.k)
            reports = traj.reports
            record = {
                "epsilon": eps,
                **{key: errs[key] for key in METRIC_KEYS},
                "final_E_k": reports[-1].E_k,
                "D_k_time_integral": float(np.trapezoid(
                    [r.D_k for r in reports], [r.time for r in reports])),
            }
            per_epsilon.append(record)
        except Exception as exc:  # noqa: BLE001 - persist partial state first
            incomplete.append({"epsilon": eps, "error": f"{type(exc).__name__}: {exc}"})
            failure = exc
            break
        finally:
            timings[f"run_eps_{eps:g}_s"] = _time.perf_counter() - tr0
    timings["total_s"] = _time.perf_counter() - t0

    result = SweepResult(
        config=cfg.raw or default_sweep_config(),
        config_hash=config_hash(cfg.raw or default_sweep_config()),
        per_epsilon=per_epsilon,
        rates=estimate_rates_from_records(per_epsilon),
        incomplete=incomplete,
        timings=timings,
    )
    if cfg.out_dir is not None:
        write_summary(cfg.out_dir, result)
    if failure is not None:
        raise SweepError(f"sweep aborted at epsilon = {incomplete[0]['epsilon']}", result)
    return result


def estimate_rates(result: SweepResult) -> dict:
    return estimate_rates_from_records(result.per_epsilon)


def estimate_rates_from_records(per_epsilon: list) -> dict:
    """Pairwise empirical rates log(err_i / err_{i+1}) / log(eps_i / eps_{i+1}).

    Underflowed errors are reported as "below floor" rather than NaN.
    """
    floor = 1e-14
    rates: dict = {}
    for key in METRIC_KEYS:
        pair_rates = []
        for rec_hi, rec_lo in zip(per_epsilon, per_epsilon[1:]):
            e_hi, e_lo = rec_hi[key], rec_lo[key]
            if e_hi < floor or e_lo < floor:
                pair_rates.append("below floor")
                continue
            pair_rates.append(
                math.log(e_hi / e_lo) / math.log(rec_hi["epsilon"] / rec_lo["epsilon"])
            )
        rates[key] = pair_rates
    return rates


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_summary(out_dir: Path, result: SweepResult) -> None:
    """summary.json is deterministic; timings.json carries wall-clock data."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "config": {sec: {k: list(v) if isinstance(v, tuple) else v
                         for k, v in vals.items()}
                   for sec, vals in result.config.items()},
        "config_hash": result.config_hash,
        "per_epsilon": result.per_epsilon,
        "rates": result.rates,
        "incomplete": result.incomplete,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    (out_dir / "timings.json").write_text(json.dumps(result.timings, indent=2) + "\n")


def load_summary(out_dir: Path) -> dict:
    path = Path(out_dir) / "summary.json"
    if not path.exists():
        raise ConfigurationError(f"no sweep summary at {path}")
    return json.loads(path.read_text())
