"""Experiment configuration: TOML in, validated dataclasses out, JSON mirror.

One config drives every subcommand, so reports can state exactly what ran.
Unknown keys are rejected (typos should fail loudly), missing keys take the
shipped defaults, and validation returns the full list of violations with
field-level names instead of stopping at the first.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .euler import Grid1D, InitialDataSpec, SolverConfig
from .pressure import FarField, PressureLaw

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "default_config",
    "config_from_dict",
    "load_config",
    "validate_config",
    "snapshot_schedule",
]


class ConfigError(Exception):
    """Invalid configuration; .violations lists field-level messages."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class ProfileSpec:
    half_width: float = 12.0
    spacing: float = 0.0078125
    tol: float = 1e-10


@dataclass(frozen=True)
class TimeSpec:
    t_end: float = 400.0
    t_first: float = 1.0
    n_snapshots: int = 81


@dataclass(frozen=True)
class AnalysisSpec:
    fit_t_min: float = 100.0
    fit_t_max: float = 400.0


@dataclass(frozen=True)
class RatesSpec:
    t_min: float = 10.0
    t_max: float = 1000.0
    n_samples: int = 40


@dataclass(frozen=True)
class KernelSpec:
    seed: int = 20240601
    fit_samples_log2: int = 12
    holdout_samples_log2: int = 14
    margin: float = 2.0
    fd_step: float = 0.02
    t_min: float = 4.0
    t_max: float = 400.0


@dataclass(frozen=True)
class DuhamelSpec:
    probe_times: tuple = (25.0, 50.0, 100.0)
    x_min: float = -250.0
    x_max: float = 250.0
    h: float = 0.05
    levels: int = 3
    n_time: int = 48
    y_stride: int = 4
    tau_min: float = 1.0

    def level(self, i):
        """Quadrature parameters at refinement level i (0 = baseline)."""
        return {"n_time": self.n_time * 2**i,
                "y_stride": max(self.y_stride >> i, 1),
                "tau_min": self.tau_min / 2**i}


@dataclass
class ExperimentConfig:
    law: PressureLaw = field(default_factory=PressureLaw)
    far_field: FarField = field(default_factory=lambda: FarField(1.0, 1.1))
    profile: ProfileSpec = field(default_factory=ProfileSpec)
    use_correction: bool = True
    grid: Grid1D = field(default_factory=lambda: Grid1D(-600.0, 600.0, 24000))
    solver: SolverConfig = field(default_factory=SolverConfig)
    initial_data: InitialDataSpec = field(default_factory=InitialDataSpec)
    time: TimeSpec = field(default_factory=TimeSpec)
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)
    rates: RatesSpec = field(default_factory=RatesSpec)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    duhamel: DuhamelSpec = field(default_factory=DuhamelSpec)
    out_dir: str = "out"

    def to_dict(self):
        """Nested plain-dict form; the inverse of config_from_dict."""
        return {
            "pressure": {"gamma": self.law.gamma},
            "far_field": {"v_minus": self.far_field.v_minus,
                          "v_plus": self.far_field.v_plus},
            "profile": asdict(self.profile),
            "expansion": {"use_correction": self.use_correction},
            "grid": {"x_min": self.grid.x_min, "x_max": self.grid.x_max,
                     "h": self.grid.h},
            "solver": asdict(self.solver),
            "initial_data": asdict(self.initial_data),
            "time": asdict(self.time),
            "analysis": asdict(self.analysis),
            "rates": asdict(self.rates),
            "kernel": asdict(self.kernel),
            "duhamel": {**asdict(self.duhamel),
                        "probe_times": list(self.duhamel.probe_times)},
            "output": {"dir": self.out_dir},
        }


def default_config():
    return ExperimentConfig()


def _merge(section, data, keys, violations):
    """Keep known keys, recording the unknown ones as violations."""
    out = {}
    for key, value in data.items():
        if key not in keys:
            violations.append(f"{section}.{key}: unknown key")
            continue
        out[key] = value
    return out


def _grid_from(section, data, violations):
    x_min = data.get("x_min", -600.0)
    x_max = data.get("x_max", 600.0)
    h = data.get("h", 0.05)
    if h <= 0.0:
        violations.append(f"{section}.h: must be positive")
        return None
    n = (x_max - x_min) / h
    if abs(n - round(n)) > 1e-9 * max(abs(n), 1.0):
        violations.append(f"{section}.h: does not divide the domain evenly")
        return None
    try:
        return Grid1D(float(x_min), float(x_max), int(round(n)))
    except ValueError as exc:
        violations.append(f"{section}: {exc}")
        return None


def config_from_dict(data):
    """Build an ExperimentConfig from a nested dict, or raise ConfigError."""
    violations = []
    data = dict(data)
    sections = {
        "pressure": ("gamma",),
        "far_field": ("v_minus", "v_plus"),
        "profile": ("half_width", "spacing", "tol"),
        "expansion": ("use_correction",),
        "grid": ("x_min", "x_max", "h"),
        "solver": ("cfl", "dissipation"),
        "initial_data": ("eps", "phi_center", "phi_width", "psi_center",
                         "psi_width"),
        "time": ("t_end", "t_first", "n_snapshots"),
        "analysis": ("fit_t_min", "fit_t_max"),
        "rates": ("t_min", "t_max", "n_samples"),
        "kernel": ("seed", "fit_samples_log2", "holdout_samples_log2",
                   "margin", "fd_step", "t_min", "t_max"),
        "duhamel": ("probe_times", "x_min", "x_max", "h", "levels", "n_time",
                    "y_stride", "tau_min"),
        "output": ("dir",),
    }
    clean = {}
    for name, keys in sections.items():
        raw = data.pop(name, {})
        if not isinstance(raw, dict):
            violations.append(f"{name}: must be a table")
            raw = {}
        clean[name] = _merge(name, raw, keys, violations)
    for name in data:
        violations.append(f"{name}: unknown section")

    def build(label, ctor, kwargs):
        try:
            return ctor(**kwargs)
        except (ValueError, TypeError) as exc:
            violations.append(f"{label}: {exc}")
            return None

    law = build("pressure", PressureLaw, clean["pressure"])
    # FarField has no defaults of its own; fill in the shipped end states
    ff = build("far_field", FarField,
               {"v_minus": 1.0, "v_plus": 1.1, **clean["far_field"]})
    profile = build("profile", ProfileSpec, clean["profile"])
    use_corr = clean["expansion"].get("use_correction", True)
    if not isinstance(use_corr, bool):
        violations.append("expansion.use_correction: must be a boolean")
        use_corr = True
    grid = _grid_from("grid", clean["grid"], violations)
    solver = build("solver", SolverConfig, clean["solver"])
    ic = build("initial_data", InitialDataSpec, clean["initial_data"])
    tspec = build("time", TimeSpec, clean["time"])
    aspec = build("analysis", AnalysisSpec, clean["analysis"])
    rspec = build("rates", RatesSpec, clean["rates"])
    kspec = build("kernel", KernelSpec, clean["kernel"])
    du_kwargs = dict(clean["duhamel"])
    if "probe_times" in du_kwargs:
        du_kwargs["probe_times"] = tuple(float(t) for t in du_kwargs["probe_times"])
    dspec = build("duhamel", DuhamelSpec, du_kwargs)
    out_dir = clean["output"].get("dir", "out")

    if violations:
        raise ConfigError(violations)
    cfg = ExperimentConfig(law=law, far_field=ff, profile=profile,
                           use_correction=use_corr, grid=grid, solver=solver,
                           initial_data=ic, time=tspec, analysis=aspec,
                           rates=rspec, kernel=kspec, duhamel=dspec,
                           out_dir=str(out_dir))
    more = cross_checks(cfg)
    if more:
        raise ConfigError(more)
    return cfg


def load_config(path):
    """Parse and validate a TOML file; raises ConfigError on any violation."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError([f"config file: {exc}"]) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"config file: {exc}"]) from None
    return config_from_dict(data)


def _positive(violations, label, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value)
            and value > 0):
        violations.append(f"{label}: must be positive")
        return False
    return True


def cross_checks(cfg):
    """Cross-field checks on a built config; returns a list of violations.

    Includes the boundary-safety check: disturbances travel no faster than the
    far-field sound speed, so the initial support plus the characteristic cone
    must stay inside the domain for the whole run (same check for the Duhamel
    sub-experiment and its latest probe time).
    """
    v = []
    p = cfg.profile
    if not (p.spacing <= 0.01 and p.spacing > 0):
        v.append("profile.spacing: must be in (0, 0.01]")
    if p.half_width < 6.0:
        v.append("profile.half_width: must be >= 6 to hold the tails")
    _positive(v, "profile.tol", p.tol)

    t = cfg.time
    _positive(v, "time.t_end", t.t_end)
    if not (0.0 < t.t_first < t.t_end):
        v.append("time.t_first: must be in (0, t_end)")
    if t.n_snapshots < 10:
        v.append("time.n_snapshots: need at least 10")

    a = cfg.analysis
    if not (0.0 < a.fit_t_min < a.fit_t_max <= t.t_end):
        v.append("analysis.fit window: need 0 < fit_t_min < fit_t_max <= t_end")

    r = cfg.rates
    if not (0.0 < r.t_min < r.t_max):
        v.append("rates: need 0 < t_min < t_max")
    if r.n_samples < 10:
        v.append("rates.n_samples: need at least 10")

    k = cfg.kernel
    if not (1.0 <= k.t_min < k.t_max):
        v.append("kernel: need 1 <= t_min < t_max")
    if not (1.0 < k.margin <= 4.0):
        v.append("kernel.margin: must be in (1, 4]")
    if not (0.0 < k.fd_step <= 0.1):
        v.append("kernel.fd_step: must be in (0, 0.1]")
    if not (8 <= k.fit_samples_log2 <= 20 and 8 <= k.holdout_samples_log2 <= 20):
        v.append("kernel samples: log2 sizes must be in [8, 20]")

    d = cfg.duhamel
    if d.levels < 1 or d.n_time < 16 or d.y_stride < 1:
        v.append("duhamel: need levels >= 1, n_time >= 16, y_stride >= 1")
    if not (0.0 < d.tau_min <= 2.0):
        v.append("duhamel.tau_min: must be in (0, 2]")
    if any(tp <= 4.0 * d.tau_min for tp in d.probe_times):
        v.append("duhamel.probe_times: must exceed 4*tau_min")

    c_max = float(cfg.law.sound_speed(cfg.far_field.bracket()[0]))
    support = cfg.initial_data.support_radius()

    def cone_check(label, x_min, x_max, horizon):
        if not (x_min < 0.0 < x_max):
            v.append(f"{label}: domain must contain 0")
            return
        reach = c_max * horizon + support
        room = min(-x_min, x_max)
        if reach >= room:
            v.append(f"{label}: boundary-safety violation, characteristic "
                     f"reach {reach:.3g} exceeds domain half-width {room:.3g}")

    cone_check("grid", cfg.grid.x_min, cfg.grid.x_max, t.t_end)
    if d.probe_times:
        cone_check("duhamel", d.x_min, d.x_max, max(d.probe_times))
    n_d = (d.x_max - d.x_min) / d.h if d.h > 0 else -1.0
    if not (d.h > 0 and abs(n_d - round(n_d)) < 1e-9 * max(n_d, 1.0)):
        v.append("duhamel.h: does not divide the domain evenly")
    elif int(round(n_d)) % 4 != 0:
        v.append("duhamel grid: node count must be divisible by 4 for strided "
                 "Simpson panels")
    if cfg.grid.n_cells % 4 != 0:
        v.append("grid: node count must be divisible by 4 for strided Simpson "
                 "panels")
    return v


def validate_config(path):
    """Validation entry point for a path: list of violations, never raises."""
    try:
        load_config(path)
    except ConfigError as exc:
        return exc.violations
    return []


def snapshot_schedule(cfg):
    """Times stored by the main simulation: t=0 plus a log-spaced ladder."""
    times = np.geomspace(cfg.time.t_first, cfg.time.t_end, cfg.time.n_snapshots)
    times = np.concatenate([[0.0], times])
    return np.unique(np.round(times, 9))
