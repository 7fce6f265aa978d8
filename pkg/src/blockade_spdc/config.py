"""YAML experiment configuration.

Units: every rate is in units of the signal-cavity decay rate kappa_s and
every time in 1/kappa_s.  Times may be written as simple expressions of pi,
e.g. ``"pi/40"``.

Example::

    schema_version: 1
    units: kappa_s
    system:
      eta: 80
      pump: 19
      schedule: {mode: fixed, tau_p: pi/40, total_window: 6}
    sweep:
      - {parameter: pump, grid: {start: 0, stop: 25, step: 0.5}}
    solver: me
    truncation: [6, 6]
    seed: 0
"""

from __future__ import annotations

import ast
import dataclasses
import hashlib
import json
import operator
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .kerr import AtomicMedium, KerrValidityWarning
from .master import PulseSchedule, SystemParams
from .trajectories import LossSplit

__all__ = [
    "SCHEMA_VERSION",
    "SWEEP_WHITELIST",
    "ConfigError",
    "Issue",
    "SweepAxis",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "validate_config",
    "config_hash",
    "parse_number",
]

SCHEMA_VERSION = 1

SYSTEM_KEYS = {"eta", "kappa_s", "kappa_i", "pump", "detuning_residual",
               "lindblad_factor", "kerr_after_pump"}
SCHEDULE_KEYS = {"mode", "tau_p", "total_window"}
MEDIUM_KEYS = {f.name for f in dataclasses.fields(AtomicMedium)} | {"delta42_rule"}
SWEEP_WHITELIST = {
    "system": ("eta", "pump", "kappa_s", "kappa_i", "detuning_residual", "tau_p"),
    "medium": ("delta31", "delta42", "delta_c", "g4N", "ku", "omega_c", "omega_d",
               "gamma0", "gamma21"),
}


class ConfigError(ValueError):
    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


@dataclass(frozen=True)
class Issue:
    level: str  # "error" or "warning"
    message: str

    def __str__(self):
        return f"{self.level}: {self.message}"


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}


def parse_number(value) -> float:
    """Number or arithmetic string in ``pi`` (``"pi/40"``, ``"2*pi"``)."""
    if isinstance(value, bool):
        raise ValueError("boolean is not a number")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"not a number: {value!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return float(np.pi)
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {value!r}")

    try:
        return ev(ast.parse(value.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ValueError(f"unsupported expression {value!r}") from exc


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    grid: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed configuration.  ``eta`` and ``medium`` are mutually exclusive."""

    system: dict
    schedule: dict
    eta: float | None
    medium: dict | None
    sweep: tuple[SweepAxis, ...] = ()
    solver: str = "me"
    n_traj: int = 1000
    seed: int = 0
    truncation: tuple[int, int] = (6, 6)
    loss_split: dict | None = None
    initial_state: Any = "vacuum"
    samples: int = 200
    raw: dict = field(default_factory=dict, compare=False)

    def system_params(self, overrides: dict | None = None, eta: float | None = None) -> SystemParams:
        values = {**self.system, **(overrides or {})}
        sched = dict(self.schedule)
        if "tau_p" in values:
            sched["tau_p"] = values.pop("tau_p")
        if eta is not None:
            values["eta"] = eta
        elif self.eta is not None and "eta" not in values:
            values["eta"] = self.eta
        values.setdefault("eta", 0.0)
        return SystemParams(schedule=PulseSchedule(**sched), **values)

    def atomic_medium(self, overrides: dict | None = None) -> AtomicMedium | None:
        if self.medium is None:
            return None
        values = {k: v for k, v in self.medium.items() if k != "delta42_rule"}
        values.update(overrides or {})
        return AtomicMedium(**values)

    @property
    def delta42_rule(self):
        rule = (self.medium or {}).get("delta42_rule", "fixed")
        if isinstance(rule, dict) and set(rule) == {"proportional"}:
            return ("proportional", float(rule["proportional"]))
        return rule

    def loss(self, params: SystemParams) -> LossSplit | None:
        if self.loss_split is None:
            return None
        return LossSplit(**self.loss_split)


def _grid(grid_def, where: str, issues: list) -> tuple[float, ...]:
    try:
        if isinstance(grid_def, dict):
            start, stop = parse_number(grid_def["start"]), parse_number(grid_def["stop"])
            step = parse_number(grid_def["step"])
            if step <= 0:
                raise ValueError("step must be positive")
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(float(start + k * step) for k in range(max(n, 0)))
        return tuple(parse_number(v) for v in grid_def)
    except (KeyError, TypeError, ValueError) as exc:
        issues.append(Issue("error", f"{where}: bad grid ({exc})"))
        return ()


def _numeric_section(section, keys, name, issues, flags=()):
    out = {}
    if section is None:
        return out
    if not isinstance(section, dict):
        issues.append(Issue("error", f"'{name}' must be a mapping"))
        return out
    for key, value in section.items():
        if key not in keys:
            issues.append(Issue("error", f"unknown key '{name}.{key}'"))
            continue
        if key in flags or key in ("mode", "config", "delta42_rule"):
            out[key] = value
            continue
        try:
            out[key] = parse_number(value)
        except ValueError as exc:
            issues.append(Issue("error", f"'{name}.{key}': {exc}"))
    return out


def parse_config(data: dict) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a parsed YAML mapping.

    Structural problems raise :class:`ConfigError`.
    """
    issues: list[Issue] = []
    if not isinstance(data, dict):
        raise ConfigError([Issue("error", "configuration must be a mapping")])
    known = {"schema_version", "units", "system", "medium", "sweep", "solver", "n_traj",
             "seed", "truncation", "loss_split", "initial_state", "samples", "output"}
    for key in data:
        if key not in known:
            issues.append(Issue("error", f"unknown top-level key '{key}'"))
    if data.get("schema_version") != SCHEMA_VERSION:
        issues.append(Issue("error", f"schema_version must be {SCHEMA_VERSION}"))

    system_raw = dict(data.get("system") or {})
    schedule = _numeric_section(system_raw.pop("schedule", None), SCHEDULE_KEYS,
                                "system.schedule", issues)
    system = _numeric_section(system_raw, SYSTEM_KEYS, "system", issues,
                              flags=("kerr_after_pump",))
    eta = system.pop("eta", None)
    medium = data.get("medium")
    if medium is not None:
        medium = _numeric_section(medium, MEDIUM_KEYS, "medium", issues)

    axes = []
    sweep = data.get("sweep") or []
    if not isinstance(sweep, list):
        issues.append(Issue("error", "'sweep' must be a list of axes"))
        sweep = []
    for k, axis in enumerate(sweep):
        if not isinstance(axis, dict) or "parameter" not in axis or "grid" not in axis:
            issues.append(Issue("error", f"sweep[{k}] needs 'parameter' and 'grid'"))
            continue
        axes.append(SweepAxis(str(axis["parameter"]), _grid(axis["grid"], f"sweep[{k}]", issues)))

    loss = data.get("loss_split")
    if loss is not None:
        loss = _numeric_section(loss, {"signal_ex", "signal_in", "idler_ex", "idler_in"},
                                "loss_split", issues)
    trunc = data.get("truncation", [6, 6])
    try:
        trunc = (int(trunc[0]), int(trunc[1]))
    except (TypeError, ValueError, IndexError):
        issues.append(Issue("error", "truncation must be [n_max_s, n_max_i]"))
        trunc = (6, 6)
    if any(isinstance(data.get(k), bool) or not isinstance(data.get(k, 0), int)
           for k in ("n_traj", "seed", "samples")):
        issues.append(Issue("error", "n_traj, seed and samples must be integers"))
    if issues:
        raise ConfigError(issues)
    return ExperimentConfig(system=system, schedule=schedule, eta=eta, medium=medium,
                            sweep=tuple(axes), solver=str(data.get("solver", "me")),
                            n_traj=int(data.get("n_traj", 1000)), seed=int(data.get("seed", 0)),
                            truncation=trunc, loss_split=loss,
                            initial_state=data.get("initial_state", "vacuum"),
                            samples=int(data.get("samples", 200)), raw=data)


def load_config(path) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError([Issue("error", f"cannot read {path}: {exc}")]) from exc
    return parse_config(data)


def config_hash(config: ExperimentConfig | dict) -> str:
    data = config.raw if isinstance(config, ExperimentConfig) else config
    blob = json.dumps(data, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _truncation_issue(pump: float, tau: float, eta: float, n_max: int) -> Issue | None:
    # Blockade keeps the field near one pair; otherwise the ideal pair
    # distribution tanh^(2n)(x) tells how much weight sits above n_max.
    if abs(eta) >= 2 * pump:
        if n_max < 3:
            return Issue("warning", f"n_max={n_max} too small; use at least 3")
        return None
    tail = np.tanh(pump * tau) ** (2 * (n_max + 1))
    if tail > 1e-3:
        return Issue("warning", f"pump={pump:g} with n_max={n_max}: estimated weight "
                                f"{tail:.1e} beyond the truncation")
    return None


def validate_config(config: ExperimentConfig) -> list[Issue]:
    """Semantic checks; returns errors and warnings (empty when all is fine)."""
    issues: list[Issue] = []
    if config.eta is not None and config.medium is not None:
        issues.append(Issue("error", "give either system.eta or a medium section, not both"))
    if config.solver not in ("me", "qt", "both"):
        issues.append(Issue("error", f"solver must be me, qt or both, not {config.solver!r}"))
    if config.n_traj < 1:
        issues.append(Issue("error", "n_traj must be at least 1"))
    if min(config.truncation) < 1:
        issues.append(Issue("error", "truncation must be at least 1 in each mode"))
    if config.samples < 1:
        issues.append(Issue("error", "samples must be at least 1"))
    for axis in config.sweep:
        section = "medium" if axis.parameter in SWEEP_WHITELIST["medium"] else "system"
        if axis.parameter not in SWEEP_WHITELIST["system"] + SWEEP_WHITELIST["medium"]:
            issues.append(Issue("error", f"parameter '{axis.parameter}' cannot be swept"))
        elif section == "medium" and config.medium is None:
            issues.append(Issue("error", f"sweeping '{axis.parameter}' needs a medium section"))
        if not axis.grid:
            issues.append(Issue("error", f"sweep grid for '{axis.parameter}' is empty"))
    if any(i.level == "error" for i in issues):
        return issues

    try:
        params = config.system_params()
    except (TypeError, ValueError) as exc:
        return issues + [Issue("error", f"system: {exc}")]
    if config.medium is not None:
        try:
            medium = config.atomic_medium()
        except (TypeError, ValueError) as exc:
            return issues + [Issue("error", f"medium: {exc}")]
        issues.extend(Issue("warning", m) for m in medium.validity_warnings())
    if config.loss_split is not None:
        try:
            config.loss(params).check(params)
        except (TypeError, ValueError) as exc:
            issues.append(Issue("error", f"loss_split: {exc}"))

    pumps = [params.pump]
    etas = [params.eta] if config.eta is not None else []
    for axis in config.sweep:
        if axis.parameter == "pump":
            pumps = list(axis.grid)
        if axis.parameter == "eta":
            etas = list(axis.grid)
    n_max = min(config.truncation)
    eta_floor = min((abs(e) for e in etas), default=0.0)
    seen = set()
    for pump in pumps:
        try:
            tau = params.schedule.duration(pump) if pump > 0 else 0.0
        except ValueError as exc:
            issues.append(Issue("error", str(exc)))
            continue
        issue = _truncation_issue(pump, tau, eta_floor, n_max)
        if issue is not None and issue.message not in seen:
            seen.add(issue.message)
            issues.append(issue)
    return issues
