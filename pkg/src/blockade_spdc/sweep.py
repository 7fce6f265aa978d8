"""Parameter sweeps over the effective model and CSV serialization."""

from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._parallel import ordered_map
from .config import SWEEP_WHITELIST, ConfigError, ExperimentConfig, validate_config
from .fock import JointPhotonDistribution, build_space, fock_ket, ket
from .herald import heralded_statistics
from .kerr import KerrValidityWarning, kerr
from .master import SolverError, TruncationWarning, switchoff_distribution
from .trajectories import TrajectoryError, mcsolve

__all__ = ["SweepResult", "RESULT_COLUMNS", "run_sweep", "evaluate_point",
           "format_value", "write_csv", "csv_text", "initial_ket"]

RESULT_COLUMNS = ("P11", "P22", "P33", "P00", "g2", "yield", "purity", "yp", "nonpair",
                  "solver", "seed", "purity_s35", "status")


@dataclass(frozen=True)
class SweepResult:
    columns: tuple[str, ...]
    rows: list

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([np.nan if r[k] is None else r[k] for r in self.rows], dtype=float)

    def select(self, **match) -> "SweepResult":
        idx = [self.columns.index(k) for k in match]
        keep = [r for r in self.rows if all(r[i] == v for i, v in zip(idx, match.values()))]
        return SweepResult(self.columns, keep)


def format_value(value) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def csv_text(columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(columns, rows))
    return path


def initial_ket(space, state_def):
    if state_def in (None, "vacuum"):
        return fock_ket(space, 0, 0)
    amplitudes = {(int(a[0]), int(a[1])): complex(a[2]) for a in state_def["amplitudes"]}
    return ket(space, amplitudes)


def _distribution_row(P: JointPhotonDistribution, solver: str, seed) -> list:
    stats = heralded_statistics(P)
    return [P.get(1, 1), P.get(2, 2), P.get(3, 3), P.get(0, 0), stats.g2, stats.yield_,
            stats.purity_from_g2, stats.yp_product, stats.nonpair_weight, solver, seed,
            stats.purity, "ok"]


def evaluate_point(config: ExperimentConfig, values: dict, solvers: Sequence[str]) -> list[list]:
    """Rows (one per solver) for one grid point; failures become flagged rows."""
    system_over = {k: v for k, v in values.items() if k in SWEEP_WHITELIST["system"]}
    medium_over = {k: v for k, v in values.items() if k in SWEEP_WHITELIST["medium"]}
    rule = config.delta42_rule
    if "delta31" in medium_over and "delta42" not in medium_over and rule != "fixed":
        medium_over["delta42"] = rule[1] * medium_over["delta31"]
    rows = []
    try:
        eta = None
        if config.medium is not None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", KerrValidityWarning)
                eta = kerr(config.atomic_medium(medium_over)).eta
        params = config.system_params(system_over, eta=eta)
        space = build_space(*config.truncation)
    except (ValueError, FloatingPointError) as exc:
        return [[None] * 9 + [s, config.seed, None, f"error: {exc}"] for s in solvers]
    for solver in solvers:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TruncationWarning)
                if solver == "me":
                    P = switchoff_distribution(space, params)
                else:
                    P = mcsolve(space, params, config.loss(params),
                                initial_ket(space, config.initial_state),
                                config.n_traj, config.seed).detected_joint
            rows.append(_distribution_row(P, solver, config.seed))
        except (SolverError, TrajectoryError, ValueError, FloatingPointError) as exc:
            rows.append([None] * 9 + [solver, config.seed, None, f"error: {exc}"])
    return rows


def _point_task(args):
    config, values, solvers = args
    return evaluate_point(config, values, solvers)


def run_sweep(config: ExperimentConfig, workers: int = 1) -> SweepResult:
    """Evaluate every grid point of the Cartesian product of the sweep axes.

    Rows appear in grid order (first axis slowest) whatever the worker count.
    """
    errors = [i for i in validate_config(config) if i.level == "error"]
    if errors:
        raise ConfigError(errors)
    names = [a.parameter for a in config.sweep]
    grids = [a.grid for a in config.sweep]
    points = [dict(zip(names, combo)) for combo in itertools.product(*grids)] or [{}]
    solvers = ["me", "qt"] if config.solver == "both" else [config.solver]
    results = ordered_map(_point_task, [(config, p, solvers) for p in points], workers)
    rows = []
    for values, point_rows in zip(points, results):
        for r in point_rows:
            rows.append([values[n] for n in names] + r)
    return SweepResult(tuple(names) + RESULT_COLUMNS, rows)
