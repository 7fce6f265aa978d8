"""Regenerate the data behind each published figure, with a manifest.

Every figure writes ``<id>.csv`` and ``<id>.json``.  The manifest records a
hash of the experiment description, the seed, the numerical tolerances and
the pass/fail status of the acceptance checks attached to the figure.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance as acc
from .herald import analytic_nonblockade, heralded_statistics
from .sweep import write_csv

__all__ = ["FIGURES", "ReproduceResult", "reproduce", "UnknownFigureError"]

TOLERANCES = {"me_rtol": 1e-8, "me_atol": 1e-10, "kerr_rtol": 1e-6,
              "jump_time_rtol": 1e-10}


class UnknownFigureError(KeyError):
    pass


@dataclass
class ReproduceResult:
    figure: str
    files: list
    checks: list
    manifest: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _pick(checks, *needles):
    return [c for c in checks if any(n in c.name for n in needles)]


def _g2(P):
    s = heralded_statistics(P)
    return s.g2, s.purity_from_g2


def _pump_rows(etas, mode="fixed", grid=acc.PUMP_GRID, workers=1, fields=("P11",)):
    rows = []
    for eta in etas:
        dists = acc.me_scan(float(eta), tuple(grid), mode=mode, workers=workers)
        for p, P in zip(grid, dists):
            g2, pg = _g2(P)
            values = {"P00": P[0, 0], "P11": P[1, 1], "P22": P[2, 2], "P33": P[3, 3],
                      "g2": g2, "purity": pg}
            rows.append([float(eta), float(p)] + [values[f] for f in fields])
    return rows


def _fig2a(seed, workers):
    rows = _pump_rows((0.0, 80.0, 200.0), workers=workers, fields=("P11", "g2"))
    checks = (_pick(acc.criterion_3(workers), "max P11", "pump at max P11")
              + _pick(acc.criterion_4(workers), "eta=80"))
    return ("eta", "pump", "P11", "g2"), rows, checks, {"etas": [0, 80, 200]}


def _fig2b(seed, workers):
    rows = _pump_rows((0.0, 80.0, 200.0), workers=workers, fields=("P00", "P11", "P22", "P33"))
    checks = _pick(acc.criterion_4(workers), "eta=200 pump=20 P11")
    return ("eta", "pump", "P00", "P11", "P22", "P33"), rows, checks, {"etas": [0, 80, 200]}


def _fig3a(seed, workers):
    etas = (0.0, 5.0, 80.0, 200.0, 500.0)
    rows = _pump_rows(etas, workers=workers, fields=("P11",))
    checks = _pick(acc.criterion_4(workers), "P11")
    return ("eta", "pump", "P11"), rows, checks, {"etas": list(etas)}


def _fig3b(seed, workers):
    etas = (0.0, 5.0, 80.0, 200.0, 500.0)
    rows = _pump_rows(etas, workers=workers, fields=("g2", "purity"))
    checks = _pick(acc.criterion_4(workers), "g2")
    return ("eta", "pump", "g2", "purity"), rows, checks, {"etas": list(etas)}


def _fig4(seed, workers):
    rows = _pump_rows((80.0, 500.0), mode="pi-area", grid=acc.PI_PUMP_GRID, workers=workers,
                      fields=("P00", "P11", "P22", "g2", "purity"))
    checks = _pick(acc.criterion_5(workers), "pi-area")
    return (("eta", "pump", "P00", "P11", "P22", "g2", "purity"), rows, checks,
            {"mode": "pi-area", "etas": [80, 500]})


def _sm_pipulse(seed, workers):
    t, area, p00, p11 = acc.rabi_trace()
    rows = [[float(a), float(b), float(c), float(d)] for a, b, c, d in zip(t, area, p00, p11)]
    checks = _pick(acc.criterion_5(workers), "Rabi")
    return ("time", "pulse_area", "P00", "P11"), rows, checks, {"eta": 200, "pump": 15}


def _sm_nonblockade(seed, workers):
    dists = acc.me_scan(0.0, acc.NB_GRID, workers=workers)
    rows = []
    for p, P in zip(acc.NB_GRID, dists):
        an = analytic_nonblockade(p * acc.TAU_FIXED, 3)
        g2, pg = _g2(P)
        yp = None if pg is None else P[1, 1] * pg
        rows.append([float(p)] + [P[n, n] for n in range(4)] + list(an.P_nn[:4])
                    + [g2, an.g2_asymptotic, yp, an.yp])
    cols = ("pump", "P00", "P11", "P22", "P33", "P00_analytic", "P11_analytic",
            "P22_analytic", "P33_analytic", "g2", "g2_analytic", "yp", "yp_analytic")
    checks = acc.criterion_1(workers) + acc.criterion_2(workers) + acc.criterion_3(workers)
    return cols, rows, checks, {"eta": 0, "n_max": acc.N_FREE}


def _kerr_rows(config, g4Ns, workers):
    rows = []
    for g4N in g4Ns:
        for p in acc.kerr_scan(config, g4N, workers).points:
            rows.append([g4N, p.delta31, p.eta, p.delta, p.converged])
    return rows


def _sm_kerr_scan_i(seed, workers):
    g4Ns = (0.92e3, 2.3e3, 5.7e3)
    checks = _pick(acc.criterion_9(workers), "type-I")
    return (("g4N", "delta31", "eta", "delta", "converged"), _kerr_rows("type-I", g4Ns, workers),
            checks, {"config": "type-I", "g4N": list(g4Ns), "ku": acc.TYPE_I_BASE.ku})


def _sm_kerr_scan_ii(seed, workers):
    checks = _pick(acc.criterion_9(workers), "type-II")
    return (("g4N", "delta31", "eta", "delta", "converged"), _kerr_rows("type-II", (1.3e3,), workers),
            checks, {"config": "type-II", "g4N": [1.3e3], "ku": acc.TYPE_II_BASE.ku})


def _sm_qt_single(seed, workers):
    lossy, equal = acc.qt_single_mode(seed=seed, workers=workers)
    rows = [["lossy_fock2", ch, v] for ch, v in lossy.channel_fractions.items()]
    rows += [["equal_superposition", f"detected_{n}", equal.detected_joint[n, 0]] for n in range(4)]
    checks = _pick(acc.criterion_6(workers, seed=seed), "C6a", "single-mode")
    return ("experiment", "quantity", "value"), rows, checks, {"n_traj": acc.N_TRAJ}


def _sm_qt_dual(seed, workers):
    dual = acc.qt_dual_mode(seed=seed + 1, workers=workers)
    qt, me = acc.qt_spdc(seed=seed + 2, workers=workers)
    rows = [["equal_superposition", f"detected_{n}_{n}", "qt", dual.detected_joint[n, n]]
            for n in range(4)]
    for n in range(3):
        rows.append(["spdc_eta80_pump18", f"P{n}{n}", "qt", qt.detected_joint[n, n]])
        rows.append(["spdc_eta80_pump18", f"P{n}{n}", "me", me[n, n]])
    checks = _pick(acc.criterion_6(workers, seed=seed), "dual-mode", "C6c")
    return ("experiment", "quantity", "solver", "value"), rows, checks, {"n_traj": acc.N_TRAJ}


def _sm_nonpair(seed, workers):
    dists = acc.me_scan(80.0, acc.PUMP_GRID, workers=workers)
    rows = []
    for p, P in zip(acc.PUMP_GRID, dists):
        s = heralded_statistics(P)
        rows.append([float(p), s.nonpair_weight, P[1, 0] + P[0, 1]])
    checks = acc.criterion_7(workers)
    return ("pump", "nonpair", "P10_plus_P01"), rows, checks, {"eta": 80}


def _sm_cavity_decay(seed, workers):
    rows = []
    for k in (1.0, 5.0, 10.0):
        P, s = acc.cavity_decay_point(k)
        rows.append([k, P[1, 1], s.purity_from_g2, s.g2])
    checks = acc.criterion_8(workers)
    return (("kappa_over_gamma0", "yield", "purity", "g2"), rows, checks,
            {"kappa_over_gamma0": [1, 5, 10], "eta_over_kappa": 80, "pump_over_gamma0": 19})


FIGURES = {
    "fig2a": _fig2a, "fig2b": _fig2b, "fig3a": _fig3a, "fig3b": _fig3b, "fig4": _fig4,
    "sm_nonblockade": _sm_nonblockade, "sm_kerr_scan_i": _sm_kerr_scan_i,
    "sm_kerr_scan_ii": _sm_kerr_scan_ii, "sm_qt_single": _sm_qt_single,
    "sm_qt_dual": _sm_qt_dual, "sm_nonpair": _sm_nonpair,
    "sm_cavity_decay": _sm_cavity_decay, "sm_pipulse": _sm_pipulse,
}


def reproduce(figure_id: str, out_dir=".", seed: int = 0, workers: int = 1) -> ReproduceResult:
    """Write ``<figure_id>.csv`` and ``<figure_id>.json`` into ``out_dir``."""
    if figure_id not in FIGURES:
        raise UnknownFigureError(f"unknown figure id {figure_id!r}; known: {sorted(FIGURES)}")
    columns, rows, checks, description = FIGURES[figure_id](seed, workers)
    out = Path(out_dir)
    csv_path = write_csv(out / f"{figure_id}.csv", columns, rows)
    description = {"figure": figure_id, "seed": seed, **description}
    digest = hashlib.sha256(json.dumps(description, sort_keys=True).encode()).hexdigest()
    manifest = {
        "figure": figure_id,
        "config_hash": digest,
        "description": description,
        "seed": seed,
        "tolerances": TOLERANCES,
        "checks": [c.as_dict() for c in checks],
        "passed": all(c.passed for c in checks),
        "files": [csv_path.name],
    }
    json_path = out / f"{figure_id}.json"
    json_path.write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return ReproduceResult(figure_id, [csv_path, json_path], checks, manifest)


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError(type(value))
