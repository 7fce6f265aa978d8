"""Command-line entry point ``blockade-spdc``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config, validate_config
from .fock import JointPhotonDistribution, build_space, joint_distribution
from .herald import heralded_statistics, nonpair_weight
from .kerr import KerrValidityWarning, scan_detuning
from .master import SolverError, TruncationWarning, mesolve, truncation_convergence
from .reproduce import FIGURES, UnknownFigureError, reproduce
from .sweep import initial_ket, run_sweep, write_csv
from .trajectories import CHANNELS, TrajectoryError, mcsolve

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ACCEPTANCE = 0, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _config(args, need=True):
    if args.config is None:
        if need:
            raise _Fail(EXIT_CONFIG, "--config is required")
        return None
    cfg = load_config(args.config)
    issues = validate_config(cfg)
    for issue in issues:
        print(issue, file=sys.stderr)
    if any(i.level == "error" for i in issues):
        raise _Fail(EXIT_CONFIG, "configuration has errors")
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_kerr(args):
    cfg = _config(args)
    if cfg.medium is None:
        raise _Fail(EXIT_CONFIG, "the kerr command needs a medium section")
    medium = cfg.atomic_medium()
    grid = next((a.grid for a in cfg.sweep if a.parameter == "delta31"), (medium.delta31,))
    with warnings.catch_warnings():
        warnings.simplefilter("always", KerrValidityWarning)
        scan = scan_detuning(medium, grid, cfg.delta42_rule, workers=args.threads)
    rows = [[p.delta31, p.eta, p.delta, p.converged] for p in scan.points]
    path = write_csv(_out(args) / "kerr.csv", ("delta31", "eta", "delta", "converged"), rows)
    print(path)


def _params_and_space(cfg):
    eta = None
    if cfg.medium is not None:
        from .kerr import kerr
        eta = kerr(cfg.atomic_medium()).eta
    return cfg.system_params(eta=eta), build_space(*cfg.truncation)


def cmd_evolve(args):
    cfg = _config(args)
    params, space = _params_and_space(cfg)
    times = np.unique(np.concatenate([np.linspace(0, params.total_window, cfg.samples),
                                      [params.tau_p]]))
    with warnings.catch_warnings():
        warnings.simplefilter("always", TruncationWarning)
        res = mesolve(space, params, initial_ket(space, cfg.initial_state).to_density_matrix(), times)
    rows = []
    for t, rho in zip(res.times, res.states):
        P = joint_distribution(rho)
        rows.append([t, P.get(0, 0), P.get(1, 1), P.get(2, 2), P.get(3, 3),
                     nonpair_weight(P),
                     abs(np.trace(rho.data).real - 1.0)])
    path = write_csv(_out(args) / "evolve.csv",
                     ("time", "P00", "P11", "P22", "P33", "nonpair_weight", "trace_error"), rows)
    print(path)
    if args.check_truncation:
        delta = truncation_convergence(space, params)
        print(f"truncation check: max |dP| = {delta:.3e} (n_max + 2)", file=sys.stderr)
        if delta >= 1e-4:
            print("truncation check failed", file=sys.stderr)


def cmd_trajectories(args):
    cfg = _config(args)
    params, space = _params_and_space(cfg)
    stats = mcsolve(space, params, cfg.loss(params), initial_ket(space, cfg.initial_state),
                    cfg.n_traj, cfg.seed, keep_records=args.jump_log, workers=args.threads)
    out = _out(args)
    P = stats.detected_joint.probs
    rows = [[ns, ni, P[ns, ni]] for ns in range(P.shape[0]) for ni in range(P.shape[1])]
    print(write_csv(out / "detected.csv", ("n_s", "n_i", "probability"), rows))
    print(write_csv(out / "channels.csv", ("channel", "fraction"),
                    [[ch, stats.channel_fractions[ch]] for ch in CHANNELS]))
    if args.jump_log:
        log = [[k, t, ch] for k, rec in enumerate(stats.records) for t, ch in rec.jumps]
        print(write_csv(out / "jumps.csv", ("trajectory", "time", "channel"), log))


def read_distribution(path) -> JointPhotonDistribution:
    """Read a long-format CSV with columns n_s, n_i, probability."""
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"n_s", "n_i", "probability"} <= set(reader.fieldnames):
            raise ValueError("distribution CSV needs columns n_s, n_i, probability")
        for row in reader:
            entries.append((int(row["n_s"]), int(row["n_i"]), float(row["probability"])))
    if not entries:
        raise ValueError("distribution CSV is empty")
    shape = (max(e[0] for e in entries) + 1, max(e[1] for e in entries) + 1)
    P = np.zeros(shape)
    for ns, ni, p in entries:
        P[ns, ni] += p
    return JointPhotonDistribution(P)


def cmd_herald_stats(args):
    if args.input is None:
        raise _Fail(EXIT_CONFIG, "--input is required")
    try:
        P = read_distribution(args.input)
    except (OSError, ValueError) as exc:
        raise _Fail(EXIT_CONFIG, str(exc)) from exc
    text = json.dumps(heralded_statistics(P).as_dict(), indent=2)
    if args.out is not None:
        path = _out(args) / "herald_stats.json"
        path.write_text(text + "\n")
    print(text)


def cmd_sweep(args):
    cfg = _config(args)
    result = run_sweep(cfg, workers=args.threads)
    print(write_csv(_out(args) / "sweep.csv", result.columns, result.rows))
    if any(str(r[-1]).startswith("error") for r in result.rows):
        print("some grid points failed; see the status column", file=sys.stderr)


def cmd_reproduce(args):
    if args.figure is None:
        raise _Fail(EXIT_CONFIG, f"--figure is required; one of {', '.join(FIGURES)}")
    seed = 0 if args.seed is None else args.seed
    try:
        res = reproduce(args.figure, _out(args), seed=seed, workers=args.threads)
    except UnknownFigureError as exc:
        raise _Fail(EXIT_CONFIG, str(exc.args[0])) from exc
    for c in res.checks:
        print(c.line())
    for f in res.files:
        print(f)
    if not res.passed:
        raise _Fail(EXIT_ACCEPTANCE, f"{args.figure}: acceptance checks failed")


COMMANDS = {"kerr": cmd_kerr, "evolve": cmd_evolve, "trajectories": cmd_trajectories,
            "herald-stats": cmd_herald_stats, "sweep": cmd_sweep, "reproduce": cmd_reproduce}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blockade-spdc",
                                     description="Heralded SPDC source with photon blockade.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="YAML experiment configuration")
    parser.add_argument("--seed", type=int, help="override the configuration seed")
    parser.add_argument("--out", default=None, help="output directory (default: .)")
    parser.add_argument("--threads", type=int, default=1, help="worker processes")
    parser.add_argument("--input", help="joint distribution CSV for herald-stats")
    parser.add_argument("--figure", help="figure id for reproduce")
    parser.add_argument("--jump-log", action="store_true", help="write per-trajectory jumps")
    parser.add_argument("--check-truncation", action="store_true",
                        help="rerun evolve at n_max + 2 and report the change")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.out is None and args.command != "herald-stats":
        args.out = "."
    try:
        COMMANDS[args.command](args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        for issue in exc.issues:
            print(issue, file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, TrajectoryError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
