"""Monte-Carlo wavefunction unravelling with per-channel jump records.

Each cavity mode leaks through two channels: the output coupler ("external",
what a detector sees) and intracavity loss ("internal").  Between jumps the
unnormalized state evolves under K = H - (i/2) sum_k C_k^+ C_k; a jump fires
when its squared norm falls to a uniform random threshold drawn right after
the previous jump.  The crossing time is located with Brent's method.

Because H and K are piecewise constant (pump on, pump off) the propagator on
each piece is applied through an eigendecomposition of K computed once per
ensemble.  After the pulse K is diagonal in the Fock basis.

Trajectory ``i`` draws from ``SeedSequence(seed, spawn_key=(i,))`` so results
do not depend on how trajectories are distributed over worker processes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .fock import JointPhotonDistribution, QuantumState, TwoModeSpace, annihilation, number
from .master import SystemParams, build_effective_hamiltonian

__all__ = [
    "CHANNELS",
    "LossSplit",
    "TrajectoryRecord",
    "EnsembleStatistics",
    "TrajectoryError",
    "mcsolve",
    "trajectory_mean",
    "escape_efficiency",
]

CHANNELS = ("signal-external", "signal-internal", "idler-external", "idler-internal")

_COND_LIMIT = 1e8
_NORM_TOL = 1e-9


class TrajectoryError(RuntimeError):
    """Numerical failure inside a trajectory."""


def escape_efficiency(kappa_ex: float, kappa_in: float) -> float:
    """Fraction of intracavity photons leaving through the output coupler."""
    if kappa_ex < 0 or kappa_in < 0:
        raise ValueError("rates must be nonnegative")
    total = kappa_ex + kappa_in
    if total == 0:
        raise ValueError("kappa_ex + kappa_in must be positive")
    return kappa_ex / total


@dataclass(frozen=True)
class LossSplit:
    """External and internal decay rates of each mode."""

    signal_ex: float
    signal_in: float = 0.0
    idler_ex: float = 0.0
    idler_in: float = 0.0

    @classmethod
    def ideal(cls, params: SystemParams) -> "LossSplit":
        return cls(params.kappa_s, 0.0, params.kappa_i, 0.0)

    def rates(self) -> tuple[float, float, float, float]:
        return (self.signal_ex, self.signal_in, self.idler_ex, self.idler_in)

    def check(self, params: SystemParams, tol: float = 1e-12) -> None:
        if min(self.rates()) < 0:
            raise ValueError("loss rates must be nonnegative")
        if abs(self.signal_ex + self.signal_in - params.kappa_s) > tol * max(1.0, params.kappa_s):
            raise ValueError("signal kappa_ex + kappa_in must equal kappa_s")
        if abs(self.idler_ex + self.idler_in - params.kappa_i) > tol * max(1.0, params.kappa_i):
            raise ValueError("idler kappa_ex + kappa_in must equal kappa_i")


@dataclass(frozen=True)
class TrajectoryRecord:
    jumps: tuple[tuple[float, str], ...]
    final_state_norm: float


@dataclass(frozen=True)
class EnsembleStatistics:
    """Detector-side statistics of an ensemble.

    ``detected_joint[n, m]`` is the fraction of trajectories with ``n``
    external signal jumps and ``m`` external idler jumps.
    """

    n_traj: int
    detected_joint: JointPhotonDistribution
    channel_fractions: dict
    seed: int
    jump_counts: np.ndarray
    records: tuple[TrajectoryRecord, ...] | None = None


class _Propagator:
    """exp(-i K t) for a constant non-Hermitian generator K."""

    def __init__(self, K: np.ndarray):
        off = K - np.diag(np.diag(K))
        self.diagonal = not np.any(off)
        self.K = K
        if self.diagonal:
            self.lam = np.diag(K).copy()
            self.V = self.Vinv = None
            return
        lam, V = np.linalg.eig(K)
        if np.linalg.cond(V) > _COND_LIMIT:
            self.lam = self.V = self.Vinv = None
        else:
            self.lam, self.V, self.Vinv = lam, V, np.linalg.inv(V)

    def prepare(self, psi: np.ndarray):
        if self.diagonal:
            return psi
        if self.V is None:
            return psi
        return self.Vinv @ psi

    def evolve(self, coeffs: np.ndarray, dt: float) -> np.ndarray:
        if self.diagonal:
            return np.exp(-1j * self.lam * dt) * coeffs
        if self.V is None:
            return expm(-1j * self.K * dt) @ coeffs
        return self.V @ (np.exp(-1j * self.lam * dt) * coeffs)


@dataclass
class _Context:
    segments: list  # [(t_start, t_end, _Propagator)]
    collapse: list  # [np.ndarray] in CHANNELS order
    n_s: np.ndarray
    n_i: np.ndarray
    window: float


def _build_context(space: TwoModeSpace, params: SystemParams, loss: LossSplit) -> _Context:
    a_s = annihilation(space, "signal").matrix
    a_i = annihilation(space, "idler").matrix
    f = params.lindblad_factor
    rates = loss.rates()
    ops = [a_s, a_s, a_i, a_i]
    collapse = [np.sqrt(f * r) * op for r, op in zip(rates, ops)]
    damp = 0.5j * sum(C.conj().T @ C for C in collapse)
    tau, window = params.tau_p, params.total_window
    H_on = build_effective_hamiltonian(space, params, params.pump).matrix
    H_off = build_effective_hamiltonian(
        space, params, 0.0, eta=None if params.kerr_after_pump else 0.0).matrix
    segments = []
    if tau > 0:
        segments.append((0.0, min(tau, window), _Propagator(H_on - damp)))
    if window > tau:
        segments.append((tau, window, _Propagator(H_off - damp)))
    return _Context(segments, collapse, np.real(np.diag(number(space, "signal").matrix)),
                    np.real(np.diag(number(space, "idler").matrix)), window)


def _run_one(ctx: _Context, psi0: np.ndarray, rng: np.random.Generator,
             samples: np.ndarray | None):
    """Evolve one trajectory; returns (jumps, final_norm, sampled <n_s>, <n_i>)."""
    psi = psi0 / np.linalg.norm(psi0)
    t = 0.0
    jumps: list[tuple[float, int]] = []
    threshold = rng.random()
    n_samples = 0 if samples is None else samples.size
    means = np.zeros((n_samples, 2))
    next_sample = 0
    final_norm = 1.0

    def record(vec):
        p = np.abs(vec) ** 2
        p = p / p.sum()
        return p @ ctx.n_s, p @ ctx.n_i

    for t_start, t_end, prop in ctx.segments:
        while True:
            coeffs = prop.prepare(psi)
            # Norm is the squared norm of the current (normalized at t) state.
            end_vec = prop.evolve(coeffs, t_end - t)
            end_norm = float(np.vdot(end_vec, end_vec).real)
            if end_norm > 1.0 + _NORM_TOL:
                raise TrajectoryError(f"norm grew to {end_norm} between jumps")
            # ``threshold`` is relative to the norm at the start of the piece.
            if end_norm > threshold:
                t_jump = None
            else:
                def gap(s):
                    v = prop.evolve(coeffs, s - t)
                    return float(np.vdot(v, v).real) - threshold
                t_jump = brentq(gap, t, t_end, xtol=1e-14, rtol=1e-10)
            stop = t_end if t_jump is None else t_jump
            while next_sample < n_samples and samples[next_sample] <= stop:
                s = samples[next_sample]
                means[next_sample] = record(prop.evolve(coeffs, s - t) if s > t else psi)
                next_sample += 1
            if t_jump is None:
                threshold /= end_norm
                psi = end_vec / np.sqrt(end_norm)
                final_norm *= end_norm
                t = t_end
                break
            vec = prop.evolve(coeffs, t_jump - t)
            weights = np.array([float(np.vdot(C @ vec, C @ vec).real) for C in ctx.collapse])
            total = weights.sum()
            if not total > 0:
                raise TrajectoryError("jump with no available channel")
            k = int(np.searchsorted(np.cumsum(weights), rng.random() * total, side="right"))
            k = min(k, len(weights) - 1)
            new = ctx.collapse[k] @ vec
            psi = new / np.linalg.norm(new)
            if jumps and t_jump <= jumps[-1][0]:
                t_jump = np.nextafter(jumps[-1][0], np.inf)
            jumps.append((t_jump, k))
            t = t_jump
            threshold = rng.random()
            final_norm = 1.0
    while next_sample < n_samples:
        means[next_sample] = record(psi)
        next_sample += 1
    return jumps, final_norm, means


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _run_chunk(args):
    ctx, psi0, seed, indices, samples, keep = args
    counts = np.zeros((len(indices), 4), dtype=np.int64)
    means = None if samples is None else np.zeros((len(indices), samples.size, 2))
    records = [] if keep else None
    for row, i in enumerate(indices):
        jumps, norm, m = _run_one(ctx, psi0, _rng(seed, i), samples)
        for _time, k in jumps:
            counts[row, k] += 1
        if means is not None:
            means[row] = m
        if keep:
            records.append(TrajectoryRecord(tuple((float(tj), CHANNELS[k]) for tj, k in jumps),
                                            float(norm)))
    return counts, means, records


def _ensemble(space, params, psi0, n_traj, seed, loss, samples, keep, workers):
    if not isinstance(psi0, QuantumState) or not psi0.is_ket:
        raise ValueError("psi0 must be a ket")
    if psi0.space != space:
        raise ValueError("psi0 lives on a different space")
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    loss = LossSplit.ideal(params) if loss is None else loss
    loss.check(params)
    ctx = _build_context(space, params, loss)
    psi = np.asarray(psi0.data, dtype=complex)
    workers = max(1, int(workers or 1))
    n_chunks = min(n_traj, 4 * workers) if workers > 1 else 1
    bounds = np.linspace(0, n_traj, n_chunks + 1).astype(int)
    tasks = [(ctx, psi, seed, range(bounds[c], bounds[c + 1]), samples, keep)
             for c in range(n_chunks)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]
    counts = np.concatenate([p[0] for p in parts])
    means = None
    if samples is not None:
        # Average over the trajectory-ordered stack so the result does not
        # depend on the chunking.
        means = np.concatenate([p[1] for p in parts]).sum(axis=0) / n_traj
    records = None
    if keep:
        records = tuple(r for p in parts for r in p[2])
    return counts, means, records


def mcsolve(space: TwoModeSpace, params: SystemParams, loss_split: LossSplit | None,
            psi0: QuantumState, n_traj: int, seed: int, keep_records: bool = False,
            workers: int = 1) -> EnsembleStatistics:
    """Run ``n_traj`` trajectories and histogram external detections."""
    counts, _, records = _ensemble(space, params, psi0, n_traj, seed, loss_split,
                                   None, keep_records, workers)
    ext_s, ext_i = counts[:, 0], counts[:, 2]
    shape = (max(space.shape[0], int(ext_s.max()) + 1), max(space.shape[1], int(ext_i.max()) + 1))
    hist = np.zeros(shape)
    np.add.at(hist, (ext_s, ext_i), 1.0)
    hist /= n_traj
    totals = counts.sum(axis=0)
    n_jumps = totals.sum()
    fractions = {ch: (float(totals[k] / n_jumps) if n_jumps else 0.0)
                 for k, ch in enumerate(CHANNELS)}
    return EnsembleStatistics(n_traj=n_traj, detected_joint=JointPhotonDistribution(hist),
                              channel_fractions=fractions, seed=seed, jump_counts=counts,
                              records=records)


def trajectory_mean(space: TwoModeSpace, params: SystemParams, psi0: QuantumState,
                    n_traj: int, seed: int, sample_times: Sequence[float],
                    loss_split: LossSplit | None = None, workers: int = 1) -> np.ndarray:
    """Ensemble-averaged photon numbers.

    Returns an array with columns (time, <n_s>, <n_i>).
    """
    samples = np.asarray(sample_times, dtype=float)
    if samples.size and (np.any(np.diff(samples) < 0) or samples[0] < 0
                         or samples[-1] > params.total_window):
        raise ValueError("sample_times must be sorted and within [0, total_window]")
    _, means, _ = _ensemble(space, params, psi0, n_traj, seed, loss_split,
                            samples, False, workers)
    return np.column_stack([samples, means])
