"""Truncated two-mode Fock space: basis, ladder operators, states.

Basis vectors |n_s, n_i> are ordered lexicographically by (n_s, n_i), so the
diagonal of a density matrix reshapes directly into the joint photon-number
distribution ``P[n_s, n_i]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

Mode = Literal["signal", "idler"]

__all__ = [
    "TwoModeSpace",
    "Operator",
    "QuantumState",
    "JointPhotonDistribution",
    "SpaceMismatchError",
    "build_space",
    "annihilation",
    "creation",
    "number",
    "identity",
    "fock_ket",
    "ket",
    "density_matrix",
    "expectation",
    "joint_distribution",
]


class SpaceMismatchError(ValueError):
    """Raised when operands live on different truncated spaces."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TwoModeSpace:
    """Signal (x) idler Fock space truncated at ``n_max_s`` and ``n_max_i``."""

    n_max_s: int
    n_max_i: int

    def __post_init__(self):
        for name in ("n_max_s", "n_max_i"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def dim(self) -> int:
        return (self.n_max_s + 1) * (self.n_max_i + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_max_s + 1, self.n_max_i + 1)

    def index(self, n_s: int, n_i: int) -> int:
        if not (0 <= n_s <= self.n_max_s and 0 <= n_i <= self.n_max_i):
            raise IndexError(f"|{n_s},{n_i}> outside truncation {self.shape}")
        return n_s * (self.n_max_i + 1) + n_i

    def labels(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.dim:
            raise IndexError(index)
        return divmod(index, self.n_max_i + 1)


def build_space(n_max_s: int, n_max_i: int) -> TwoModeSpace:
    return TwoModeSpace(n_max_s, n_max_i)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex operator bound to a :class:`TwoModeSpace`."""

    space: TwoModeSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match dim {self.space.dim}")
        object.__setattr__(self, "matrix", m)

    def _check(self, other: "Operator") -> None:
        if other.space != self.space:
            raise SpaceMismatchError(f"{self.space} vs {other.space}")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return Operator(self.space, scalar * self.matrix)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        if isinstance(other, QuantumState):
            if other.space != self.space:
                raise SpaceMismatchError(f"{self.space} vs {other.space}")
            if other.is_ket:
                return QuantumState(self.space, self.matrix @ other.data)
            raise TypeError("apply operators to density matrices via expectation or conjugation")
        return NotImplemented

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def commutator(self, other: "Operator") -> "Operator":
        return self @ other - other @ self

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.matrix))))
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= rtol * scale)


def _ladder(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)


def annihilation(space: TwoModeSpace, mode: Mode) -> Operator:
    """Lowering operator for ``mode`` with <n-1|a|n> = sqrt(n)."""
    if mode == "signal":
        m = np.kron(_ladder(space.n_max_s), np.eye(space.n_max_i + 1))
    elif mode == "idler":
        m = np.kron(np.eye(space.n_max_s + 1), _ladder(space.n_max_i))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return Operator(space, m)


def creation(space: TwoModeSpace, mode: Mode) -> Operator:
    return annihilation(space, mode).dag()


def number(space: TwoModeSpace, mode: Mode) -> Operator:
    """a^+ a, built directly as an exact integer diagonal."""
    if mode not in ("signal", "idler"):
        raise ValueError(f"unknown mode {mode!r}")
    k = 0 if mode == "signal" else 1
    labels = [space.labels(j)[k] for j in range(space.dim)]
    return Operator(space, np.diag(np.array(labels, dtype=float)))


def identity(space: TwoModeSpace) -> Operator:
    return Operator(space, np.eye(space.dim))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """A ket (1-d data) or a density matrix (2-d data) on ``space``."""

    space: TwoModeSpace
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = _frozen(self.data)
        if d.shape not in ((self.space.dim,), (self.space.dim, self.space.dim)):
            raise ValueError(f"state shape {d.shape} incompatible with dim {self.space.dim}")
        object.__setattr__(self, "data", d)

    @property
    def kind(self) -> str:
        return "ket" if self.data.ndim == 1 else "density-matrix"

    @property
    def is_ket(self) -> bool:
        return self.data.ndim == 1

    def norm(self) -> float:
        if self.is_ket:
            return float(np.linalg.norm(self.data))
        return float(np.real(np.trace(self.data)))

    def normalized(self) -> "QuantumState":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize a zero state")
        return QuantumState(self.space, self.data / n)

    def to_density_matrix(self) -> "QuantumState":
        if not self.is_ket:
            return self
        return QuantumState(self.space, np.outer(self.data, self.data.conj()))

    def validate(self, trace_tol: float = 1e-8, herm_tol: float = 1e-10,
                 eig_tol: float = 1e-8) -> None:
        """Raise ``ValueError`` unless the state is physical within tolerances."""
        if self.is_ket:
            if abs(self.norm() - 1.0) > 1e-10:
                raise ValueError(f"ket norm {self.norm()!r} differs from 1")
            return
        rho = self.data
        if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > trace_tol:
            raise ValueError(f"trace {np.trace(rho).real!r} differs from 1")
        lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        if lam.min() < -eig_tol:
            raise ValueError(f"negative eigenvalue {lam.min()!r}")


def fock_ket(space: TwoModeSpace, n_s: int, n_i: int) -> QuantumState:
    v = np.zeros(space.dim, dtype=complex)
    v[space.index(n_s, n_i)] = 1.0
    return QuantumState(space, v)


def ket(space: TwoModeSpace, amplitudes: dict[tuple[int, int], complex],
        normalize: bool = True) -> QuantumState:
    """Superposition ``sum c |n_s, n_i>`` from a label -> amplitude mapping."""
    v = np.zeros(space.dim, dtype=complex)
    for (n_s, n_i), c in amplitudes.items():
        v[space.index(n_s, n_i)] += c
    state = QuantumState(space, v)
    return state.normalized() if normalize else state


def density_matrix(space: TwoModeSpace, populations: dict[tuple[int, int], float]) -> QuantumState:
    """Diagonal (classical mixture) density matrix."""
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    for (n_s, n_i), p in populations.items():
        k = space.index(n_s, n_i)
        rho[k, k] += p
    return QuantumState(space, rho)


def expectation(op: Operator, state: QuantumState) -> complex:
    """<psi|O|psi> for kets, Tr(rho O) for density matrices."""
    if op.space != state.space:
        raise SpaceMismatchError(f"{op.space} vs {state.space}")
    if state.is_ket:
        return complex(np.vdot(state.data, op.matrix @ state.data))
    return complex(np.einsum("ij,ji->", op.matrix, state.data))


@dataclass(frozen=True, eq=False)
class JointPhotonDistribution:
    """Joint photon-number probabilities ``probs[n_s, n_i]``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float, copy=True)
        if p.ndim != 2:
            raise ValueError("probs must be a 2-d array")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __getitem__(self, key):
        return self.probs[key]

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    def get(self, n_s: int, n_i: int) -> float:
        if n_s < self.probs.shape[0] and n_i < self.probs.shape[1]:
            return float(self.probs[n_s, n_i])
        return 0.0

    def total(self) -> float:
        return float(self.probs.sum())

    def validate(self, neg_tol: float = 1e-10, sum_tol: float = 1e-8) -> None:
        if self.probs.min() < -neg_tol or self.probs.max() > 1 + neg_tol:
            raise ValueError("probabilities outside [0, 1]")
        if abs(self.total() - 1.0) > sum_tol:
            raise ValueError(f"probabilities sum to {self.total()!r}")


def joint_distribution(state: QuantumState) -> JointPhotonDistribution:
    if state.is_ket:
        diag = np.abs(state.data) ** 2
    else:
        diag = np.real(np.diagonal(state.data))
    return JointPhotonDistribution(diag.reshape(state.space.shape))
