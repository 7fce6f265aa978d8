"""Heralded spontaneous parametric down-conversion with photon blockade.

Submodules
----------
fock
    Truncated two-mode Fock space, operators and states.
kerr
    Doppler-averaged Kerr interaction of N-type atoms.
master
    Lindblad evolution of the pumped cavity.
trajectories
    Monte-Carlo wavefunction solver with detection records.
herald
    Heralded g2, yield and purity.
config, sweep, reproduce, cli
    Experiment configuration, sweeps, figure data and the command line.
"""

from .fock import (JointPhotonDistribution, Operator, QuantumState, SpaceMismatchError,
                   TwoModeSpace, annihilation, build_space, creation, density_matrix,
                   expectation, fock_ket, identity, joint_distribution, ket, number)
from .herald import (HeraldedStatistics, NoHeraldError, UndefinedG2Error, analytic_nonblockade,
                     g2_heralded, heralded_distribution, heralded_statistics, nonpair_weight,
                     pair_yield, purity, purity_from_g2, yp_product)
from .kerr import (AtomicMedium, KerrResult, doppler_average, kerr_type_i, kerr_type_i_approx,
                   kerr_type_ii, kerr_type_ii_approx, scan_detuning)
from .master import (EvolutionResult, PulseSchedule, SolverError, SystemParams,
                     build_collapse_operators, build_effective_hamiltonian, mesolve)
from .trajectories import (EnsembleStatistics, LossSplit, TrajectoryRecord, escape_efficiency,
                           mcsolve, trajectory_mean)

__version__ = "0.1.0"
