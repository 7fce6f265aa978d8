import warnings
from math import comb

import numpy as np
import pytest

from blockade_spdc import master as M
from blockade_spdc.fock import (annihilation, build_space, density_matrix, expectation, fock_ket,
                                joint_distribution, number)
from blockade_spdc.herald import analytic_nonblockade
from blockade_spdc.master import (PulseSchedule, SolverError, SystemParams, TruncationWarning,
                                  build_collapse_operators, build_effective_hamiltonian, mesolve,
                                  switchoff_distribution)

TAU = np.pi / 40


def test_hamiltonian_examples(space33):
    H = build_effective_hamiltonian(space33, SystemParams(eta=0.0), 6.0).matrix
    assert H[space33.index(1, 1), space33.index(0, 0)] == 6.0
    H = build_effective_hamiltonian(space33, SystemParams(eta=80.0), 0.0).matrix
    assert H[space33.index(2, 0), space33.index(2, 0)] == 160.0
    assert not np.any(H - np.diag(np.diag(H)))
    for n in range(4):
        assert H[space33.index(n, 1), space33.index(n, 1)] == 80.0 * n * (n - 1)


def test_hamiltonian_is_hermitian(space33):
    params = SystemParams(eta=37.0, detuning_residual=-1.5)
    H = build_effective_hamiltonian(space33, params, 12.0)
    assert H.is_hermitian()


def test_detuning_enters_linear_term(space33):
    H = build_effective_hamiltonian(space33, SystemParams(eta=5.0, detuning_residual=2.0), 0.0).matrix
    assert H[space33.index(1, 0), space33.index(1, 0)] == pytest.approx(2.0)


def test_collapse_operator_scaling(space33):
    Cs, Ci = build_collapse_operators(space33, 2.0, 3.0, lindblad_factor=2.0)
    np.testing.assert_allclose(Cs.matrix, 2.0 * annihilation(space33, "signal").matrix)
    np.testing.assert_allclose(Ci.matrix, np.sqrt(6.0) * annihilation(space33, "idler").matrix)


@pytest.mark.parametrize("factor", [1.0, 2.0])
def test_single_photon_decay(factor):
    sp = build_space(2, 1)
    params = SystemParams(kappa_s=1.0, kappa_i=1.0, lindblad_factor=factor,
                          schedule=PulseSchedule("fixed", 0.0, 6.0))
    times = np.linspace(0, 3, 13)
    res = mesolve(sp, params, density_matrix(sp, {(1, 0): 1.0}), times)
    n = [expectation(number(sp, "signal"), s).real for s in res.states]
    np.testing.assert_allclose(n, np.exp(-factor * times), rtol=1e-7, atol=1e-10)


def test_idler_conserved_without_idler_loss(space33):
    params = SystemParams(kappa_s=1.0, kappa_i=0.0, eta=3.0, schedule=PulseSchedule("fixed", 0.0, 6.0))
    rho0 = density_matrix(space33, {(2, 1): 0.5, (0, 3): 0.5})
    res = mesolve(space33, params, rho0, [0.0, 1.0, 4.0])
    for s in res.states:
        P = joint_distribution(s).probs
        np.testing.assert_allclose(P.sum(axis=0), [0, 0.5, 0, 0.5], atol=1e-9)


def test_vacuum_is_stationary(space33):
    params = SystemParams(eta=80.0, schedule=PulseSchedule("fixed", 0.0, 6.0))
    res = mesolve(space33, params, M.vacuum(space33), [0.0, 2.0, 6.0])
    for s in res.states:
        assert joint_distribution(s)[0, 0] == pytest.approx(1.0, abs=1e-12)


def cascade(P0, p_s, p_i):
    out = np.zeros_like(P0)
    for (ns, ni), w in np.ndenumerate(P0):
        for ms in range(ns + 1):
            for mi in range(ni + 1):
                out[ms, mi] += (w * comb(ns, ms) * p_s ** ms * (1 - p_s) ** (ns - ms)
                                * comb(ni, mi) * p_i ** mi * (1 - p_i) ** (ni - mi))
    return out


def test_free_decay_cascade_oracle():
    sp = build_space(2, 2)
    params = SystemParams(kappa_s=1.0, kappa_i=0.4, eta=7.0, lindblad_factor=2.0,
                          schedule=PulseSchedule("fixed", 0.0, 6.0))
    pops = {(2, 2): 0.3, (1, 2): 0.2, (2, 0): 0.1, (1, 1): 0.25, (0, 1): 0.15}
    rho0 = density_matrix(sp, pops)
    P0 = joint_distribution(rho0).probs
    times = [0.3, 1.1, 2.5]
    res = mesolve(sp, params, rho0, times)
    for t, s in zip(times, res.states):
        expected = cascade(P0, np.exp(-2 * 1.0 * t), np.exp(-2 * 0.4 * t))
        np.testing.assert_allclose(joint_distribution(s).probs, expected, atol=1e-8)


@pytest.mark.parametrize("pump", [3.0, 6.0, 9.0])
def test_lossless_pair_generation_is_squeezed_vacuum(pump):
    sp = build_space(12, 12)
    params = SystemParams(kappa_s=1e-9, kappa_i=1e-9, pump=pump)
    P = switchoff_distribution(sp, params)
    # Compare well below the cutoff, where truncation does not reach.
    ref = analytic_nonblockade(pump * TAU, 12).P_nn
    np.testing.assert_allclose(np.diag(P.probs)[:6], ref[:6], atol=1e-6)
    assert P[1, 0] < 1e-9


def test_decay_during_pulse_lowers_pair_yield():
    P = switchoff_distribution(build_space(12, 12), SystemParams(pump=6.0))
    x = 6.0 * TAU
    lossless = np.tanh(x) ** 2 / np.cosh(x) ** 2
    assert P[1, 1] == pytest.approx(0.14560318678643092, abs=1e-8)
    assert 0 < lossless - P[1, 1] < 0.011


def test_frozen_blockade_points():
    sp = build_space(6, 6)
    P80 = switchoff_distribution(sp, SystemParams(eta=80.0, pump=19.0))
    P200 = switchoff_distribution(sp, SystemParams(eta=200.0, pump=20.0))
    assert P80[1, 1] == pytest.approx(0.8195423028, abs=1e-7)
    assert P200[1, 1] == pytest.approx(0.9069102, abs=1e-6)
    assert abs(P80[1, 1] - 0.81) <= 0.03 and abs(P200[1, 1] - 0.90) <= 0.03


def test_halving_tolerance_barely_moves_yield():
    sp = build_space(6, 6)
    params = SystemParams(eta=80.0, pump=19.0)
    a = switchoff_distribution(sp, params, rtol=1e-8)[1, 1]
    b = switchoff_distribution(sp, params, rtol=5e-9, atol=5e-11)[1, 1]
    assert abs(a - b) < 1e-5


def test_pi_area_schedule():
    s = PulseSchedule("pi-area", total_window=6.0)
    assert 2 * 7.0 * s.duration(7.0) == pytest.approx(np.pi, rel=1e-15)
    assert SystemParams(pump=7.0, schedule=s).tau_p == s.duration(7.0)
    with pytest.raises(ValueError):
        s.duration(0.0)
    with pytest.raises(ValueError):
        SystemParams(pump=0.1, schedule=s)  # pulse longer than the window


def test_schedule_and_params_validation():
    with pytest.raises(ValueError):
        PulseSchedule("gaussian")
    with pytest.raises(ValueError):
        PulseSchedule("fixed", 7.0, 6.0)
    with pytest.raises(ValueError):
        SystemParams(kappa_s=-1.0)
    with pytest.raises(ValueError):
        SystemParams(pump=-1.0)


def test_samples_span_pulse_and_decay():
    sp = build_space(4, 4)
    params = SystemParams(eta=80.0, pump=19.0)
    times = np.concatenate([np.linspace(0, TAU, 5), np.linspace(0.2, 6.0, 5)])
    res = mesolve(sp, params, None, times)
    assert len(res.states) == times.size
    P_tau = joint_distribution(res.states[4]).probs
    np.testing.assert_allclose(P_tau, res.distribution_at_switchoff.probs, atol=1e-12)
    assert joint_distribution(res.states[-1])[0, 0] > 0.99


def test_kerr_after_pump_does_not_change_populations():
    sp = build_space(4, 4)
    times = [TAU, 1.0, 3.0]
    on = mesolve(sp, SystemParams(eta=80.0, pump=19.0), None, times)
    off = mesolve(sp, SystemParams(eta=80.0, pump=19.0, kerr_after_pump=False), None, times)
    for a, b in zip(on.states, off.states):
        np.testing.assert_allclose(joint_distribution(a).probs, joint_distribution(b).probs,
                                   atol=1e-8)


def test_rejects_unsorted_or_out_of_window_samples(space33):
    with pytest.raises(ValueError):
        mesolve(space33, SystemParams(), None, [1.0, 0.5])
    with pytest.raises(ValueError):
        mesolve(space33, SystemParams(), None, [7.0])


def test_truncation_warning():
    sp = build_space(2, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        with pytest.raises(TruncationWarning):
            mesolve(sp, SystemParams(pump=40.0), None, [TAU])


def test_solver_failure_raises(monkeypatch, space33):
    class Failed:
        status, success, message = -1, False, "step size too small"

    monkeypatch.setattr(M, "solve_ivp", lambda *a, **k: Failed())
    with pytest.raises(SolverError):
        mesolve(space33, SystemParams(pump=1.0), None, [TAU])


def test_truncation_convergence_diagnostic():
    sp = build_space(6, 6)
    assert M.truncation_convergence(sp, SystemParams(eta=80.0, pump=19.0)) < 1e-4
    assert M.truncation_convergence(build_space(2, 2), SystemParams(pump=12.0)) > 1e-4
