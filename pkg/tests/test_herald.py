import numpy as np
import pytest

from blockade_spdc.fock import JointPhotonDistribution
from blockade_spdc.herald import (NoHeraldError, UndefinedG2Error, analytic_nonblockade,
                                  g2_heralded, heralded_distribution, heralded_statistics,
                                  nonpair_weight, pair_yield, purity, purity_from_g2,
                                  thermal_pair_distribution, yp_product)


def dist(entries, shape=(4, 4)):
    P = np.zeros(shape)
    for (n, m), p in entries.items():
        P[n, m] = p
    return P


def test_alpha_examples():
    np.testing.assert_allclose(heralded_distribution(dist({(1, 1): 1})), [0, 1, 0, 0])
    np.testing.assert_allclose(heralded_distribution(dist({(0, 0): .5, (1, 1): .5})), [0, 1, 0, 0])
    alpha = heralded_distribution(dist({(1, 1): .6, (2, 2): .3, (0, 1): .1}))
    np.testing.assert_allclose(alpha, [0.1, 0.6, 0.3, 0.0], atol=1e-15)


def test_accepts_distribution_object():
    P = JointPhotonDistribution(dist({(1, 1): 0.7, (0, 0): 0.3}))
    assert g2_heralded(P) == 0.0


def test_no_herald_error():
    with pytest.raises(NoHeraldError):
        heralded_distribution(dist({(0, 0): 0.5, (2, 0): 0.5}))


def test_g2_examples():
    assert g2_heralded(dist({(1, 1): 1})) == 0.0
    # alpha_1 = alpha_2 = 1/2
    P = dist({(1, 1): 0.5, (2, 2): 0.5})
    assert g2_heralded(P) == pytest.approx(1 / 2.25)


def test_g2_undefined_when_heralded_signal_is_empty():
    P = dist({(0, 1): 0.4, (0, 0): 0.6})
    with pytest.raises(UndefinedG2Error):
        g2_heralded(P)
    stats = heralded_statistics(P)
    assert stats.g2 is None and stats.purity_from_g2 is None
    assert stats.as_dict()["g2"] is None


def test_thermal_g2_series_matches_asymptote():
    P = thermal_pair_distribution(0.5, 40)
    assert g2_heralded(P) == pytest.approx(2 * np.tanh(0.5) ** 2, abs=1e-3)
    assert 2 * np.tanh(0.5) ** 2 == pytest.approx(0.427, abs=1e-3)


def test_scalar_quantities():
    P = dist({(1, 1): 1})
    assert pair_yield(P) == 1 and purity(P) == 1 and yp_product(P) == 1
    assert nonpair_weight(P) == 0
    P = thermal_pair_distribution(0.5, 40)
    expected = np.tanh(0.5) ** 2 / np.cosh(0.5) ** 2
    assert pair_yield(P) == pytest.approx(expected)
    assert pair_yield(P) == pytest.approx(0.1679, abs=1e-4)


def test_purity_matches_one_minus_g2_when_pairs_dominate():
    P = dist({(0, 0): 0.2, (1, 1): 0.79, (2, 2): 0.01})
    approx = 1 - 2 * P[2, 2] / P[1, 1]
    assert abs(purity_from_g2(P) - approx) < 1e-3
    assert abs(purity_from_g2(P) - purity(P)) < 0.02


def test_purity_from_distribution_hand_value():
    # Heralded events with a signal photon: P11 + P12 + P21 = 0.9; single-photon part 0.5 + 0.2
    P = dist({(1, 1): 0.5, (1, 2): 0.2, (2, 1): 0.2, (0, 0): 0.1})
    assert purity(P) == pytest.approx(0.7 / 0.9)
    assert nonpair_weight(P) == pytest.approx(0.4)


def test_purity_from_g2_is_clamped():
    P = thermal_pair_distribution(1.2, 40)
    assert g2_heralded(P) > 1
    assert purity_from_g2(P) == 0.0 and yp_product(P) == 0.0


def test_nonpair_counts_off_diagonal_only():
    P = dist({(0, 1): 0.1, (1, 0): 0.05, (2, 1): 0.05, (1, 1): 0.8})
    assert nonpair_weight(P) == pytest.approx(0.2)


def test_analytic_examples():
    r = analytic_nonblockade(0.0, 5)
    assert r.P_nn[0] == 1 and r.Y == 0 and r.g2_asymptotic == 0 and r.yp == 0
    x = 0.7
    r = analytic_nonblockade(x, 5)
    np.testing.assert_allclose(r.P_nn, np.tanh(x) ** (2 * np.arange(6)) / np.cosh(x) ** 2)
    assert r.g2_asymptotic == pytest.approx(2 * np.tanh(x) ** 2)


def test_analytic_yield_peaks_at_one_quarter():
    xs = np.linspace(0, 3, 30001)
    Y = np.array([analytic_nonblockade(x, 1).Y for x in xs])
    assert Y.max() == pytest.approx(0.25, abs=1e-8)


def test_analytic_yp_peak_position():
    tau = np.pi / 40
    pumps = np.linspace(0, 12, 12001)
    yp = np.array([analytic_nonblockade(p * tau, 1).yp for p in pumps])
    k = yp.argmax()
    assert yp[k] == pytest.approx(np.sqrt(3) / 18, rel=1e-6)
    # Y (1 - g2) = t (1 - t)(1 - 2t) with t = tanh^2 x peaks at t = (3 - sqrt 3) / 6.
    x_star = np.arctanh(np.sqrt((3 - np.sqrt(3)) / 6))
    assert pumps[k] == pytest.approx(x_star / tau, abs=2e-3)
    assert abs(yp[k] - 0.09) <= 0.01 and abs(pumps[k] - 6.4) <= 0.5


def test_negative_squeezing_rejected():
    with pytest.raises(ValueError):
        analytic_nonblockade(-0.1)


def test_yp_bound_0p0901_on_dense_grid():
    # Stated invariant: yp_product <= 0.0901 for every thermal-pair distribution.
    # The exact supremum is sqrt(3)/18 = 0.0962, so this check is expected to fail.
    xs = np.linspace(0, 2, 4001)[1:]
    worst = max(yp_product(thermal_pair_distribution(x, 40)) for x in xs)
    assert worst <= 0.0901, f"max yp_product {worst:.6f} exceeds 0.0901"
