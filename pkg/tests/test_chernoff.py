import numpy as np
import numpy.testing as npt
import pytest

from conftest import make_scenario
from doabounds.chernoff import (
    ApproximationReport,
    HypothesisPair,
    alpha_g,
    alpha_g_averaged,
    evaluate_pair,
    in_delta_region,
    mu_ddot_half_exact,
    mu_half_exact,
    p_large,
    p_large_averaged,
    pair_error_probability,
    p_small,
    validate_approximation,
)
from doabounds.errors import DimensionMismatch
from doabounds.fisher import fisher_matrix
from doabounds.numerics import logdet_hpd
from doabounds.radar import AmplitudeDraw, ArrayGeometry, Scenario
from oracles import q_by_quadrature


def scalar_scenario(w_target=2.0, snapshots=1):
    """1x1 arrays with W = (M ||B||^2 / sigma_n^2) Sigma equal to w_target."""
    return Scenario(
        rx_geometry=ArrayGeometry.half_wavelength_ula(1),
        tx_geometry=ArrayGeometry.half_wavelength_ula(1),
        num_targets=1, snapshots=snapshots, noise_power=1.0,
        tx_covariance=np.array([[2.0 * w_target]], dtype=complex),
        amplitude_second_moment=0.5, prior_support=(-1.0, 1.0))


def mu_s_oracle(s, r0, r1, snapshots):
    """Chernoff exponent at arbitrary s via explicit inverses."""
    i0 = np.linalg.inv(r0)
    i1 = np.linalg.inv(r1)
    ld0 = np.linalg.slogdet(r0)[1]
    ld1 = np.linalg.slogdet(r1)[1]
    mid = np.linalg.slogdet((1 - s) * i0 + s * i1)[1]
    return snapshots * (-(1 - s) * ld0 - s * ld1 - mid)


# --------------------------------------------------------- HypothesisPair

def test_pair_validation():
    p = HypothesisPair(np.array([0.1]), np.array([0.2]))
    npt.assert_allclose(p.phi_plus_delta, [0.3])
    with pytest.raises(ValueError):
        HypothesisPair(np.array([1.5]), np.array([0.2]))  # phi+delta > pi/2
    with pytest.raises(DimensionMismatch):
        HypothesisPair(np.array([0.1, 0.2]), np.array([0.1]))


# ------------------------------------------------------------ exact mu

def test_mu_zero_at_zero_separation():
    rng = np.random.default_rng(31)
    sc = make_scenario(rng, num_targets=2)
    phi = np.array([-0.4, 0.3])
    pair = HypothesisPair(phi, np.zeros(2))
    assert mu_half_exact(pair, sc) == 0.0
    assert mu_ddot_half_exact(pair, sc) == 0.0


def test_mu_signs_over_500_draws():
    rng = np.random.default_rng(32)
    for _ in range(500):
        k = int(rng.integers(1, 4))
        sc = make_scenario(rng, num_rx=int(rng.integers(2, 6)),
                           num_tx=int(rng.integers(1, 4)), num_targets=k,
                           snr=float(rng.uniform(0.05, 5.0)))
        lo, hi = sc.prior_support
        phi = rng.uniform(lo, hi, size=k)
        psi = rng.uniform(lo, hi, size=k)
        b = (AmplitudeDraw.sample(rng, k, sc.amplitude_second_moment)
             if rng.uniform() < 0.5 else None)
        pair = HypothesisPair(phi, psi - phi)
        assert mu_half_exact(pair, sc, b) <= 1e-12
        assert mu_ddot_half_exact(pair, sc, b) >= 0.0


def test_mu_symmetric_in_hypothesis_order():
    rng = np.random.default_rng(33)
    sc = make_scenario(rng, num_targets=1, snr=2.0)
    fwd = HypothesisPair(np.array([-0.3]), np.array([0.5]))
    rev = HypothesisPair(np.array([0.2]), np.array([-0.5]))
    npt.assert_allclose(mu_half_exact(fwd, sc), mu_half_exact(rev, sc),
                        rtol=1e-12)
    npt.assert_allclose(mu_ddot_half_exact(fwd, sc),
                        mu_ddot_half_exact(rev, sc), rtol=1e-12)


def test_mu_against_monte_carlo_bhattacharyya():
    # per-snapshot Bhattacharyya coefficient E_{f0}[ sqrt(f1/f0) ]
    rng = np.random.default_rng(34)
    sc = make_scenario(rng, num_rx=3, num_tx=2, num_targets=1, snr=1.0,
                       snapshots=5)
    pair = HypothesisPair(np.array([0.1]), np.array([0.06]))
    from doabounds.radar import mean_snapshot_covariance
    r0 = mean_snapshot_covariance(pair.phi, sc).matrix
    r1 = mean_snapshot_covariance(pair.phi_plus_delta, sc).matrix
    n = 200000
    m = 3
    w = (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) \
        / np.sqrt(2.0)
    x = w @ np.linalg.cholesky(r0).T
    diff = np.linalg.inv(r1) - np.linalg.inv(r0)
    quad = np.einsum("ni,ij,nj->n", x.conj(), diff, x).real
    llr = np.linalg.slogdet(r0)[1] - np.linalg.slogdet(r1)[1] - quad
    vals = np.exp(0.5 * llr)
    est, se = vals.mean(), vals.std(ddof=1) / np.sqrt(n)
    per_snapshot = np.exp(mu_half_exact(pair, sc) / sc.snapshots)
    assert abs(per_snapshot - est) < 3.5 * se + 1e-12


def test_mu_half_matches_general_s_oracle():
    rng = np.random.default_rng(35)
    sc = make_scenario(rng, num_rx=4, num_tx=3, num_targets=2, snr=1.5,
                       snapshots=7)
    pair = HypothesisPair(np.array([-0.2, 0.4]), np.array([0.15, -0.1]))
    from doabounds.radar import mean_snapshot_covariance
    r0 = mean_snapshot_covariance(pair.phi, sc).matrix
    r1 = mean_snapshot_covariance(pair.phi_plus_delta, sc).matrix
    npt.assert_allclose(mu_half_exact(pair, sc),
                        mu_s_oracle(0.5, r0, r1, sc.snapshots), rtol=1e-10)


def test_mu_ddot_against_finite_difference_in_s():
    rng = np.random.default_rng(36)
    for _ in range(10):
        k = int(rng.integers(1, 3))
        sc = make_scenario(rng, num_rx=4, num_tx=2, num_targets=k,
                           snr=float(rng.uniform(0.2, 3.0)), snapshots=9)
        lo, hi = sc.prior_support
        phi = rng.uniform(lo, hi, size=k)
        psi = rng.uniform(lo, hi, size=k)
        pair = HypothesisPair(phi, psi - phi)
        from doabounds.radar import mean_snapshot_covariance
        r0 = mean_snapshot_covariance(pair.phi, sc).matrix
        r1 = mean_snapshot_covariance(pair.phi_plus_delta, sc).matrix
        h = 1e-4
        fd = (mu_s_oracle(0.5 + h, r0, r1, sc.snapshots)
              - 2 * mu_s_oracle(0.5, r0, r1, sc.snapshots)
              + mu_s_oracle(0.5 - h, r0, r1, sc.snapshots)) / h**2
        got = mu_ddot_half_exact(pair, sc)
        npt.assert_allclose(got, fd, rtol=1e-5, atol=1e-8)


# -------------------------------------------------------------- alpha_G

def test_alpha_matches_eigenvalue_form():
    rng = np.random.default_rng(37)
    for _ in range(50):
        sc = make_scenario(rng, num_tx=int(rng.integers(1, 8)),
                           snr=float(rng.uniform(0.01, 50.0)),
                           snapshots=int(rng.integers(1, 60)))
        w = (sc.num_rx / sc.noise_power) \
            * sc.num_targets * sc.amplitude_second_moment * sc.tx_covariance
        p = np.linalg.eigvalsh(0.5 * w)
        ref = 8.0 * sc.snapshots * np.sum(p**2 / (1 + p) ** 2)
        npt.assert_allclose(alpha_g(sc), ref, rtol=1e-10)


def test_alpha_scalar_exact_value():
    # W = 2, L = 1: p = 1 and alpha = 8 * 1/4 = 2 exactly
    sc = scalar_scenario(w_target=2.0, snapshots=1)
    assert alpha_g(sc) == pytest.approx(2.0, abs=1e-12)


def test_alpha_positive_and_increasing_in_snr():
    sc = make_scenario(num_rx=8, num_tx=4, identity_tx=True, snapshots=40)
    vals = [alpha_g(sc.at_snr(s)) for s in (0.01, 0.1, 1.0, 10.0)]
    assert all(v > 0 for v in vals)
    assert vals == sorted(vals)


# -------------------------------------------------------------- p_large

def test_p_large_scalar_spot_value():
    # W = 2: P_L = (3/4) e^{1/4} Q(sqrt(2)/2), approximately 0.2309
    sc = scalar_scenario(w_target=2.0, snapshots=1)
    ref = 0.75 * np.exp(0.25) * q_by_quadrature(np.sqrt(2.0) / 2.0)
    npt.assert_allclose(p_large(sc), ref, rtol=1e-10)
    npt.assert_allclose(p_large(sc), 0.2309, atol=5e-5)


def test_p_large_range_and_monotonicity():
    sc = make_scenario(num_rx=8, num_tx=4, identity_tx=True, snapshots=40)
    snrs = np.logspace(-6, 1, 15)
    vals = [p_large(sc.at_snr(s)) for s in snrs]
    for v in vals:
        assert 0.0 < v <= 0.5
    for a, b in zip(vals, vals[1:]):
        assert b <= a + 1e-15


def test_p_large_zero_snr_limit():
    sc = make_scenario(num_rx=8, num_tx=4, identity_tx=True, snapshots=40)
    assert abs(p_large(sc.at_snr(1e-8)) - 0.5) <= 1e-6


def test_p_large_no_overflow_at_high_snr():
    # N = 32 at +30 dB: determinant ratio alone is e^{-10^4}-scale
    sc = make_scenario(num_rx=20, num_tx=32, identity_tx=True, snapshots=40)
    v = p_large(sc.at_snr(1000.0))
    assert np.isfinite(v)
    assert 0.0 <= v < 1e-100


def test_averaged_variants_run_and_bracket_plugin():
    sc = make_scenario(num_rx=6, num_tx=3, identity_tx=True,
                       snapshots=10, num_targets=2).at_snr(0.5)
    pl_avg = p_large_averaged(sc, draws=300, seed=2)
    al_avg = alpha_g_averaged(sc, draws=300, seed=2)
    assert 0.0 < pl_avg <= 0.5
    assert al_avg > 0.0
    # with many targets ||B||_F^2 concentrates, so averaged -> plug-in,
    # but only where |ln p_large| is O(1): the exponent amplifies the
    # residual fluctuations multiplicatively at higher SNR
    sc_many = make_scenario(num_rx=6, num_tx=3, identity_tx=True,
                            snapshots=10, num_targets=64).at_snr(0.001)
    npt.assert_allclose(p_large_averaged(sc_many, draws=400, seed=3),
                        p_large(sc_many), rtol=0.02)


# ---------------------------------------------------- p_small and region

def test_p_small_values():
    j = np.array([[4.0]])
    npt.assert_allclose(p_small(np.array([1.0]), j),
                        q_by_quadrature(1.0), rtol=1e-10)
    npt.assert_allclose(p_small(np.zeros(1), j), 0.5, rtol=1e-15)
    assert 0.0 < p_small(np.array([5.0]), j) < 0.5


def test_p_small_accepts_fisher_matrix_object():
    sc = make_scenario(identity_tx=True)
    fim = fisher_matrix(np.array([0.2]), sc)
    delta = np.array([0.01])
    ref = q_by_quadrature(0.5 * np.sqrt(float(delta @ fim.entries @ delta)))
    npt.assert_allclose(p_small(delta, fim), ref, rtol=1e-8)


def test_delta_region_boundary_inclusive():
    j = np.array([[4.0]])
    alpha = 4.0
    assert in_delta_region(np.array([1.0]), j, alpha)  # 4 <= 4
    assert not in_delta_region(np.array([1.0 + 1e-9]), j, alpha)
    assert in_delta_region(np.zeros(1), j, 0.0)


def test_p_small_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        p_small(np.array([0.1, 0.2]), np.eye(3))


# ------------------------------------------------- pair error probability

def test_pair_error_probability_range_and_zero_sep():
    rng = np.random.default_rng(38)
    sc = make_scenario(rng, num_targets=1, snr=1.0)
    at_zero = pair_error_probability(
        HypothesisPair(np.array([0.1]), np.zeros(1)), sc)
    npt.assert_allclose(at_zero, 0.5, rtol=1e-14)
    for d in (0.01, 0.1, 0.5):
        v = pair_error_probability(
            HypothesisPair(np.array([0.1]), np.array([d])), sc)
        assert 0.0 < v <= 0.5


def test_evaluate_pair_bundles_components():
    rng = np.random.default_rng(39)
    sc = make_scenario(rng, num_targets=1, snr=1.0)
    pair = HypothesisPair(np.array([0.1]), np.array([0.05]))
    terms = evaluate_pair(pair, sc)
    npt.assert_allclose(terms.mu_half, mu_half_exact(pair, sc), rtol=1e-14)
    npt.assert_allclose(terms.alpha_g, alpha_g(sc), rtol=1e-14)
    fim = fisher_matrix(pair.phi, sc)
    assert terms.in_delta_region == in_delta_region(pair.delta, fim,
                                                    terms.alpha_g)


# --------------------------------------------- approximation diagnostics

def test_orthogonal_steering_makes_saturated_mu_exact():
    # single transmit element, receive steering vectors exactly orthogonal:
    # the saturated determinant-ratio exponent equals the exact one
    rng = np.random.default_rng(40)
    sc = make_scenario(num_rx=8, num_tx=1, identity_tx=True, snapshots=40,
                       snr=1.7, prior_deg=(-80.0, 80.0))
    b = AmplitudeDraw.sample(rng, 1, sc.amplitude_second_moment)
    phi = np.array([0.0])
    psi = np.array([np.arcsin(0.25)])  # quarter-cycle null of the 8-element ULA
    pair = HypothesisPair(phi, psi - phi)
    exact = mu_half_exact(pair, sc, b)
    w = (sc.num_rx / sc.noise_power) * b.frobenius_sq * sc.tx_covariance
    approx = sc.snapshots * (logdet_hpd(np.eye(1) + w)
                             - 2 * logdet_hpd(np.eye(1) + 0.5 * w))
    npt.assert_allclose(approx, exact, rtol=1e-10)


def test_single_tx_element_isotropic_surrogate_is_exact():
    # N = 1: V^* B^H B V^T is the 1x1 matrix ||B||_F^2, for any K
    for k in (1, 4):
        sc = make_scenario(num_rx=6, num_tx=1, identity_tx=True,
                           num_targets=k, snapshots=10, snr=1.0)
        rep = validate_approximation(sc, trials=50, seed=5)
        npt.assert_allclose(rep.frobenius_errors, 0.0, atol=1e-12)


def test_frobenius_error_single_target_closed_form():
    # K = 1, N = 4: error is the off-diagonal mass of a unit-modulus
    # rank-one outer product, always sqrt(N(N-1)) = sqrt(12)
    sc = make_scenario(num_rx=6, num_tx=4, identity_tx=True,
                       num_targets=1, snapshots=10, snr=1.0)
    rep = validate_approximation(sc, trials=64, seed=6)
    npt.assert_allclose(rep.frobenius_errors, np.sqrt(12.0), rtol=1e-12)
    assert isinstance(rep, ApproximationReport)
    assert rep.median_frobenius_error > 0
    assert np.isfinite(rep.median_mu_relative_error)


def test_validate_approximation_shapes():
    sc = make_scenario(num_rx=4, num_tx=2, identity_tx=True,
                       num_targets=2, snapshots=10)
    rep = validate_approximation(sc, trials=37, seed=7)
    assert rep.frobenius_errors.shape == (37,)
    assert rep.mu_relative_errors.shape == (37,)
    assert np.all(rep.frobenius_errors >= 0)
    assert np.all(rep.mu_relative_errors >= 0)
