"""Built-in oracle and property checks behind the `validate` subcommand.

Each check is small, deterministic, and self-contained; together they
re-derive the key numeric identities from first principles so a broken
installation (bad BLAS, wrong dtype promotion, ...) is caught without
the development test suite.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .chernoff import HypothesisPair, alpha_g, mu_ddot_half_exact, \
    mu_half_exact, p_large
from .fisher import fisher_matrix
from .numerics import gamma_32, q_function
from .radar import ArrayGeometry, Scenario, covariance_derivative, \
    mean_snapshot_covariance
from .simulate import simulate_mse
from .zzb import apb, zzb, zzb_exact_1d


def _scenario(num_rx=6, num_tx=3, num_targets=1, snapshots=20, snr=1.0,
              prior_deg=(-60.0, 60.0)):
    sigma = np.eye(num_tx) * snr
    return Scenario(
        rx_geometry=ArrayGeometry.half_wavelength_ula(num_rx),
        tx_geometry=ArrayGeometry.half_wavelength_ula(num_tx),
        num_targets=num_targets,
        snapshots=snapshots,
        noise_power=1.0,
        tx_covariance=sigma,
        amplitude_second_moment=0.5,
        prior_support=(np.deg2rad(prior_deg[0]), np.deg2rad(prior_deg[1])),
    )


def _scalar_scenario(w: float):
    # one rx element, one tx element: W reduces to the scalar w
    return Scenario(
        rx_geometry=ArrayGeometry.half_wavelength_ula(1),
        tx_geometry=ArrayGeometry.half_wavelength_ula(1),
        num_targets=1,
        snapshots=1,
        noise_power=1.0,
        tx_covariance=np.array([[2.0 * w]]),
        amplitude_second_moment=0.5,
        prior_support=(-1.0, 1.0),
    )


def check_q_function():
    ref, _ = quad(lambda t: np.exp(-t * t / 2.0) / np.sqrt(2.0 * np.pi),
                  1.2, 30.0, epsabs=0.0, epsrel=1e-12)
    err = abs(q_function(1.2) - ref) / ref
    return err <= 1e-10, f"relative error {err:.2e} at z = 1.2"


def check_gamma_32():
    ref, _ = quad(lambda s: 2.0 * 3.0**1.5 * s * s * np.exp(-3.0 * s * s)
                  / (0.5 * np.sqrt(np.pi)), 0.0, 1.0,
                  epsabs=0.0, epsrel=1e-12)
    err = abs(gamma_32(3.0) - ref) / ref
    ends = gamma_32(0.0) == 0.0 and abs(gamma_32(1e8) - 1.0) < 1e-12
    return err <= 1e-10 and ends, f"relative error {err:.2e} at u = 3"


def check_alpha_scalar_example():
    val = alpha_g(_scalar_scenario(2.0))
    return abs(val - 2.0) <= 1e-12, f"alpha_g = {val!r}, want 2.0"


def check_p_large_scalar_example():
    want = 0.75 * np.exp(0.25) * q_function(np.sqrt(2.0) / 2.0)
    got = p_large(_scalar_scenario(2.0))
    err = abs(got - want) / want
    return err <= 1e-10, f"relative error {err:.2e}"


def check_covariance_derivative():
    sc = _scenario(num_rx=5, num_tx=2, num_targets=2)
    thetas = np.array([-0.4, 0.3])
    h = 1e-6
    worst = 0.0
    for i in range(2):
        step = np.zeros(2)
        step[i] = h
        fd = (mean_snapshot_covariance(thetas + step, sc).matrix
              - mean_snapshot_covariance(thetas - step, sc).matrix) / (2 * h)
        an = covariance_derivative(thetas, sc, None, i)
        worst = max(worst, float(np.abs(fd - an).max()
                                 / max(1.0, np.abs(an).max())))
    return worst <= 1e-6, f"worst relative mismatch {worst:.2e}"


def check_fim_linearity():
    sc1 = _scenario(snapshots=15, num_targets=2)
    sc2 = _scenario(snapshots=30, num_targets=2)
    thetas = np.array([-0.5, 0.4])
    j1 = fisher_matrix(thetas, sc1).entries
    j2 = fisher_matrix(thetas, sc2).entries
    sym = np.array_equal(j1, j1.T)
    lin = np.array_equal(2.0 * j1, j2)
    psd = np.linalg.eigvalsh(j1).min() >= -1e-12
    return sym and lin and psd, "symmetry/linearity/PSD of the FIM"


def check_chernoff_signs():
    sc = _scenario(num_rx=4, num_tx=2, num_targets=1)
    rng = np.random.default_rng(5)
    for _ in range(100):
        phi = rng.uniform(-0.9, 0.6, size=1)
        delta = rng.uniform(0.0, 0.3, size=1)
        pair = HypothesisPair(phi=phi, delta=delta)
        if mu_half_exact(pair, sc) > 1e-12:
            return False, "mu(1/2) > 0 found"
        if mu_ddot_half_exact(pair, sc) < 0.0:
            return False, "negative curvature found"
    return True, "100 draws"


def check_apb_values():
    zeta = 2.0
    ok = (abs(apb(1, zeta) - zeta**2 / 12.0) <= 1e-15
          and abs(apb(2, zeta) - zeta**2 / 18.0) <= 1e-15)
    vals = [apb(k, zeta) for k in range(1, 9)]
    mono = all(a > b for a, b in zip(vals, vals[1:]))
    return ok and mono, "K = 1, 2 exact; decreasing to K = 8"


def check_zzb_limits():
    sc = _scenario(num_rx=8, num_tx=4, num_targets=1, snapshots=40)
    low, d_low = zzb(sc, 1e-8, crb_samples=300, seed=0)
    floor = apb(1, sc.zeta)
    lo_ok = abs(low / floor - 1.0) <= 0.01
    comp_ok = low == d_low.apriori_term + d_low.crb_term * d_low.gamma_term
    high, d_high = zzb(sc, 1e4, crb_samples=300, seed=0)
    hi_ok = abs(high / d_high.crb_term - 1.0) <= 1e-2
    return lo_ok and comp_ok and hi_ok, (
        f"low-SNR ratio {low / floor:.4f}, high-SNR ratio "
        f"{high / d_high.crb_term:.4f}")


def check_exact_oracle_floor():
    sc = _scenario(num_rx=4, num_tx=2, num_targets=1, snapshots=10)
    val = zzb_exact_1d(sc.at_snr(0.0), quadrature_points=64)
    want = sc.zeta**2 / 12.0
    err = abs(val - want) / want
    return err <= 1e-6, f"relative error {err:.2e} vs zeta^2/12"


def check_simulation_determinism():
    sc = _scenario(num_rx=4, num_tx=2, num_targets=1, snapshots=10)
    a = simulate_mse(sc, 1.0, trials=10, grid_step=np.deg2rad(1.0), seed=3)
    b = simulate_mse(sc, 1.0, trials=10, grid_step=np.deg2rad(1.0), seed=3,
                     threads=2)
    return a == b, "bit-identical across thread counts"


CHECKS = (
    ("q-function vs quadrature", check_q_function),
    ("incomplete gamma vs quadrature", check_gamma_32),
    ("alpha scalar reduction", check_alpha_scalar_example),
    ("saturated error probability scalar value", check_p_large_scalar_example),
    ("covariance derivative finite difference", check_covariance_derivative),
    ("Fisher matrix symmetry and linearity", check_fim_linearity),
    ("Chernoff exponent signs", check_chernoff_signs),
    ("a-priori bound values", check_apb_values),
    ("bound limits and composition", check_zzb_limits),
    ("exact oracle zero-signal floor", check_exact_oracle_floor),
    ("simulation determinism", check_simulation_determinism),
)


def run_all(stream=None) -> bool:
    """Run every check, print one pass/fail line each; True if all pass."""
    import sys
    if stream is None:
        stream = sys.stdout
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name} ({detail})", file=stream)
    print(("all checks passed" if all_ok else "some checks FAILED"),
          file=stream)
    return all_ok
