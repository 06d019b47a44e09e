"""Shared fixtures and scenario factories for the test suite."""

import numpy as np
import pytest

from doabounds.radar import ArrayGeometry, Scenario


def random_psd(rng, n, scale=1.0):
    """Random complex Hermitian PSD matrix with unit-order eigenvalues."""
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(x)
    lam = rng.uniform(0.2, 2.0, size=n)
    a = (q * lam) @ q.conj().T
    a = 0.5 * (a + a.conj().T)
    return a * scale


def make_scenario(rng=None, *, num_rx=4, num_tx=3, num_targets=1,
                  snapshots=10, noise_power=1.0, snr=1.0,
                  prior_deg=(-60.0, 60.0), identity_tx=False,
                  second_moment=0.5):
    """Random (or identity-Sigma) scenario sized for fast tests.

    The transmit covariance is normalized so its average diagonal equals
    snr * noise_power.
    """
    if rng is None or identity_tx:
        sigma = np.eye(num_tx, dtype=complex)
    else:
        sigma = random_psd(rng, num_tx)
    sigma = sigma * (snr * noise_power * num_tx / np.real(np.trace(sigma)))
    lo, hi = np.deg2rad(prior_deg[0]), np.deg2rad(prior_deg[1])
    return Scenario(
        rx_geometry=ArrayGeometry.half_wavelength_ula(num_rx),
        tx_geometry=ArrayGeometry.half_wavelength_ula(num_tx),
        num_targets=num_targets,
        snapshots=snapshots,
        noise_power=noise_power,
        tx_covariance=sigma,
        amplitude_second_moment=second_moment,
        prior_support=(lo, hi),
    )


def draw_angles(rng, scenario, min_sep=0.05):
    """Angles from the prior with a minimum pairwise separation (radians)."""
    lo, hi = scenario.prior_support
    while True:
        th = np.sort(rng.uniform(lo, hi, size=scenario.num_targets))
        if scenario.num_targets == 1 or np.min(np.diff(th)) > min_sep:
            return th


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per acceptance test in the
# terminal summary

_acceptance_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.fspath.basename != "test_acceptance.py":
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _acceptance_results.append((item.name, report.passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance")
    for name, passed in _acceptance_results:
        terminalreporter.write_line(
            f"{'PASS' if passed else 'FAIL'}  {name}")
