"""Signal model for a co-located MIMO radar observing far-field targets.

A transmit array of N elements sends waveforms with covariance Sigma; K
point targets at angles theta (radians, measured from broadside) reflect
with i.i.d. complex Gaussian amplitudes; an M-element receive array
collects L snapshots in white noise. Each snapshot is zero-mean complex
Gaussian with covariance

    R(theta, b) = A(theta) B G(theta) B^H A(theta)^H + sigma_n^2 I,
    G(theta) = V(theta)^T Sigma V(theta)^*,

where A and V are the receive and transmit steering matrices and
B = diag(b) holds the target amplitudes. Averaging |b_k|^2 to its second
moment gives the deterministic mean-covariance model used by the bounds.

Angles are radians everywhere in this package; degrees and decibels
appear only at the CLI boundary.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch
from .numerics import HermitianPD, hermitian_defect

_HALF_PI = np.pi / 2.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Linear array: element positions in meters plus carrier wavelength."""

    positions: tuple  # meters, strictly increasing
    wavelength: float  # meters

    def __post_init__(self):
        pos = tuple(float(p) for p in self.positions)
        object.__setattr__(self, "positions", pos)
        if len(pos) < 1:
            raise ValueError("array needs at least one element")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("element positions must be strictly increasing")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")

    @classmethod
    def half_wavelength_ula(cls, num_elements: int, wavelength: float = 1.0):
        """Uniform linear array with lambda/2 spacing starting at 0."""
        step = wavelength / 2.0
        return cls(tuple(i * step for i in range(num_elements)), wavelength)

    @property
    def num_elements(self) -> int:
        return len(self.positions)

    @property
    def position_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float)

    @property
    def wavenumber(self) -> float:
        # spatial frequency 2*pi/lambda (rad/m)
        return 2.0 * np.pi / self.wavelength


def steering_vector(theta: float, geometry: ArrayGeometry) -> np.ndarray:
    """Unit-modulus array response exp(-j k d_m sin(theta))."""
    theta = float(theta)
    if not abs(theta) < _HALF_PI:
        raise ValueError(f"angle must lie strictly inside (-pi/2, pi/2), got {theta}")
    return np.exp(-1j * geometry.wavenumber
                  * geometry.position_array * np.sin(theta))


def steering_matrix(thetas: np.ndarray, geometry: ArrayGeometry) -> np.ndarray:
    """Stack steering vectors as columns, shape (num_elements, K)."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if thetas.ndim != 1:
        raise DimensionMismatch(f"expected 1-d angle vector, got shape {thetas.shape}")
    if not np.all(np.abs(thetas) < _HALF_PI):
        raise ValueError("all angles must lie strictly inside (-pi/2, pi/2)")
    return np.exp(-1j * geometry.wavenumber
                  * np.outer(geometry.position_array, np.sin(thetas)))


def steering_derivative(thetas: np.ndarray, geometry: ArrayGeometry,
                        i: int) -> np.ndarray:
    """Derivative of the steering matrix with respect to angle ``i``.

    Only column ``i`` is nonzero:
    d a(theta_i) / d theta_i = -j k cos(theta_i) * d ⊙ a(theta_i).
    Indices are 0-based.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    k = thetas.shape[0]
    if not 0 <= i < k:
        raise IndexError(f"target index {i} out of range for {k} targets")
    a = steering_matrix(thetas, geometry)
    out = np.zeros_like(a)
    out[:, i] = (-1j * geometry.wavenumber * np.cos(thetas[i])
                 * geometry.position_array) * a[:, i]
    return out


@dataclass(frozen=True)
class AmplitudeDraw:
    """One realization of the K complex target amplitudes."""

    values: np.ndarray  # shape (K,), complex

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=complex))
        if v.ndim != 1:
            raise DimensionMismatch(f"amplitudes must be a vector, got {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("amplitudes must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, rng: np.random.Generator, num_targets: int,
               second_moment: float) -> "AmplitudeDraw":
        """Draw b ~ CN(0, second_moment * I): N(0, sm/2) per real component."""
        s = np.sqrt(second_moment / 2.0)
        re = rng.standard_normal(num_targets)
        im = rng.standard_normal(num_targets)
        return cls(s * (re + 1j * im))

    @property
    def num_targets(self) -> int:
        return self.values.shape[0]

    @property
    def frobenius_sq(self) -> float:
        # ||B||_F^2 = sum |b_k|^2
        return float(np.sum(np.abs(self.values) ** 2))


@dataclass(frozen=True)
class Scenario:
    """Full problem instance: arrays, target count, priors and powers.

    ``tx_covariance`` is the transmit waveform covariance Sigma (N x N,
    Hermitian PSD). ``amplitude_second_moment`` is E|b_k|^2 for each
    target. ``prior_support`` is the uniform DoA prior (radians), a
    strict subset of (-pi/2, pi/2).
    """

    rx_geometry: ArrayGeometry
    tx_geometry: ArrayGeometry
    num_targets: int
    snapshots: int
    noise_power: float  # sigma_n^2, linear scale
    tx_covariance: np.ndarray  # Sigma, (N, N) complex Hermitian PSD
    amplitude_second_moment: float  # sigma_b^2
    prior_support: tuple  # (lo, hi) radians

    def __post_init__(self):
        if not (isinstance(self.num_targets, (int, np.integer))
                and self.num_targets >= 1):
            raise ValueError("num_targets must be an integer >= 1")
        if not (isinstance(self.snapshots, (int, np.integer))
                and self.snapshots >= 1):
            raise ValueError("snapshots must be an integer >= 1")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        if not self.amplitude_second_moment > 0:
            raise ValueError("amplitude_second_moment must be positive")
        lo, hi = (float(self.prior_support[0]), float(self.prior_support[1]))
        if not (-_HALF_PI < lo < hi < _HALF_PI):
            raise ValueError(
                "prior_support must satisfy -pi/2 < lo < hi < pi/2, "
                f"got ({lo}, {hi})")
        object.__setattr__(self, "prior_support", (lo, hi))
        sig = np.ascontiguousarray(np.asarray(self.tx_covariance), dtype=complex)
        n = self.tx_geometry.num_elements
        if sig.shape != (n, n):
            raise DimensionMismatch(
                f"tx_covariance shape {sig.shape} does not match "
                f"{n} transmit elements")
        if hermitian_defect(sig) > 1e-12:
            raise ValueError("tx_covariance must be Hermitian")
        eigs = np.linalg.eigvalsh(sig)
        if eigs.min(initial=0.0) < -1e-12 * max(1.0, eigs.max(initial=0.0)):
            raise ValueError("tx_covariance must be positive semidefinite")
        sig.setflags(write=False)
        object.__setattr__(self, "tx_covariance", sig)

    @property
    def num_rx(self) -> int:
        return self.rx_geometry.num_elements

    @property
    def num_tx(self) -> int:
        return self.tx_geometry.num_elements

    @property
    def zeta(self) -> float:
        """Width of the prior support (radians)."""
        return self.prior_support[1] - self.prior_support[0]

    def at_snr(self, snr: float) -> "Scenario":
        """Rescale the transmit covariance to a target SNR.

        Sigma is first normalized to unit average diagonal power, then
        scaled so that sigma_s^2 / sigma_n^2 = snr. snr = 0 gives a
        zero transmit covariance (pure noise).
        """
        if snr < 0:
            raise ValueError(f"snr must be nonnegative, got {snr}")
        base = np.asarray(self.tx_covariance)
        tr = float(np.real(np.trace(base)))
        if tr <= 0:
            raise ValueError("tx_covariance has zero trace, cannot set SNR")
        scale = snr * self.noise_power * self.num_tx / tr
        return Scenario(
            rx_geometry=self.rx_geometry,
            tx_geometry=self.tx_geometry,
            num_targets=self.num_targets,
            snapshots=self.snapshots,
            noise_power=self.noise_power,
            tx_covariance=base * scale,
            amplitude_second_moment=self.amplitude_second_moment,
            prior_support=self.prior_support,
        )

    def fingerprint(self) -> str:
        """Stable short hash of every model parameter."""
        h = hashlib.sha256()
        h.update(repr((self.rx_geometry.positions, self.rx_geometry.wavelength,
                       self.tx_geometry.positions, self.tx_geometry.wavelength,
                       self.num_targets, self.snapshots, self.noise_power,
                       self.amplitude_second_moment,
                       self.prior_support)).encode())
        h.update(np.ascontiguousarray(self.tx_covariance).tobytes())
        return h.hexdigest()[:16]


def _check_targets(thetas: np.ndarray, scenario: Scenario) -> np.ndarray:
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if thetas.shape != (scenario.num_targets,):
        raise DimensionMismatch(
            f"expected {scenario.num_targets} angles, got shape {thetas.shape}")
    return thetas


def _signal_outer(thetas: np.ndarray, scenario: Scenario,
                  b: Optional[AmplitudeDraw]):
    """Common pieces: steering matrices and the amplitude-weighted G."""
    a = steering_matrix(thetas, scenario.rx_geometry)
    v = steering_matrix(thetas, scenario.tx_geometry)
    g = v.T @ scenario.tx_covariance @ v.conj()
    if b is None:
        # E[B G B^H] = sigma_b^2 diag(G)
        c = scenario.amplitude_second_moment * np.diag(np.real(np.diag(g)))
        c = c.astype(complex)
    else:
        if b.num_targets != scenario.num_targets:
            raise DimensionMismatch(
                f"amplitude draw has {b.num_targets} entries, "
                f"scenario has {scenario.num_targets} targets")
        c = np.outer(b.values, b.values.conj()) * g
    return a, v, c


def conditional_snapshot_covariance(thetas: np.ndarray, scenario: Scenario,
                                    b: AmplitudeDraw) -> HermitianPD:
    """Snapshot covariance for a fixed amplitude realization b."""
    thetas = _check_targets(thetas, scenario)
    a, _, c = _signal_outer(thetas, scenario, b)
    r = a @ c @ a.conj().T
    r += scenario.noise_power * np.eye(scenario.num_rx)
    return HermitianPD(0.5 * (r + r.conj().T))


def mean_snapshot_covariance(thetas: np.ndarray,
                             scenario: Scenario) -> HermitianPD:
    """Snapshot covariance with |b_k|^2 replaced by its second moment."""
    thetas = _check_targets(thetas, scenario)
    a, _, c = _signal_outer(thetas, scenario, None)
    r = a @ c @ a.conj().T
    r += scenario.noise_power * np.eye(scenario.num_rx)
    return HermitianPD(0.5 * (r + r.conj().T))


def covariance_derivative(thetas: np.ndarray, scenario: Scenario,
                          b: Optional[AmplitudeDraw], i: int) -> np.ndarray:
    """d R / d theta_i for the conditional (b given) or mean (b None) model.

    Differentiating through both steering matrices gives

        dR = (Adot C A^H + h.c.) + (A dC A^H + h.c.),

    where only column i of Adot and row i of the G-derivative inside dC
    are nonzero, so everything reduces to rank-one updates.
    """
    thetas = _check_targets(thetas, scenario)
    k = scenario.num_targets
    if not 0 <= i < k:
        raise IndexError(f"target index {i} out of range for {k} targets")
    a, v, _ = _signal_outer(thetas, scenario, b)
    sig = scenario.tx_covariance
    drx = scenario.rx_geometry.position_array
    dtx = scenario.tx_geometry.position_array
    krx = scenario.rx_geometry.wavenumber
    ktx = scenario.tx_geometry.wavenumber
    cos_i = np.cos(thetas[i])

    da_i = (-1j * krx * cos_i * drx) * a[:, i]  # (M,)
    dv_i = (-1j * ktx * cos_i * dtx) * v[:, i]  # (N,)

    if b is None:
        sb = scenario.amplitude_second_moment
        g_ii = float(np.real(v[:, i].T @ sig @ v[:, i].conj()))
        # dG_ii = vdot^T Sigma v* + v^T Sigma vdot* = 2 Re(vdot^T Sigma v*)
        gdot_ii = 2.0 * float(np.real(dv_i @ sig @ v[:, i].conj()))
        t1 = sb * g_ii * np.outer(da_i, a[:, i].conj())
        t2 = sb * gdot_ii * np.outer(a[:, i], a[:, i].conj())
        dr = t1 + t1.conj().T + t2  # t2 already Hermitian
    else:
        bv = b.values
        g = v.T @ sig @ v.conj()  # (K, K)
        c = np.outer(bv, bv.conj()) * g
        # Adot C A^H: only row i of (C A^H) matters
        t1 = np.outer(da_i, c[i, :] @ a.conj().T)
        # A (B dG B^H) A^H with dG supported on row i
        g_row = dv_i @ sig @ v.conj()  # (K,)
        t2 = np.outer(a[:, i], (bv[i] * g_row * bv.conj()) @ a.conj().T)
        dr = t1 + t1.conj().T + t2 + t2.conj().T
    return 0.5 * (dr + dr.conj().T)
