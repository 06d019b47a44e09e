"""Snapshot synthesis and grid-search stochastic ML estimation.

The estimator maximizes the Gaussian log-likelihood under the
amplitude-averaged covariance model,

    objective(theta) = -L [ ln|R(theta)| + tr(R(theta)^{-1} S_hat) ],

with S_hat = X X^H / L. Because R(theta) is rank-K plus a scaled
identity, the grid search runs through the determinant lemma: with
U = A(theta) diag(sqrt(s)), s_k = sigma_b^2 g(theta_k), and
D = sigma_n^2 I_K + U^H U,

    ln|R| = (M - K) ln sigma_n^2 + ln|D|,
    tr(R^{-1} S) = [tr S - tr(D^{-1} U^H S U)] / sigma_n^2,

so a whole grid costs one projection of S_hat onto the node steering
vectors plus K x K algebra per candidate. MSE is measured against the
sorted (order-statistic) angle vectors.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, GridTooCoarse
from .radar import (
    AmplitudeDraw,
    Scenario,
    mean_snapshot_covariance,
    steering_matrix,
)
from .numerics import logdet_hpd, solve_hpd

_SQRT_HALF = np.sqrt(0.5)


def _seed_tuple(seed) -> tuple:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


@dataclass(frozen=True)
class SnapshotBlock:
    """One coherent block of received snapshots."""

    data: np.ndarray  # (M, L) complex
    true_thetas: np.ndarray  # (K,) sorted ascending
    amplitude_draw: AmplitudeDraw
    seed: tuple

    def __post_init__(self):
        x = np.asarray(self.data, dtype=complex)
        t = np.asarray(self.true_thetas, dtype=float)
        if x.ndim != 2:
            raise DimensionMismatch(f"data must be M x L, got shape {x.shape}")
        if t.ndim != 1 or np.any(np.diff(t) < 0):
            raise ValueError("true_thetas must be a sorted vector")
        x = x.copy()
        x.setflags(write=False)
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "data", x)
        object.__setattr__(self, "true_thetas", t)
        object.__setattr__(self, "seed", _seed_tuple(self.seed))

    @property
    def num_snapshots(self) -> int:
        return self.data.shape[1]

    def sample_covariance(self) -> np.ndarray:
        x = self.data
        return x @ x.conj().T / x.shape[1]


@dataclass(frozen=True)
class TrialResult:
    """Estimate of one block, compared order statistic to order statistic."""

    estimated_thetas: np.ndarray  # (K,) sorted ascending
    squared_error: np.ndarray  # (K,) >= 0
    log_likelihood: float

    def __post_init__(self):
        e = np.asarray(self.estimated_thetas, dtype=float)
        q = np.asarray(self.squared_error, dtype=float)
        if np.any(np.diff(e) < 0):
            raise ValueError("estimated_thetas must be sorted")
        if np.any(q < 0):
            raise ValueError("squared_error must be nonnegative")
        e = e.copy()
        e.setflags(write=False)
        q = q.copy()
        q.setflags(write=False)
        object.__setattr__(self, "estimated_thetas", e)
        object.__setattr__(self, "squared_error", q)


def synthesize(scenario: Scenario, thetas, seed) -> SnapshotBlock:
    """Draw one snapshot block X = A diag(b) V^T Phi + Z.

    The three draws happen in a fixed order (amplitudes, waveforms,
    noise) from a single generator seeded by ``seed``, so a block is
    bit-identical for a given (scenario, thetas, seed).
    """
    thetas = np.sort(np.asarray(thetas, dtype=float).ravel())
    if thetas.shape[0] != scenario.num_targets:
        raise DimensionMismatch(
            f"expected {scenario.num_targets} angles, got {thetas.shape[0]}")
    lo, hi = scenario.prior_support
    if np.any(thetas < lo) or np.any(thetas > hi):
        raise ValueError("angles must lie in the prior support")

    lineage = _seed_tuple(seed)
    rng = np.random.default_rng(np.random.SeedSequence(lineage))
    b = AmplitudeDraw.sample(rng, scenario.num_targets,
                             scenario.amplitude_second_moment)

    n, l = scenario.num_tx, scenario.snapshots
    evals, evecs = np.linalg.eigh(scenario.tx_covariance)
    factor = evecs * np.sqrt(np.clip(evals, 0.0, None))
    phi = factor @ (_SQRT_HALF * (rng.standard_normal((n, l))
                                  + 1j * rng.standard_normal((n, l))))
    noise = np.sqrt(scenario.noise_power) * _SQRT_HALF * (
        rng.standard_normal((scenario.num_rx, l))
        + 1j * rng.standard_normal((scenario.num_rx, l)))

    a = steering_matrix(thetas, scenario.rx_geometry)
    v = steering_matrix(thetas, scenario.tx_geometry)
    x = a @ (b.values[:, None] * (v.T @ phi)) + noise
    return SnapshotBlock(data=x, true_thetas=thetas, amplitude_draw=b,
                         seed=lineage)


def sml_objective(thetas, scenario: Scenario, sample_cov: np.ndarray) -> float:
    """Reference evaluation of the stochastic ML objective.

    Builds the full model covariance and factors it; the grid search
    reproduces this value through the low-rank identity.
    """
    r = mean_snapshot_covariance(np.asarray(thetas, dtype=float), scenario)
    trace = float(np.real(np.trace(solve_hpd(r, sample_cov))))
    return -scenario.snapshots * (logdet_hpd(r) + trace)


class _GridModel:
    """Per-scenario precomputation for the grid search."""

    def __init__(self, scenario: Scenario, grid_step: float):
        if not grid_step > 0:
            raise ValueError(f"grid_step must be positive, got {grid_step}")
        if grid_step > scenario.zeta / 10.0:
            raise GridTooCoarse(
                f"grid_step {grid_step:.4g} exceeds a tenth of the prior "
                f"width {scenario.zeta:.4g}")
        self.scenario = scenario
        lo, hi = scenario.prior_support
        count = int(np.floor((hi - lo) / grid_step + 1e-9))
        nodes = lo + grid_step * np.arange(count + 1)
        if nodes[-1] < hi - 1e-12:
            nodes = np.append(nodes, hi)
        self.nodes = nodes
        self.step = grid_step
        a = steering_matrix(nodes, scenario.rx_geometry)  # (M, n)
        v = steering_matrix(nodes, scenario.tx_geometry)  # (N, n)
        g = np.real(np.einsum("ni,nm,mi->i", v, scenario.tx_covariance,
                              v.conj()))
        self.steering = a
        self.power = scenario.amplitude_second_moment * np.clip(g, 0.0, None)
        self.gram = a.conj().T @ a  # (n, n)
        self.noise = scenario.noise_power
        self.num_rx = scenario.num_rx

    # -- direct objective at arbitrary angles, via the low-rank identity

    def objective_at(self, thetas: np.ndarray, sample_cov: np.ndarray,
                     trace_s: float) -> float:
        sc = self.scenario
        k = thetas.shape[0]
        a = steering_matrix(thetas, sc.rx_geometry)
        v = steering_matrix(thetas, sc.tx_geometry)
        g = np.real(np.einsum("ni,nm,mi->i", v, sc.tx_covariance, v.conj()))
        root = np.sqrt(sc.amplitude_second_moment * np.clip(g, 0.0, None))
        u = a * root[None, :]
        d = self.noise * np.eye(k) + u.conj().T @ u
        e = u.conj().T @ sample_cov @ u
        sign, logdet = np.linalg.slogdet(d)
        tr_term = float(np.real(np.trace(np.linalg.solve(d, e))))
        val = ((self.num_rx - k) * np.log(self.noise) + logdet
               + (trace_s - tr_term) / self.noise)
        return -sc.snapshots * float(val)

    # -- exhaustive searches

    def _grid_objective_1(self, sample_cov: np.ndarray, trace_s: float):
        a = self.steering
        proj = np.real(np.einsum("mi,mn,ni->i", a.conj(), sample_cov, a))
        d = self.noise + self.power * self.num_rx
        val = ((self.num_rx - 1) * np.log(self.noise) + np.log(d)
               + (trace_s - self.power * proj / d) / self.noise)
        return -self.scenario.snapshots * val

    def _grid_objective_2(self, sample_cov: np.ndarray, trace_s: float):
        t = self.steering.conj().T @ sample_cov @ self.steering  # (n, n)
        i_idx, j_idx = np.triu_indices(self.nodes.shape[0])
        s_i, s_j = self.power[i_idx], self.power[j_idx]
        root = np.sqrt(s_i * s_j)
        m = self.num_rx
        d11 = self.noise + s_i * m
        d22 = self.noise + s_j * m
        d12 = root * self.gram[i_idx, j_idx]
        det = np.real(d11 * d22 - d12 * np.conj(d12))
        t_ij = t[i_idx, j_idx]
        e11 = s_i * np.real(t[i_idx, i_idx])
        e22 = s_j * np.real(t[j_idx, j_idx])
        cross = root * np.real(d12.conj() * t_ij)
        tr_term = (d22 * e11 + d11 * e22 - 2.0 * cross) / det
        val = ((m - 2) * np.log(self.noise) + np.log(det)
               + (trace_s - tr_term) / self.noise)
        return -self.scenario.snapshots * val, i_idx, j_idx

    def _refine_coordinate(self, thetas: np.ndarray, axis: int,
                           sample_cov: np.ndarray, trace_s: float,
                           center_val: float) -> float:
        """Quadratic vertex through the grid cell around thetas[axis]."""
        lo, hi = self.scenario.prior_support
        x0 = thetas[axis]
        left = thetas.copy()
        left[axis] = x0 - self.step
        right = thetas.copy()
        right[axis] = x0 + self.step
        if left[axis] < lo or right[axis] > hi:
            return x0
        f_l = self.objective_at(left, sample_cov, trace_s)
        f_r = self.objective_at(right, sample_cov, trace_s)
        denom = f_l - 2.0 * center_val + f_r
        if denom >= 0.0 or not np.isfinite(denom):
            return x0  # no interior curvature to exploit
        shift = 0.5 * self.step * (f_l - f_r) / denom
        shift = float(np.clip(shift, -0.5 * self.step, 0.5 * self.step))
        return float(np.clip(x0 + shift, lo, hi))


def _alternating_search(model: _GridModel, sample_cov: np.ndarray,
                        trace_s: float, k: int, rng: np.random.Generator,
                        restarts: int = 8, max_sweeps: int = 20) -> np.ndarray:
    """Coordinate-wise grid maximization from random restarts (K >= 3)."""
    nodes = model.nodes
    n = nodes.shape[0]
    lo, hi = model.scenario.prior_support
    m = model.num_rx
    best_val, best = -np.inf, None
    for _ in range(restarts):
        idx = np.sort(rng.integers(0, n, size=k))
        val = None
        for _ in range(max_sweeps):
            improved = False
            for axis in range(k):
                s_fixed = model.power[idx]
                # candidate axis value swept across all nodes at once
                d = np.tile(model.noise * np.eye(k, dtype=complex)
                            + np.sqrt(np.outer(s_fixed, s_fixed))
                            * model.gram[np.ix_(idx, idx)], (n, 1, 1))
                e_base = np.sqrt(np.outer(s_fixed, s_fixed)) \
                    * (model.steering[:, idx].conj().T @ sample_cov
                       @ model.steering[:, idx])
                e = np.tile(e_base, (n, 1, 1))
                root = np.sqrt(model.power * model.power[idx][:, None])  # (k, n)
                cross_d = root * model.gram[idx, :]  # (k, n)
                cross_e = root * (model.steering[:, idx].conj().T
                                  @ sample_cov @ model.steering)  # (k, n)
                d[:, :, axis] = cross_d.T
                d[:, axis, :] = cross_d.T.conj()
                e[:, :, axis] = cross_e.T
                e[:, axis, :] = cross_e.T.conj()
                d[:, axis, axis] = model.noise + model.power * m
                e[:, axis, axis] = model.power * np.real(
                    np.einsum("mi,mn,ni->i", model.steering.conj(),
                              sample_cov, model.steering))
                sign, logdet = np.linalg.slogdet(d)
                tr_term = np.real(np.einsum(
                    "nii->n", np.linalg.solve(d, e)))
                obj = -model.scenario.snapshots * (
                    (m - k) * np.log(model.noise) + logdet
                    + (trace_s - tr_term) / model.noise)
                pick = int(np.argmax(obj))
                if val is None or obj[pick] > val + 1e-12 * abs(val):
                    improved = improved or (idx[axis] != pick) or val is None
                    idx[axis] = pick
                    val = float(obj[pick])
            idx = np.sort(idx)
            if not improved:
                break
        if val is not None and val > best_val:
            best_val, best = val, idx.copy()
    return nodes[best]


def ml_estimate(block: SnapshotBlock, scenario: Scenario,
                grid_step: float, model: _GridModel = None) -> TrialResult:
    """Grid-search stochastic ML estimate of the block's angles.

    Exhaustive over the sorted grid for K <= 2 (ties broken toward the
    smaller angle), coordinate-wise alternating maximization from eight
    random restarts for K >= 3, followed by one per-coordinate quadratic
    refinement inside the winning grid cell.
    """
    if model is None:
        model = _GridModel(scenario, grid_step)
    k = scenario.num_targets
    if block.data.shape != (scenario.num_rx, scenario.snapshots):
        raise DimensionMismatch(
            f"block shape {block.data.shape} does not match the scenario")
    s_hat = block.sample_covariance()
    trace_s = float(np.real(np.trace(s_hat)))

    if k == 1:
        obj = model._grid_objective_1(s_hat, trace_s)
        best = int(np.argmax(obj))
        thetas = np.array([model.nodes[best]])
    elif k == 2:
        obj, i_idx, j_idx = model._grid_objective_2(s_hat, trace_s)
        best = int(np.argmax(obj))
        thetas = np.array([model.nodes[i_idx[best]],
                           model.nodes[j_idx[best]]])
    else:
        rng = np.random.default_rng(
            np.random.SeedSequence(block.seed + (101,)))
        thetas = _alternating_search(model, s_hat, trace_s, k, rng)

    center = model.objective_at(thetas, s_hat, trace_s)
    refined = thetas.copy()
    for axis in range(k):
        refined[axis] = model._refine_coordinate(
            thetas, axis, s_hat, trace_s, center)
    refined = np.sort(refined)
    log_like = model.objective_at(refined, s_hat, trace_s)

    err = (refined - block.true_thetas) ** 2
    return TrialResult(estimated_thetas=refined, squared_error=err,
                       log_likelihood=log_like)


class MseEstimate(NamedTuple):
    mse: float
    stderr: float


def simulate_mse(scenario: Scenario, snr: float, trials: int,
                 grid_step: float = np.deg2rad(0.2), seed=0, *,
                 threads: int = 1) -> MseEstimate:
    """Monte Carlo order-statistic MSE of the grid ML estimator.

    Each trial draws its angles i.i.d. uniform over the prior, sorts
    them, synthesizes a block and estimates. Per-trial seeds derive
    from (seed, trial), so results are bit-identical for any thread
    count; aggregation is index-ordered pairwise summation.
    """
    if trials < 10:
        raise ValueError(f"need at least 10 trials, got {trials}")
    sc = scenario.at_snr(snr)
    model = _GridModel(sc, grid_step)
    lo, hi = sc.prior_support
    master = _seed_tuple(seed)

    def one(t: int) -> float:
        draw_rng = np.random.default_rng(
            np.random.SeedSequence(master + (t, 0)))
        thetas = np.sort(draw_rng.uniform(lo, hi, size=sc.num_targets))
        block = synthesize(sc, thetas, master + (t, 1))
        result = ml_estimate(block, sc, grid_step, model=model)
        return float(np.sum(result.squared_error)) / sc.num_targets

    per_trial = np.empty(trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for t, val in enumerate(pool.map(one, range(trials))):
                per_trial[t] = val
    else:
        for t in range(trials):
            per_trial[t] = one(t)

    mse = float(np.sum(per_trial)) / trials
    spread = float(np.sum((per_trial - mse) ** 2))
    stderr = float(np.sqrt(spread / (trials - 1) / trials))
    return MseEstimate(mse=mse, stderr=stderr)
