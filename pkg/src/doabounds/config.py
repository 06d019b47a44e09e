"""Experiment configuration: TOML parsing, validation, presets.

Degrees and decibels live at this boundary; everything behind it is
radians and linear power ratios. Validation is total: a malformed file
produces one ValidationError carrying every violation, each naming the
offending field path.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ParseError, ValidationError
from .radar import ArrayGeometry, Scenario

SWEEP_VARIABLES = ("tx_elements", "num_targets", "prior_support", "none")
DEFAULT_SNR_GRID = (-30.0, 30.0, 1.0)
DEFAULT_SNAPSHOTS = 40
DEFAULT_SECOND_MOMENT = 0.5
DEFAULT_TRIALS = 500
DEFAULT_GRID_STEP_DEG = 0.2
DEFAULT_SEED = 12345
DEFAULT_QUAD_POINTS = 256


@dataclass(frozen=True)
class ScenarioSpec:
    """Scenario parameters at the config boundary (degrees here)."""

    rx_elements: int
    tx_elements: int
    num_targets: int
    snapshots: int = DEFAULT_SNAPSHOTS
    noise_power: float = 1.0
    amplitude_second_moment: float = DEFAULT_SECOND_MOMENT
    prior_support_deg: tuple = (-60.0, 60.0)
    wavelength: float = 1.0
    tx_covariance: object = "identity"  # or tuple of row tuples


@dataclass(frozen=True)
class SnrGridSpec:
    start_db: float = DEFAULT_SNR_GRID[0]
    stop_db: float = DEFAULT_SNR_GRID[1]
    step_db: float = DEFAULT_SNR_GRID[2]

    def values_db(self) -> np.ndarray:
        count = int(np.floor((self.stop_db - self.start_db)
                             / self.step_db + 1e-9))
        return self.start_db + self.step_db * np.arange(count + 1)


@dataclass(frozen=True)
class SweepSpec:
    variable: str = "none"
    values: tuple = ()


@dataclass(frozen=True)
class SimulationSpec:
    enabled: bool = False
    trials: int = DEFAULT_TRIALS
    grid_step_deg: float = DEFAULT_GRID_STEP_DEG
    seed: int = DEFAULT_SEED


@dataclass(frozen=True)
class OracleSpec:
    enabled: bool = False
    quadrature_points: int = DEFAULT_QUAD_POINTS


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioSpec
    snr_grid: SnrGridSpec = field(default_factory=SnrGridSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    simulation: SimulationSpec = field(default_factory=SimulationSpec)
    oracle: OracleSpec = field(default_factory=OracleSpec)
    output_path: str = "results.csv"
    threads: int = 1

    def sweep_values(self) -> tuple:
        if self.sweep.variable == "none":
            return (None,)
        return self.sweep.values

    def scenario_for(self, sweep_value) -> Scenario:
        """Concrete radar scenario for one sweep value (unit signal power;
        the SNR sweep rescales the transmit covariance downstream)."""
        spec = self.scenario
        n_tx = spec.tx_elements
        k = spec.num_targets
        prior = spec.prior_support_deg
        if sweep_value is not None:
            if self.sweep.variable == "tx_elements":
                n_tx = int(sweep_value)
            elif self.sweep.variable == "num_targets":
                k = int(sweep_value)
            elif self.sweep.variable == "prior_support":
                prior = tuple(sweep_value)
        if spec.tx_covariance == "identity":
            sigma = np.eye(n_tx)
        else:
            sigma = np.asarray(spec.tx_covariance, dtype=float)
        return Scenario(
            rx_geometry=ArrayGeometry.half_wavelength_ula(
                spec.rx_elements, spec.wavelength),
            tx_geometry=ArrayGeometry.half_wavelength_ula(
                n_tx, spec.wavelength),
            num_targets=k,
            snapshots=spec.snapshots,
            noise_power=spec.noise_power,
            tx_covariance=sigma,
            amplitude_second_moment=spec.amplitude_second_moment,
            prior_support=(np.deg2rad(prior[0]), np.deg2rad(prior[1])),
        )


# ---------------------------------------------------------------------------
# presets

PRESETS = {
    # single target, transmit-array size sweep
    "fig1": {
        "scenario": {"rx_elements": 20, "tx_elements": 32, "num_targets": 1},
        "sweep": {"variable": "tx_elements", "values": [1, 2, 4, 8, 16, 32]},
        "output": {"path": "fig1.csv"},
    },
    # target-count sweep at the largest transmit array
    "fig2": {
        "scenario": {"rx_elements": 20, "tx_elements": 32, "num_targets": 8},
        "sweep": {"variable": "num_targets", "values": [2, 5, 8]},
        "output": {"path": "fig2.csv"},
    },
    # prior-support sweep (run per target count for the full picture)
    "fig3": {
        "scenario": {"rx_elements": 20, "tx_elements": 32, "num_targets": 2},
        "sweep": {"variable": "prior_support",
                  "values": [[-60.0, 60.0], [-85.0, 85.0]]},
        "output": {"path": "fig3.csv"},
    },
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


# ---------------------------------------------------------------------------
# validation helpers


class _Checker:
    def __init__(self):
        self.errors = []

    def fail(self, path: str, message: str):
        self.errors.append(f"{path}: {message}")

    def known_keys(self, section: dict, path: str, allowed: tuple):
        for key in section:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else key, "unknown field")

    def get(self, section: dict, path: str, key: str, kinds, default,
            required: bool = False):
        if key not in section:
            if required:
                self.fail(f"{path}.{key}", "required field is missing")
            return default
        val = section[key]
        if kinds is bool:
            if not isinstance(val, bool):
                self.fail(f"{path}.{key}", f"expected a boolean, got {val!r}")
                return default
            return val
        if kinds is int:
            if isinstance(val, bool) or not isinstance(val, int):
                self.fail(f"{path}.{key}", f"expected an integer, got {val!r}")
                return default
            return val
        if kinds is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                self.fail(f"{path}.{key}", f"expected a number, got {val!r}")
                return default
            return float(val)
        if kinds is str:
            if not isinstance(val, str):
                self.fail(f"{path}.{key}", f"expected a string, got {val!r}")
                return default
            return val
        if kinds is list:
            if not isinstance(val, list):
                self.fail(f"{path}.{key}", f"expected a list, got {val!r}")
                return default
            return val
        raise AssertionError(f"unhandled kind {kinds}")


def _check_prior(chk: _Checker, pair, path: str) -> tuple:
    fallback = (-60.0, 60.0)
    if (not isinstance(pair, (list, tuple)) or len(pair) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float))
                   for x in pair)):
        chk.fail(path, f"expected [low_deg, high_deg], got {pair!r}")
        return fallback
    lo, hi = float(pair[0]), float(pair[1])
    if not (-90.0 < lo < hi < 90.0):
        chk.fail(path, f"need -90 < low < high < 90 degrees, got [{lo}, {hi}]")
        return fallback
    return (lo, hi)


def _validate(raw: dict) -> ExperimentConfig:
    chk = _Checker()
    chk.known_keys(raw, "", ("scenario", "snr_grid", "sweep", "simulation",
                             "oracle", "output"))

    sc_raw = raw.get("scenario", {})
    if not isinstance(sc_raw, dict):
        chk.fail("scenario", "expected a section")
        sc_raw = {}
    chk.known_keys(sc_raw, "scenario",
                   ("rx_elements", "tx_elements", "num_targets", "snapshots",
                    "noise_power", "amplitude_second_moment",
                    "prior_support_deg", "wavelength", "tx_covariance"))
    rx = chk.get(sc_raw, "scenario", "rx_elements", int, 1, required=True)
    tx = chk.get(sc_raw, "scenario", "tx_elements", int, 1, required=True)
    k = chk.get(sc_raw, "scenario", "num_targets", int, 1, required=True)
    snapshots = chk.get(sc_raw, "scenario", "snapshots", int,
                        DEFAULT_SNAPSHOTS)
    noise = chk.get(sc_raw, "scenario", "noise_power", float, 1.0)
    sb = chk.get(sc_raw, "scenario", "amplitude_second_moment", float,
                 DEFAULT_SECOND_MOMENT)
    wavelength = chk.get(sc_raw, "scenario", "wavelength", float, 1.0)
    for name, val in (("rx_elements", rx), ("tx_elements", tx),
                      ("num_targets", k), ("snapshots", snapshots)):
        if val < 1:
            chk.fail(f"scenario.{name}", f"must be >= 1, got {val}")
    for name, val in (("noise_power", noise),
                      ("amplitude_second_moment", sb),
                      ("wavelength", wavelength)):
        if not (np.isfinite(val) and val > 0):
            chk.fail(f"scenario.{name}", f"must be positive, got {val}")
    prior = (-60.0, 60.0)
    if "prior_support_deg" in sc_raw:
        prior = _check_prior(chk, sc_raw["prior_support_deg"],
                             "scenario.prior_support_deg")
    cov = sc_raw.get("tx_covariance", "identity")
    if isinstance(cov, str):
        if cov != "identity":
            chk.fail("scenario.tx_covariance",
                     f"expected 'identity' or a matrix, got {cov!r}")
            cov = "identity"
    elif isinstance(cov, list):
        arr = None
        try:
            arr = np.asarray(cov, dtype=float)
        except (TypeError, ValueError):
            pass
        if arr is None or arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            chk.fail("scenario.tx_covariance",
                     "expected a square matrix of numbers")
            cov = "identity"
        elif arr.shape[0] != tx:
            chk.fail("scenario.tx_covariance",
                     f"size {arr.shape[0]} does not match tx_elements {tx}")
            cov = "identity"
        elif not np.allclose(arr, arr.T, atol=1e-12):
            chk.fail("scenario.tx_covariance", "matrix must be symmetric")
            cov = "identity"
        elif np.linalg.eigvalsh(arr).min() < -1e-12 * max(
                1.0, float(np.abs(arr).max())):
            chk.fail("scenario.tx_covariance",
                     "matrix must be positive semidefinite")
            cov = "identity"
        else:
            cov = tuple(tuple(row) for row in arr)
    else:
        chk.fail("scenario.tx_covariance",
                 f"expected 'identity' or a matrix, got {cov!r}")
        cov = "identity"

    grid_raw = raw.get("snr_grid", {})
    if not isinstance(grid_raw, dict):
        chk.fail("snr_grid", "expected a section")
        grid_raw = {}
    chk.known_keys(grid_raw, "snr_grid", ("start_db", "stop_db", "step_db"))
    start = chk.get(grid_raw, "snr_grid", "start_db", float,
                    DEFAULT_SNR_GRID[0])
    stop = chk.get(grid_raw, "snr_grid", "stop_db", float,
                   DEFAULT_SNR_GRID[1])
    step = chk.get(grid_raw, "snr_grid", "step_db", float,
                   DEFAULT_SNR_GRID[2])
    if not (np.isfinite(step) and step > 0):
        chk.fail("snr_grid.step_db", f"must be positive, got {step}")
        step = 1.0
    if not (np.isfinite(start) and np.isfinite(stop) and stop >= start):
        chk.fail("snr_grid.stop_db",
                 f"need stop_db >= start_db, got [{start}, {stop}]")
        start, stop = DEFAULT_SNR_GRID[0], DEFAULT_SNR_GRID[1]

    sweep_raw = raw.get("sweep", {})
    if not isinstance(sweep_raw, dict):
        chk.fail("sweep", "expected a section")
        sweep_raw = {}
    chk.known_keys(sweep_raw, "sweep", ("variable", "values"))
    variable = chk.get(sweep_raw, "sweep", "variable", str, "none")
    if variable not in SWEEP_VARIABLES:
        chk.fail("sweep.variable",
                 f"must be one of {SWEEP_VARIABLES}, got {variable!r}")
        variable = "none"
    values_raw = chk.get(sweep_raw, "sweep", "values", list, [])
    values = ()
    if variable == "none":
        if values_raw:
            chk.fail("sweep.values",
                     "must be absent or empty when variable is 'none'")
    elif not values_raw:
        chk.fail("sweep.values",
                 f"must be a nonempty list when sweeping {variable}")
    elif variable in ("tx_elements", "num_targets"):
        good = []
        for i, v in enumerate(values_raw):
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                chk.fail(f"sweep.values[{i}]",
                         f"expected an integer >= 1, got {v!r}")
            else:
                good.append(v)
        values = tuple(good)
    else:  # prior_support
        good = []
        for i, v in enumerate(values_raw):
            good.append(_check_prior(chk, v, f"sweep.values[{i}]"))
        values = tuple(good)
    if variable == "tx_elements" and cov != "identity":
        chk.fail("sweep.variable",
                 "tx_elements sweep requires tx_covariance = 'identity'")

    sim_raw = raw.get("simulation", {})
    if not isinstance(sim_raw, dict):
        chk.fail("simulation", "expected a section")
        sim_raw = {}
    chk.known_keys(sim_raw, "simulation",
                   ("enabled", "trials", "grid_step_deg", "seed"))
    sim_enabled = chk.get(sim_raw, "simulation", "enabled", bool, False)
    trials = chk.get(sim_raw, "simulation", "trials", int, DEFAULT_TRIALS)
    grid_step = chk.get(sim_raw, "simulation", "grid_step_deg", float,
                        DEFAULT_GRID_STEP_DEG)
    seed = chk.get(sim_raw, "simulation", "seed", int, DEFAULT_SEED)
    if trials < 10:
        chk.fail("simulation.trials", f"must be >= 10, got {trials}")
    if not (np.isfinite(grid_step) and grid_step > 0):
        chk.fail("simulation.grid_step_deg",
                 f"must be positive, got {grid_step}")
    if not 0 <= seed < 2**64:
        chk.fail("simulation.seed", f"must fit an unsigned 64-bit, got {seed}")

    oracle_raw = raw.get("oracle", {})
    if not isinstance(oracle_raw, dict):
        chk.fail("oracle", "expected a section")
        oracle_raw = {}
    chk.known_keys(oracle_raw, "oracle", ("enabled", "quadrature_points"))
    oracle_enabled = chk.get(oracle_raw, "oracle", "enabled", bool, False)
    qpoints = chk.get(oracle_raw, "oracle", "quadrature_points", int,
                      DEFAULT_QUAD_POINTS)
    if qpoints < 64:
        chk.fail("oracle.quadrature_points", f"must be >= 64, got {qpoints}")
    if oracle_enabled:
        if variable == "num_targets":
            if any(v != 1 for v in values):
                chk.fail("oracle.enabled",
                         "exact oracle requires num_targets = 1 for every "
                         "sweep value")
        elif k != 1:
            chk.fail("oracle.enabled",
                     f"exact oracle requires num_targets = 1, got {k}")

    out_raw = raw.get("output", {})
    if not isinstance(out_raw, dict):
        chk.fail("output", "expected a section")
        out_raw = {}
    chk.known_keys(out_raw, "output", ("path",))
    out_path = chk.get(out_raw, "output", "path", str, "results.csv")
    if not out_path:
        chk.fail("output.path", "must be a nonempty path")

    if chk.errors:
        raise ValidationError(chk.errors)

    return ExperimentConfig(
        scenario=ScenarioSpec(
            rx_elements=rx, tx_elements=tx, num_targets=k,
            snapshots=snapshots, noise_power=noise,
            amplitude_second_moment=sb, prior_support_deg=prior,
            wavelength=wavelength, tx_covariance=cov),
        snr_grid=SnrGridSpec(start_db=start, stop_db=stop, step_db=step),
        sweep=SweepSpec(variable=variable, values=values),
        simulation=SimulationSpec(enabled=sim_enabled, trials=trials,
                                  grid_step_deg=grid_step, seed=seed),
        oracle=OracleSpec(enabled=oracle_enabled,
                          quadrature_points=qpoints),
        output_path=out_path,
    )


def build_config(file_dict: Optional[dict] = None,
                 preset: Optional[str] = None) -> ExperimentConfig:
    """Merge preset and file sections (file wins field-by-field), validate."""
    if preset is not None:
        if preset not in PRESETS:
            raise ValidationError(
                [f"preset: unknown preset {preset!r}; "
                 f"choose from {tuple(PRESETS)}"])
        merged = _deep_merge(PRESETS[preset], file_dict or {})
    else:
        merged = dict(file_dict or {})
    return _validate(merged)


def parse_config(path: str, preset: Optional[str] = None) -> ExperimentConfig:
    """Load, merge with an optional preset, and fully validate."""
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"invalid TOML in {path}: {exc}") from exc
    return build_config(raw, preset)
