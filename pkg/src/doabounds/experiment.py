"""Experiment orchestration: sweep x SNR evaluation and CSV emission.

Rows are computed concurrently across (sweep value, SNR point) pairs,
then sorted deterministically, so the CSV is byte-identical for any
thread count. Per-point simulation seeds derive from (master seed,
sweep index, SNR index).
"""

from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import ExperimentConfig
from .fisher import sample_prior
from .simulate import simulate_mse
from .zzb import apb, zzb, zzb_exact_1d

CSV_SCHEMA_COMMENT = "# zzb-mimo-doa v1"
CSV_COLUMNS = (
    "sweep_value", "snr_db", "zzb", "expected_crb", "apb", "mse",
    "mse_stderr", "h_tilde", "u_tilde", "gamma_term", "p_large",
    "crb_rejection_rate", "zzb_exact",
)

DEFAULT_CRB_SAMPLES = 2000


@dataclass(frozen=True)
class ResultRow:
    sweep_value: float
    snr_db: float
    zzb: float
    expected_crb: float
    apb: float
    mse: Optional[float] = None  # None when simulation is disabled
    mse_stderr: Optional[float] = None
    h_tilde: Optional[float] = None
    u_tilde: Optional[float] = None
    gamma_term: Optional[float] = None
    p_large: Optional[float] = None
    crb_rejection_rate: Optional[float] = None
    zzb_exact: Optional[float] = None  # None when the oracle is disabled

    def __post_init__(self):
        for name in ("zzb", "expected_crb", "apb"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive, got {val}")


@dataclass(frozen=True)
class ResultTable:
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    @property
    def columns(self) -> tuple:
        return CSV_COLUMNS


def _sweep_label(variable: str, value) -> float:
    """Numeric CSV key for a sweep value.

    Prior-support sweeps are keyed by their width in degrees; the
    no-sweep case uses 0.
    """
    if value is None:
        return 0.0
    if variable == "prior_support":
        return float(value[1] - value[0])
    return float(value)


def run_experiment(config: ExperimentConfig, *,
                   crb_samples: int = DEFAULT_CRB_SAMPLES,
                   progress=None) -> ResultTable:
    """Evaluate every (sweep value, SNR point) of the configured sweep.

    Bound columns are always computed; the simulation and oracle columns
    fill only when their blocks are enabled. One progress line per
    completed sweep value goes to ``progress`` (stderr by default).
    """
    if progress is None:
        progress = sys.stderr
    seed = config.simulation.seed
    snr_db = config.snr_grid.values_db()
    snr_lin = 10.0 ** (snr_db / 10.0)
    sweep_vals = config.sweep_values()

    scenarios = [config.scenario_for(v) for v in sweep_vals]
    # one shared prior sample per sweep value: common random numbers
    # across the SNR axis keep each curve smooth and thread-invariant
    prior_draws = [sample_prior(sc, crb_samples, (seed, 1000 + i))
                   for i, sc in enumerate(scenarios)]

    def evaluate(task):
        si, gi = task
        sc = scenarios[si]
        try:
            value, diag = zzb(sc, float(snr_lin[gi]),
                              prior_thetas=prior_draws[si], seed=seed)
            mse = stderr = None
            if config.simulation.enabled:
                est = simulate_mse(
                    sc, float(snr_lin[gi]), config.simulation.trials,
                    grid_step=float(np.deg2rad(
                        config.simulation.grid_step_deg)),
                    seed=(seed, si, gi))
                mse, stderr = est.mse, est.stderr
            exact = None
            if config.oracle.enabled:
                exact = zzb_exact_1d(sc.at_snr(float(snr_lin[gi])),
                                     config.oracle.quadrature_points)
            return ResultRow(
                sweep_value=_sweep_label(config.sweep.variable,
                                         sweep_vals[si]),
                snr_db=float(snr_db[gi]),
                zzb=value,
                expected_crb=diag.crb_term,
                apb=apb(sc.num_targets, sc.zeta),
                mse=mse, mse_stderr=stderr,
                h_tilde=diag.h_tilde, u_tilde=diag.u_tilde,
                gamma_term=diag.gamma_term, p_large=diag.p_large,
                crb_rejection_rate=diag.crb_rejection_rate,
                zzb_exact=exact)
        except Exception as exc:
            label = _sweep_label(config.sweep.variable, sweep_vals[si])
            raise RuntimeError(
                f"sweep {config.sweep.variable}={label:g}, "
                f"snr {snr_db[gi]:g} dB: {exc}") from exc

    tasks = [(si, gi) for si in range(len(sweep_vals))
             for gi in range(snr_db.shape[0])]
    results = {}
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            for task, row in zip(tasks, pool.map(evaluate, tasks)):
                results[task] = row
    else:
        for task in tasks:
            results[task] = evaluate(task)

    rows = []
    for si, value in enumerate(sweep_vals):
        for gi in range(snr_db.shape[0]):
            rows.append(results[(si, gi)])
        if progress is not None:
            label = _sweep_label(config.sweep.variable, value)
            print(f"sweep {config.sweep.variable}={label:g}: "
                  f"{snr_db.shape[0]} SNR points done", file=progress)
    rows.sort(key=lambda r: (r.sweep_value, r.snr_db))
    return ResultTable(rows=tuple(rows))


def _format_cell(value) -> str:
    if value is None:
        return ""
    return f"{float(value):.12g}"


def write_csv(table: ResultTable, path: str) -> None:
    """Emit the table: schema comment, header, one line per row,
    12 significant digits, empty string for disabled columns."""
    lines = [CSV_SCHEMA_COMMENT, ",".join(CSV_COLUMNS)]
    for row in table.rows:
        lines.append(",".join(_format_cell(getattr(row, name))
                              for name in CSV_COLUMNS))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def read_csv(path: str) -> ResultTable:
    """Parse a file produced by write_csv back into a table."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [ln.rstrip("\n") for ln in handle]
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path} lacks the schema comment line")
    header = tuple(lines[1].split(","))
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected header {header}")
    rows = []
    for ln in lines[2:]:
        if not ln:
            continue
        cells = ln.split(",")
        kwargs = {name: (None if cell == "" else float(cell))
                  for name, cell in zip(CSV_COLUMNS, cells)}
        rows.append(ResultRow(**kwargs))
    return ResultTable(rows=tuple(rows))
