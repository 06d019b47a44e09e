"""Ziv-Zakai, expected CRB and a-priori bounds on DoA estimation MSE
for co-located MIMO radar with a general transmit covariance."""

from .errors import (
    AllDrawsRejected,
    ConfigError,
    DimensionMismatch,
    DoaBoundsError,
    GridTooCoarse,
    InvalidCrb,
    NotPositiveDefinite,
    ParseError,
    QuadratureNotConverged,
    SingularFisher,
    ValidationError,
)
from .radar import AmplitudeDraw, ArrayGeometry, Scenario
from .fisher import expected_crb, fisher_matrix, crb_summary, sample_prior
from .chernoff import alpha_g, p_large, HypothesisPair
from .zzb import BoundCurve, ZzbDiagnostics, apb, bound_curve, zzb, \
    zzb_exact_1d
from .simulate import SnapshotBlock, TrialResult, ml_estimate, \
    simulate_mse, synthesize
from .config import ExperimentConfig, PRESETS, build_config, parse_config
from .experiment import ResultRow, ResultTable, read_csv, run_experiment, \
    write_csv

__version__ = "0.1.0"
