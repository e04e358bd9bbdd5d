"""Parametric and permutation tests for unbalanced, heteroscedastic 2x2 designs."""

from .design import CELLS, CellSummary, Dataset, Effect, EffectSpec, contrast_vector, projection_matrix, summarize
from .distributions import DistributionSpec, raw_moments, sample_error, sample_errors
from .errors import ConfigError, InvalidInputError, SyncPermError, UnsupportedDesignError
from .numerics import SymMatrix, chi2_sf, f_sf, pseudo_inverse
from .parametric import TestResult, ats, wts
from .permutation import (
    PermutationPlan,
    SyncExchange,
    csp_test,
    sample_csp,
    sample_usp,
    sync_statistic,
    usp_test,
    wtps,
)
from .simulation import (
    EffectPattern,
    RejectionTable,
    SettingSpec,
    StudyConfig,
    build_power_setting,
    build_setting,
    generate_dataset,
    run_study,
)

__version__ = "0.1.0"
