"""Imbalanced tabular classification: resampling, learners, stacking, metrics and explanations."""

from ._imbalkit import (
    ConfigError,
    DataError,
    Model,
    NumericError,
    __version__,
    benchmark,
    bonferroni_adjust,
    chi2_sf,
    compare,
    cronbach_alpha,
    eda,
    evaluate,
    explain,
    paired_t_test,
    roc_auc,
    smote,
    synthetic_csv,
    t_two_tailed_p,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Model",
    "NumericError",
    "__version__",
    "benchmark",
    "bonferroni_adjust",
    "chi2_sf",
    "compare",
    "cronbach_alpha",
    "eda",
    "evaluate",
    "explain",
    "paired_t_test",
    "roc_auc",
    "smote",
    "synthetic_csv",
    "t_two_tailed_p",
]
