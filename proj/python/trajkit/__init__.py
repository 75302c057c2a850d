"""Trajectory prediction metrics and Social-Implicit training (native core)."""

from ._core import (
    TrajkitError,
    __version__,
    checkpoint_param_count,
    default_param_count,
    evaluate,
    fit_gmm,
    load_scenes,
    mahalanobis_gmm,
    run_cli,
)

__all__ = [
    "TrajkitError",
    "__version__",
    "checkpoint_param_count",
    "default_param_count",
    "evaluate",
    "fit_gmm",
    "load_scenes",
    "mahalanobis_gmm",
    "run_cli",
]
