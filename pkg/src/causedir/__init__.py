"""Causal direction discovery between two variables via residual independence."""

from .classifier import (
    Direction,
    DirectionDecision,
    ProblemSpec,
    decide,
    normalize,
    split,
)
from .dataset import Dataset
from .errors import NumericError
from .independence import KciConfig, KciResult, hsic_statistic, kci_statistic, ridge_residual_operator
from .kernel import BandwidthPolicy, GramMatrix, center, gauss_kernel, gram, resolve_bandwidth
from .regression import (
    FittedAdditiveModel,
    TermSpec,
    fit_additive,
    predict,
    residuals,
    term_contributions,
)
from .simulation import (
    CellResult,
    DgpConfig,
    GridResult,
    default_grid,
    draw_sample,
    replicate_seed,
    run_cell,
    run_grid,
    variance_constant,
)

__version__ = "0.1.0"

__all__ = [
    "BandwidthPolicy",
    "CellResult",
    "Dataset",
    "DgpConfig",
    "Direction",
    "DirectionDecision",
    "FittedAdditiveModel",
    "GramMatrix",
    "GridResult",
    "KciConfig",
    "KciResult",
    "NumericError",
    "ProblemSpec",
    "TermSpec",
    "center",
    "decide",
    "default_grid",
    "draw_sample",
    "fit_additive",
    "gauss_kernel",
    "gram",
    "hsic_statistic",
    "kci_statistic",
    "normalize",
    "predict",
    "replicate_seed",
    "residuals",
    "ridge_residual_operator",
    "resolve_bandwidth",
    "run_cell",
    "run_grid",
    "split",
    "term_contributions",
    "variance_constant",
    "__version__",
]
