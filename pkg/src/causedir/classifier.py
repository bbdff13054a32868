"""End-to-end causal direction decision between two columns.

Pipeline: standardize all continuous columns, split the sample in half by
a seeded permutation, fit one additive regression per direction on the
training half, form out-of-sample residuals on the test half, score each
direction by the conditional independence of its residuals from its
regressor given the controls, and pick the direction with the smaller
statistic. With no controls the unconditional statistic is used. The two
statistics are compared strictly; an exact tie is reported as
inconclusive rather than broken arbitrarily.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .independence import KciConfig, hsic_statistic, kci_statistic
from .regression import TermSpec, fit_additive, residuals

MIN_ROWS = 8


class Direction(enum.Enum):
    X_TO_Y = "x->y"
    Y_TO_X = "y->x"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ProblemSpec:
    """Which columns play which role, plus pipeline settings."""

    x: str
    y: str
    w: tuple[str, ...] = ()
    seed: int = 0
    kci: KciConfig = field(default_factory=KciConfig)
    n_basis: int = 10
    causal_terms: tuple[TermSpec, ...] | None = None
    anticausal_terms: tuple[TermSpec, ...] | None = None

    def __post_init__(self) -> None:
        if self.x == self.y:
            raise ValueError("x and y must name different columns")
        if self.x in self.w or self.y in self.w:
            raise ValueError("x and y cannot also appear among the controls")
        if len(set(self.w)) != len(self.w):
            raise ValueError("duplicate control columns")


@dataclass(frozen=True)
class DirectionDecision:
    outcome: Direction
    stat_causal: float
    stat_anticausal: float
    n_train: int
    n_test: int
    seed: int


def normalize(data: Dataset) -> Dataset:
    """Standardize every continuous column to mean 0, variance 1 (ddof=1).

    Categorical columns pass through untouched. A constant continuous
    column is an error naming the column.
    """
    values = data.values.copy()
    for i, name in enumerate(data.names):
        if name in data.categorical:
            continue
        col = values[:, i]
        sd = col.std(ddof=1) if len(col) > 1 else 0.0
        if not sd > 0:
            raise ValueError(f"column {name!r} has zero variance; cannot normalize")
        values[:, i] = (col - col.mean()) / sd
    return Dataset(names=data.names, values=values, categorical=data.categorical)


def split(data: Dataset, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded uniform half split; train takes the extra row when n is odd."""
    if data.n < MIN_ROWS:
        raise ValueError(f"need at least {MIN_ROWS} rows to split, got {data.n}")
    perm = np.random.default_rng(seed).permutation(data.n)
    n_train = math.ceil(data.n / 2)
    return data.take(perm[:n_train]), data.take(perm[n_train:])


def _regression_terms(
    data: Dataset, w: tuple[str, ...], n_basis: int, levels: dict[str, tuple[float, ...]]
) -> tuple[TermSpec, ...]:
    terms = [TermSpec.spline(0, n_basis)]
    for j, name in enumerate(w, start=1):
        if name in data.categorical:
            terms.append(TermSpec.categorical(j, levels[name]))
        else:
            terms.append(TermSpec.spline(j, n_basis))
    return tuple(terms)


def _in_step(step: str, fn, *args):
    try:
        return fn(*args)
    except Exception as exc:
        exc.args = (f"[{step}] {exc}",) + exc.args[1:]
        raise


def decide(data: Dataset, spec: ProblemSpec) -> DirectionDecision:
    """Run the full pipeline and return the direction decision.

    Deterministic given (data, spec): the split permutation is the only
    random element and is driven by ``spec.seed``. Failures carry the name
    of the pipeline step in the message.
    """
    for name in (spec.x, spec.y, *spec.w):
        if name not in data.names:
            raise ValueError(f"column {name!r} not present in the data")
    for name in (spec.x, spec.y):
        if name in data.categorical:
            raise ValueError(f"column {name!r} is categorical; x and y must be continuous")

    norm = _in_step("normalize", normalize, data)
    train, test = _in_step("split", split, norm, spec.seed)
    levels = {
        name: tuple(float(v) for v in np.unique(norm.column(name)))
        for name in spec.w
        if name in norm.categorical
    }

    terms_c = spec.causal_terms or _regression_terms(norm, spec.w, spec.n_basis, levels)
    terms_a = spec.anticausal_terms or _regression_terms(norm, spec.w, spec.n_basis, levels)

    w_train = train.matrix(spec.w)
    w_test = test.matrix(spec.w)
    gam_causal = _in_step(
        "fit-causal", fit_additive,
        train.column(spec.y), np.column_stack([train.column(spec.x)[:, None], w_train]), terms_c,
    )
    gam_anticausal = _in_step(
        "fit-anticausal", fit_additive,
        train.column(spec.x), np.column_stack([train.column(spec.y)[:, None], w_train]), terms_a,
    )
    resid_causal = _in_step(
        "residuals-causal", residuals,
        gam_causal, test.column(spec.y), np.column_stack([test.column(spec.x)[:, None], w_test]),
    )
    resid_anticausal = _in_step(
        "residuals-anticausal", residuals,
        gam_anticausal, test.column(spec.x), np.column_stack([test.column(spec.y)[:, None], w_test]),
    )

    if spec.w:
        w_enc = test.encoded_matrix(spec.w, levels)
        stat_c = _in_step(
            "kci-causal", kci_statistic,
            np.column_stack([test.column(spec.x)[:, None], w_enc]), resid_causal, w_enc, spec.kci,
        )
        stat_a = _in_step(
            "kci-anticausal", kci_statistic,
            np.column_stack([test.column(spec.y)[:, None], w_enc]), resid_anticausal, w_enc, spec.kci,
        )
    else:
        stat_c = _in_step(
            "hsic-causal", hsic_statistic,
            test.column(spec.x), resid_causal, spec.kci.bandwidth_policy,
        )
        stat_a = _in_step(
            "hsic-anticausal", hsic_statistic,
            test.column(spec.y), resid_anticausal, spec.kci.bandwidth_policy,
        )

    if stat_c.statistic < stat_a.statistic:
        outcome = Direction.X_TO_Y
    elif stat_c.statistic > stat_a.statistic:
        outcome = Direction.Y_TO_X
    else:
        outcome = Direction.INCONCLUSIVE
    return DirectionDecision(
        outcome=outcome,
        stat_causal=stat_c.statistic,
        stat_anticausal=stat_a.statistic,
        n_train=train.n,
        n_test=test.n,
        seed=spec.seed,
    )
