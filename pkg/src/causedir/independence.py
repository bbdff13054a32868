"""Kernel-based independence statistics for residual diagnostics.

Conditional dependence of A and B given W is scored by the trace statistic
tr(K_{A|W} K_{B|W}) / n, where K_{.|W} projects a centered Gram matrix
through the kernel-ridge residual operator of W. Without a conditioning
set, the unconditional analogue tr(K_A K_B) / n^2 is used. Small values
indicate independence; no null distribution or p-value is attached, so
statistics are only ever compared against each other at equal n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import NumericError
from .kernel import BandwidthPolicy, GramMatrix, center, gram, resolve_bandwidth

# Roundoff slack below zero before a statistic is considered broken.
_NEGATIVE_TOL = 1e-10


@dataclass(frozen=True)
class KciConfig:
    """Hyperparameters of the conditional independence statistic."""

    bandwidth_policy: BandwidthPolicy = BandwidthPolicy()
    ridge: float = 1e-3

    def __post_init__(self) -> None:
        if not self.ridge > 0:
            raise ValueError(f"ridge must be positive, got {self.ridge}")


@dataclass(frozen=True)
class KciResult:
    """A nonnegative independence statistic plus the settings that produced it.

    ``bandwidth_w`` and ``ridge`` are None for unconditional statistics,
    which involve no conditioning kernel.
    """

    statistic: float
    n: int
    bandwidth_xu: float
    bandwidth_w: float | None
    ridge: float | None
    conditional: bool


def _clamp_nonnegative(value: float) -> float:
    if value >= 0.0:
        return value
    if value > -_NEGATIVE_TOL:
        return 0.0
    raise NumericError(f"independence statistic is negative beyond roundoff: {value}")


def _as_2d(name: str, arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    if out.ndim == 1:
        out = out[:, None]
    if out.ndim != 2:
        raise ValueError(f"{name} must be an n x d matrix, got shape {out.shape}")
    return out


def ridge_residual_operator(kw_centered: GramMatrix, ridge: float) -> np.ndarray:
    """Residual-maker of kernel ridge regression on W.

    Returns I - K(K + ridge*I)^{-1}, computed in the equivalent form
    ridge * (K + ridge*I)^{-1}, which is symmetric with eigenvalues
    ridge/(mu_i + ridge) in (0, 1].
    """
    if not kw_centered.centered:
        raise ValueError("conditioning Gram matrix must be centered")
    if not ridge > 0:
        raise ValueError(f"ridge must be positive, got {ridge}")
    n = kw_centered.n
    shifted = kw_centered.values + ridge * np.eye(n)
    try:
        factor = cho_factor(shifted, lower=True)
        rw = ridge * cho_solve(factor, np.eye(n))
    except LinAlgError as exc:
        raise NumericError(f"ridge operator factorization failed: {exc}") from exc
    return 0.5 * (rw + rw.T)


def kci_statistic(
    x_aug: np.ndarray, u: np.ndarray, w: np.ndarray, cfg: KciConfig = KciConfig()
) -> KciResult:
    """Conditional independence statistic of x_aug and u given w.

    ``x_aug`` is the regressor augmented with the conditioning columns,
    shape (n, 1 + dim W); ``u`` the residual column; ``w`` the conditioning
    matrix with at least one column. Bandwidths come from the policy at
    this n, with the conditioning kernel at the halved value.
    """
    x_aug = _as_2d("x_aug", x_aug)
    u = _as_2d("u", u)
    w = _as_2d("w", w)
    n = x_aug.shape[0]
    if u.shape[0] != n or w.shape[0] != n:
        raise ValueError(
            f"row-count mismatch: x_aug has {n}, u has {u.shape[0]}, w has {w.shape[0]}"
        )
    if n < 4:
        raise ValueError(f"need at least 4 rows, got {n}")
    if w.shape[1] < 1:
        raise ValueError("conditioning set is empty; use hsic_statistic instead")

    bw_xu = resolve_bandwidth(n, cfg.bandwidth_policy, is_conditioning_set=False)
    bw_w = resolve_bandwidth(n, cfg.bandwidth_policy, is_conditioning_set=True)
    kx = center(gram(x_aug, bw_xu)).values
    ku = center(gram(u, bw_xu)).values
    kw = center(gram(w, bw_w))
    rw = ridge_residual_operator(kw, cfg.ridge)
    kx_given_w = rw @ kx @ rw
    ku_given_w = rw @ ku @ rw
    statistic = _clamp_nonnegative(float(np.sum(kx_given_w * ku_given_w)) / n)
    return KciResult(
        statistic=statistic,
        n=n,
        bandwidth_xu=bw_xu,
        bandwidth_w=bw_w,
        ridge=cfg.ridge,
        conditional=True,
    )


def hsic_statistic(
    x: np.ndarray, u: np.ndarray, policy: BandwidthPolicy = BandwidthPolicy()
) -> KciResult:
    """Unconditional independence statistic tr(K_x K_u) / n^2 on centered Grams.

    Fallback for an empty conditioning set; not comparable with conditional
    statistics because of the different trace normalization.
    """
    x = _as_2d("x", x)
    u = _as_2d("u", u)
    n = x.shape[0]
    if u.shape[0] != n:
        raise ValueError(f"row-count mismatch: x has {n}, u has {u.shape[0]}")
    if n < 4:
        raise ValueError(f"need at least 4 rows, got {n}")
    bw = resolve_bandwidth(n, policy, is_conditioning_set=False)
    kx = center(gram(x, bw)).values
    ku = center(gram(u, bw)).values
    statistic = _clamp_nonnegative(float(np.sum(kx * ku)) / (n * n))
    return KciResult(
        statistic=statistic,
        n=n,
        bandwidth_xu=bw,
        bandwidth_w=None,
        ridge=None,
        conditional=False,
    )
