"""Proportion <-> double-arcsine scale, confusion-matrix metrics and the
chance benchmark accuracy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .special import t_quantile

__all__ = [
    "ProportionOutcome",
    "EffectSize",
    "ConfusionMatrix",
    "ClassMetrics",
    "BacktransformedEstimate",
    "da_transform",
    "da_inverse",
    "backtransform_ci",
    "overall_accuracy",
    "class_metrics",
    "benchmark_accuracy",
    "benchmark_from_matrix",
    "da_transform_array",
    "da_inverse_array",
]

_RADICAND_TOL = 1e-12


@dataclass(frozen=True)
class ProportionOutcome:
    k: int
    n: int

    def __post_init__(self):
        if isinstance(self.k, bool) or isinstance(self.n, bool):
            raise TypeError("k and n must be integers")
        if int(self.k) != self.k or int(self.n) != self.n:
            raise ValueError(f"k and n must be integers, got k={self.k!r}, n={self.n!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "n", int(self.n))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"need 0 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def p(self) -> float:
        return self.k / self.n


@dataclass(frozen=True)
class EffectSize:
    theta: float
    v: float


@dataclass(frozen=True)
class BacktransformedEstimate:
    p_bar: float
    lcb: float
    ucb: float
    n_hat: float


class ConfusionMatrix:
    """A q x q count table; rows are observed classes, columns predicted."""

    def __init__(self, counts):
        arr = np.asarray(counts)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"confusion matrix must be square, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError("confusion matrix needs at least 2 classes")
        if not np.all(np.equal(np.mod(arr, 1), 0)) or np.any(arr < 0):
            raise ValueError("confusion matrix counts must be non-negative integers")
        arr = arr.astype(np.int64)
        if arr.sum() <= 0:
            raise ValueError("confusion matrix total count must be positive")
        self.counts = arr
        self.counts.setflags(write=False)

    @property
    def q(self) -> int:
        return self.counts.shape[0]

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)


@dataclass(frozen=True)
class ClassMetrics:
    """Per-class recall/precision/F1. ``None`` marks an undefined value
    (zero marginal), which is never the same thing as 0."""

    recall: tuple
    precision: tuple
    f1: tuple


def da_transform(outcome: ProportionOutcome) -> EffectSize:
    """Freeman-Tukey double arcsine of k/n with sampling variance 1/(4n+2)."""
    k, n = outcome.k, outcome.n
    theta = 0.5 * (math.asin(math.sqrt(k / (n + 1))) + math.asin(math.sqrt((k + 1) / (n + 1))))
    return EffectSize(theta=theta, v=1.0 / (4 * n + 2))


def _da_real(k, n):
    # same expression for a real-valued sample size
    return 0.5 * (math.asin(math.sqrt(k / (n + 1))) + math.asin(math.sqrt((k + 1) / (n + 1))))


def da_inverse(gamma: float, n_hat: float) -> float:
    """Back-transform a *doubled* double-arcsine value ``gamma`` to a proportion.

    Values of ``gamma`` at or beyond the transform of k=0 (resp. k=n_hat) map to
    0 (resp. 1); below that point the closed form folds back on itself.
    ``n_hat = inf`` gives the limit ``(1 - cos(gamma)) / 2``.
    """
    gamma = float(gamma)
    n_hat = float(n_hat)
    if not math.isfinite(gamma) or math.isnan(n_hat):
        raise ValueError(f"da_inverse needs finite gamma and a numeric n_hat, got gamma={gamma!r}, n_hat={n_hat!r}")
    if n_hat <= 0.0:
        raise ValueError(f"n_hat must be positive, got {n_hat}")
    if not 0.0 <= gamma <= math.pi:
        raise ValueError(f"gamma={gamma} lies outside [0, pi]; not a doubled DA value")
    edge = 2.0 * _da_real(0.0, n_hat)
    if gamma <= edge:
        return 0.0
    if gamma >= math.pi - edge:
        return 1.0
    s = math.sin(gamma)
    inner = s + (s - 1.0 / s) / n_hat
    radicand = 1.0 - inner * inner
    if radicand < 0.0:
        if radicand < -_RADICAND_TOL:
            raise ValueError(
                f"negative radicand {radicand:.3e} in da_inverse: gamma={gamma} inconsistent with n_hat={n_hat}"
            )
        radicand = 0.0
    sign = math.copysign(1.0, math.cos(gamma))
    if math.cos(gamma) == 0.0:
        sign = 0.0
    p = 0.5 * (1.0 - sign * math.sqrt(radicand))
    if p < 0.0:
        if p < -_RADICAND_TOL:
            raise ValueError(f"da_inverse produced p={p}")
        p = 0.0
    elif p > 1.0:
        if p > 1.0 + _RADICAND_TOL:
            raise ValueError(f"da_inverse produced p={p}")
        p = 1.0
    return p


def backtransform_ci(mu, var_mu, h, alpha=0.05, n_hat=None) -> BacktransformedEstimate:
    """Back-transform a DA-scale estimate and its t-based interval.

    ``n_hat`` defaults to ``1 / var_mu`` (inverse variance as effective sample
    size). Bounds are forced to 0/1 when the expected count on that side is
    below 2.
    """
    if h < 2:
        raise ValueError(f"need h >= 2 studies for t_(h-1), got h={h}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not var_mu >= 0.0:
        raise ValueError(f"var_mu must be >= 0, got {var_mu}")
    if n_hat is None:
        if var_mu == 0.0:
            raise ValueError("n_hat cannot default to 1/var_mu when var_mu == 0")
        n_hat = 1.0 / var_mu
    p_bar = da_inverse(_clip_gamma(2.0 * mu), n_hat)
    half = t_quantile(1.0 - alpha / 2.0, h - 1) * math.sqrt(var_mu)
    if p_bar * n_hat < 2.0:
        lcb = 0.0
    else:
        lcb = da_inverse(_clip_gamma(2.0 * (mu - half)), n_hat)
    if (1.0 - p_bar) * n_hat < 2.0:
        ucb = 1.0
    else:
        ucb = da_inverse(_clip_gamma(2.0 * (mu + half)), n_hat)
    lcb = min(lcb, p_bar)
    ucb = max(ucb, p_bar)
    return BacktransformedEstimate(p_bar=p_bar, lcb=lcb, ucb=ucb, n_hat=float(n_hat))


def _clip_gamma(g):
    # interval ends may step past the DA range; those saturate at 0 or 1
    return min(max(g, 0.0), math.pi)


def overall_accuracy(cm: ConfusionMatrix) -> ProportionOutcome:
    return ProportionOutcome(k=int(np.trace(cm.counts)), n=cm.n)


def class_metrics(cm: ConfusionMatrix) -> ClassMetrics:
    diag = np.diag(cm.counts)
    rows, cols = cm.row_sums, cm.col_sums
    recall, precision, f1 = [], [], []
    for r in range(cm.q):
        rec = diag[r] / rows[r] if rows[r] > 0 else None
        prec = diag[r] / cols[r] if cols[r] > 0 else None
        if rec is None or prec is None:
            f = None
        elif rec + prec == 0:
            f = 0.0
        else:
            f = 2.0 * rec * prec / (rec + prec)
        recall.append(None if rec is None else float(rec))
        precision.append(None if prec is None else float(prec))
        f1.append(None if f is None else float(f))
    return ClassMetrics(tuple(recall), tuple(precision), tuple(f1))


def benchmark_accuracy(class_counts: Sequence[float]) -> float:
    """Accuracy of guessing each class with its prevalence: sum of squared shares."""
    counts = np.asarray(class_counts, dtype=float)
    if counts.ndim != 1 or counts.size < 2:
        raise ValueError("benchmark_accuracy needs at least 2 class counts")
    if np.any(counts < 0) or not np.all(np.isfinite(counts)):
        raise ValueError("class counts must be finite and non-negative")
    total = counts.sum()
    if total <= 0:
        raise ValueError("class counts are all zero")
    shares = counts / total
    return float(np.sum(shares * shares))


def benchmark_from_matrix(cm: ConfusionMatrix) -> float:
    return benchmark_accuracy(cm.row_sums)


def harmonic_mean_n(ns: Sequence[int]) -> Optional[float]:
    """Harmonic-mean sample size m / sum(1/n), the older n_hat choice."""
    ns = np.asarray(ns, dtype=float)
    if ns.size == 0:
        return None
    return float(ns.size / np.sum(1.0 / ns))


def da_transform_array(k, n):
    """Vectorized double arcsine; returns (theta, v) arrays."""
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(n < 1) or np.any(k < 0) or np.any(k > n):
        raise ValueError("need 0 <= k <= n and n >= 1")
    theta = 0.5 * (np.arcsin(np.sqrt(k / (n + 1))) + np.arcsin(np.sqrt((k + 1) / (n + 1))))
    return theta, 1.0 / (4 * n + 2)


def da_inverse_array(gamma, n_hat):
    """Vectorized :func:`da_inverse` (same saturation and radicand rules)."""
    gamma, n_hat = np.broadcast_arrays(np.asarray(gamma, dtype=float), np.asarray(n_hat, dtype=float))
    if not np.all(np.isfinite(gamma)) or np.any(np.isnan(n_hat)):
        raise ValueError("da_inverse_array needs finite gamma and numeric n_hat")
    if np.any(n_hat <= 0):
        raise ValueError("n_hat must be positive")
    if np.any((gamma < 0) | (gamma > math.pi)):
        raise ValueError("gamma outside [0, pi]")
    edge = np.arcsin(np.sqrt(1.0 / (n_hat + 1)))
    s = np.sin(gamma)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = s + (s - 1.0 / s) / n_hat
        radicand = 1.0 - inner * inner
    interior = (gamma > edge) & (gamma < math.pi - edge)
    if np.any(interior & (radicand < -_RADICAND_TOL)):
        raise ValueError("negative radicand in da_inverse_array")
    root = np.sqrt(np.clip(np.where(interior, radicand, 0.0), 0.0, None))
    p = 0.5 * (1.0 - np.sign(np.cos(gamma)) * root)
    p = np.where(gamma <= edge, 0.0, np.where(gamma >= math.pi - edge, 1.0, p))
    return np.clip(p, 0.0, 1.0)
