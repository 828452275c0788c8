"""Three-level random-effects model: marginal covariance, REML/ML estimation
of the between- and within-study variances, pooled effect, heterogeneity
statistics and study-level shrinkage estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .data import Dataset, FeatureMatrix
from .errors import ConvergenceError, DataError, RankDeficiencyError
from .special import chisq_sf

__all__ = [
    "VarianceComponents",
    "ISquared",
    "QTest",
    "StudyEffect",
    "FitResult",
    "marginal_covariance",
    "block_weight_solve",
    "pooled_sampling_variance",
    "i_squared",
    "i_squared_components",
    "cochran_q",
    "reml_fit",
    "ml_fit",
    "study_shrinkage",
    "format_pvalue",
]

VARIANCE_FLOOR = 1e-12
_LOG_FLOOR = math.log(VARIANCE_FLOOR)
_LOG_CEIL = math.log(100.0)
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class VarianceComponents:
    sigma2_xi: float
    sigma2_zeta: float
    xi_at_boundary: bool = False
    zeta_at_boundary: bool = False

    def __post_init__(self):
        for name in ("sigma2_xi", "sigma2_zeta"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {val!r}")


@dataclass(frozen=True)
class ISquared:
    """Shares of total variance; all ``None`` when the total is zero."""

    xi: Optional[float]
    zeta: Optional[float]
    eps: Optional[float]


@dataclass(frozen=True)
class QTest:
    q: float
    df: int
    pvalue: float


@dataclass(frozen=True)
class StudyEffect:
    study_id: str
    kappa: float
    var: float
    m: int


@dataclass
class FitResult:
    components: VarianceComponents
    beta: np.ndarray
    cov_beta: np.ndarray
    columns: tuple
    q: QTest
    sigma2_eps: float
    i2: ISquared
    loglik: float
    method: str
    h: int
    m: int
    X: np.ndarray = field(repr=False)
    study_effects: tuple = ()
    n_fev: int = 0
    restarts: int = 0

    @property
    def p(self) -> int:
        return len(self.beta)

    @property
    def mu(self) -> float:
        return float(self.beta[0])

    @property
    def var_mu(self) -> float:
        return float(self.cov_beta[0, 0])

    @property
    def se_mu(self) -> float:
        return math.sqrt(self.var_mu)

    @property
    def n_hat(self) -> float:
        """Inverse-variance sample size for back-transformation (inf when Var(mu) = 0)."""
        return 1.0 / self.var_mu if self.var_mu > 0.0 else math.inf

    @property
    def se_beta(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov_beta))

    # flat aliases
    @property
    def sigma2_xi(self) -> float:
        return self.components.sigma2_xi

    @property
    def sigma2_zeta(self) -> float:
        return self.components.sigma2_zeta

    @property
    def q_stat(self) -> float:
        return self.q.q

    @property
    def q_df(self) -> int:
        return self.q.df

    @property
    def q_pvalue(self) -> float:
        return self.q.pvalue

    def fitted(self) -> np.ndarray:
        """Fixed-effects predictions on the DA scale."""
        return self.X @ self.beta


def marginal_covariance(components: VarianceComponents, dataset: Dataset) -> list:
    """Per-study blocks J*s2xi + I*s2zeta + diag(v); the full matrix is
    their direct sum."""
    blocks = []
    for j in range(dataset.h):
        a, b = dataset.starts[j], dataset.starts[j + 1]
        size = b - a
        block = np.full((size, size), components.sigma2_xi)
        block[np.diag_indices(size)] += components.sigma2_zeta + dataset.v[a:b]
        blocks.append(block)
    return blocks


def block_weight_solve(components: VarianceComponents, dataset: Dataset, rhs):
    """Apply W = M^-1 to ``rhs`` (vector or columns); returns ``(W @ rhs, log|M|)``."""
    return kernels.block_solve(dataset.v, dataset.starts, components.sigma2_xi,
                               components.sigma2_zeta, rhs)


def pooled_sampling_variance(v) -> float:
    """Typical within-trial variance (m-1) sum(w) / ((sum w)^2 - sum w^2), w = 1/v."""
    v = np.asarray(v, dtype=float)
    m = v.size
    if m < 2:
        raise DataError("pooled sampling variance needs m >= 2 trials")
    w = 1.0 / v
    sw = w.sum()
    denom = sw * sw - np.sum(w * w)
    if denom <= 0.0:
        raise DataError("pooled sampling variance undefined (degenerate weights)")
    return float((m - 1) * sw / denom)


def i_squared_components(sigma2_xi, sigma2_zeta, sigma2_eps) -> ISquared:
    total = sigma2_xi + sigma2_zeta + sigma2_eps
    if total <= 0.0:
        return ISquared(None, None, None)
    return ISquared(sigma2_xi / total, sigma2_zeta / total, sigma2_eps / total)


def i_squared(fit: FitResult) -> ISquared:
    return i_squared_components(fit.sigma2_xi, fit.sigma2_zeta, fit.sigma2_eps)


def _design(dataset: Dataset, X) -> np.ndarray:
    if X is None:
        return np.ones((dataset.m, 1))
    if isinstance(X, FeatureMatrix):
        X = X.values
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != dataset.m:
        raise DataError(f"design matrix must have {dataset.m} rows, got shape {X.shape}")
    return X


def _columns(X_in, p):
    if isinstance(X_in, FeatureMatrix):
        return X_in.columns
    return ("intercept",) + tuple(f"x{i}" for i in range(1, p))


def check_rank(X: np.ndarray):
    m, p = X.shape
    if p >= m:
        raise RankDeficiencyError(f"need more trials than columns (m={m}, p={p})")
    rank = np.linalg.matrix_rank(X)
    if rank < p:
        raise RankDeficiencyError(f"design matrix has rank {rank} < {p} columns")


def cochran_q(dataset: Dataset, X=None) -> QTest:
    """Residual heterogeneity of a fixed-effects fit with weights 1/v."""
    Xd = _design(dataset, X)
    return _cochran_q(dataset.theta, dataset.v, Xd)


def _cochran_q(theta, v, X):
    m, p = X.shape
    df = m - p
    if df <= 0:
        raise DataError(f"Cochran's Q needs m > p (m={m}, p={p})")
    w = 1.0 / v
    Xw = X * w[:, None]
    # With an intercept the residuals are shift invariant; centring on the
    # first effect makes identical effects give exactly zero residuals.
    shift = theta[0] if np.any(np.all(X == 1.0, axis=0)) else 0.0
    centred = theta - shift
    beta = np.linalg.solve(X.T @ Xw, Xw.T @ centred)
    r = centred - X @ beta
    q = float(np.sum(w * r * r))
    if q < 0.0:
        q = 0.0
    return QTest(q=q, df=int(df), pvalue=chisq_sf(q, df))


class _Objective:
    """Negative (restricted) log-likelihood as a function of the two variances."""

    def __init__(self, theta, v, starts, X, method):
        self.theta, self.v, self.starts, self.X = theta, v, starts, X
        self.m, self.p = X.shape
        self.reml = method == "REML"
        self.nfev = 0

    def parts(self, s2xi, s2zeta):
        A, b, ytwy, logdet = kernels.weighted_sums(self.v, self.starts, s2xi, s2zeta, self.X, self.theta)
        L = np.linalg.cholesky(A)
        beta = np.linalg.solve(L.T, np.linalg.solve(L, b))
        rwr = ytwy - float(b @ beta)
        return A, L, beta, rwr, logdet

    def __call__(self, s2xi, s2zeta):
        self.nfev += 1
        try:
            _, L, _, rwr, logdet = self.parts(s2xi, s2zeta)
        except np.linalg.LinAlgError:
            return math.inf
        if self.reml:
            val = (self.m - self.p) * _LOG_2PI + logdet + 2.0 * np.sum(np.log(np.diag(L))) + rwr
        else:
            val = self.m * _LOG_2PI + logdet + rwr
        return 0.5 * float(val)


def _moment_start(theta, v, starts, X):
    """Rough method-of-moments split of residual variance into the two levels."""
    beta, *_ = np.linalg.lstsq(X, theta, rcond=None)
    r = theta - X @ beta
    vbar = float(np.mean(v))
    sizes = np.diff(starts)
    means = np.add.reduceat(r, starts[:-1]) / sizes
    within_ss = float(np.sum((r - np.repeat(means, sizes)) ** 2))
    within_df = int(np.sum(sizes - 1))
    floor = max(1e-4 * vbar, 1e-8)
    if within_df > 0:
        s2zeta = max(within_ss / within_df - vbar, floor)
    else:
        s2zeta = floor
    between = float(np.var(means, ddof=1)) if means.size > 1 else 0.0
    s2xi = max(between - (s2zeta + vbar) * float(np.mean(1.0 / sizes)), floor)
    return s2xi, s2zeta


def _fit_arrays(theta, v, starts, X, method="REML", fix_sigma2_zeta=None, n_restarts=3):
    """Optimize the variance components for raw arrays; returns
    (components, objective, best value, nfev, restarts used)."""
    obj = _Objective(theta, v, starts, X, method)
    s2xi0, s2zeta0 = _moment_start(theta, v, starts, X)
    fixed = fix_sigma2_zeta is not None
    if fixed:
        fix_sigma2_zeta = float(fix_sigma2_zeta)
        if fix_sigma2_zeta < 0.0:
            raise ValueError("fixed sigma2_zeta must be >= 0")
        s2xi0 = max(s2xi0 + s2zeta0 - fix_sigma2_zeta, s2xi0)

    def unpack(x):
        s2xi = math.exp(min(max(x[0], _LOG_FLOOR), _LOG_CEIL))
        if fixed:
            return s2xi, fix_sigma2_zeta
        return s2xi, math.exp(min(max(x[1], _LOG_FLOOR), _LOG_CEIL))

    def f(x):
        return obj(*unpack(x))

    base = np.log([s2xi0] if fixed else [s2xi0, s2zeta0])
    starts_list = [base]
    # dispersed restarts around the moment start
    for shift in ([2.0, -2.0], [-2.0, 2.0], [-3.0, -3.0])[: max(n_restarts - 1, 0)]:
        starts_list.append(base + np.array(shift[: base.size]))
    dim = base.size
    bounds = [(_LOG_FLOOR, _LOG_CEIL)] * dim
    best = None
    n_ok = 0
    for x0 in starts_list:
        x0 = np.clip(x0, _LOG_FLOOR, _LOG_CEIL)
        simplex = np.vstack([x0] + [x0 + np.eye(dim)[i] * (1.0 if x0[i] < _LOG_CEIL - 1 else -1.0)
                                     for i in range(dim)])
        f0 = f(x0)
        if not math.isfinite(f0):
            continue
        res = minimize(
            f, x0, method="Nelder-Mead", bounds=bounds,
            options={
                "initial_simplex": simplex,
                "xatol": 1e-8,
                "fatol": 1e-10 * max(1.0, abs(f0)),
                "maxiter": 4000 * dim,
                "maxfev": 8000 * dim,
            },
        )
        if res.success and math.isfinite(res.fun):
            n_ok += 1
        if math.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None or n_ok == 0:
        raise ConvergenceError(f"{method} optimizer did not converge from any start")

    s2xi, s2zeta = unpack(best.x)
    fval = float(best.fun)
    tol = 1e-9 * max(1.0, abs(fval))
    xi_b = zeta_b = False
    # boundary: snap a component to exactly zero if that is no worse
    f_xi0 = obj(0.0, s2zeta)
    if f_xi0 <= fval + tol:
        s2xi, fval, xi_b = 0.0, min(fval, f_xi0), True
    if not fixed:
        f_z0 = obj(s2xi, 0.0)
        if f_z0 <= fval + tol:
            s2zeta, fval, zeta_b = 0.0, min(fval, f_z0), True
    comps = VarianceComponents(s2xi, s2zeta, xi_b, zeta_b)
    return comps, obj, fval, obj.nfev, len(starts_list)


def reml_fit(dataset: Dataset, X=None, *, method: str = "REML", fix_sigma2_zeta=None,
             n_restarts: int = 3) -> FitResult:
    """Fit the three-level model with design ``X`` (intercept first).

    ``method`` is ``"REML"`` (default) or ``"ML"``. ``fix_sigma2_zeta`` pins
    the within-study variance, which is needed when every study has a single
    trial and the two levels cannot be separated.
    """
    if method not in ("REML", "ML"):
        raise ValueError(f"method must be 'REML' or 'ML', got {method!r}")
    Xd = _design(dataset, X)
    check_rank(Xd)
    theta, v, starts = dataset.theta, dataset.v, dataset.starts
    comps, obj, fval, nfev, restarts = _fit_arrays(theta, v, starts, Xd, method,
                                                   fix_sigma2_zeta, n_restarts)
    A, _, beta, _, _ = obj.parts(comps.sigma2_xi, comps.sigma2_zeta)
    cov = np.linalg.inv(A)
    cov = 0.5 * (cov + cov.T)
    s2eps = pooled_sampling_variance(v)
    fit = FitResult(
        components=comps,
        beta=beta,
        cov_beta=cov,
        columns=_columns(X, Xd.shape[1]),
        q=_cochran_q(theta, v, Xd),
        sigma2_eps=s2eps,
        i2=i_squared_components(comps.sigma2_xi, comps.sigma2_zeta, s2eps),
        loglik=-fval,
        method=method,
        h=dataset.h,
        m=dataset.m,
        X=Xd,
        n_fev=nfev,
        restarts=restarts,
    )
    fit.study_effects = tuple(study_shrinkage(fit, dataset))
    return fit


def ml_fit(dataset: Dataset, X=None, **kwargs) -> FitResult:
    return reml_fit(dataset, X, method="ML", **kwargs)


def study_shrinkage(fit: FitResult, dataset: Dataset) -> list:
    """Conditional mean of each study effect and its prediction-error variance.

    kappa_j = x_j'b + s2xi * 1'W_j (y_j - X_j b); the variance adds the
    fixed-effect uncertainty carried through the same linear map.
    """
    s2xi = fit.sigma2_xi
    comps = fit.components
    X = fit.X
    resid = dataset.theta - X @ fit.beta
    ones = np.ones(dataset.m)
    W_cols, _ = kernels.block_solve(dataset.v, dataset.starts, comps.sigma2_xi,
                                    comps.sigma2_zeta, np.column_stack([resid, ones, X]))
    W_r, W_1, W_X = W_cols[:, 0], W_cols[:, 1], W_cols[:, 2:]
    out = []
    for j, study in enumerate(dataset.studies):
        a, b = dataset.starts[j], dataset.starts[j + 1]
        x_j = X[a:b].mean(axis=0)
        kappa = float(x_j @ fit.beta + s2xi * W_r[a:b].sum())
        one_w_one = float(W_1[a:b].sum())
        # 1'W_j X_j equals the column sums of W_j X_j (W_j symmetric)
        lin = x_j - s2xi * W_X[a:b].sum(axis=0)
        var = s2xi - s2xi * s2xi * one_w_one + float(lin @ fit.cov_beta @ lin)
        out.append(StudyEffect(study.study_id, kappa, max(var, 0.0), int(b - a)))
    return out


def format_pvalue(p: float) -> str:
    if p < 1e-4:
        return "< .0001"
    return f"{p:.4g}"
