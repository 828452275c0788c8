"""Meta-regression on study-level features: design encoding, R^2 of the
variance components, information criteria, greedy forward selection and
out-of-fold permutation feature importance."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import FitResult, _fit_arrays, check_rank, reml_fit
from .data import Dataset, FeatureMatrix, starts_from_groups
from .errors import DataError, MetaError, RankDeficiencyError

__all__ = [
    "FeatureSpec",
    "RSquared",
    "Criteria",
    "CandidateScore",
    "SelectionStep",
    "SelectionPath",
    "FeaturePfi",
    "PfiReport",
    "encode_features",
    "r_squared",
    "information_criteria",
    "forward_select",
    "permutation_importance",
]

KINDS = ("categorical", "numeric", "binary")
CRITERIA = ("AIC", "BIC", "RMSE")
UNKNOWN = "unknown"
PFI_PERCENTILES = (2.5, 25.0, 75.0, 97.5)


@dataclass(frozen=True)
class FeatureSpec:
    """Declaration of one study-level feature.

    For categoricals, ``categories`` may be omitted (levels are then taken
    from the data) and ``reference`` defaults to the most frequent level
    across studies, ties broken alphabetically.
    """

    name: str
    kind: str
    categories: Optional[tuple] = None
    reference: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"feature {self.name!r}: kind must be one of {KINDS}, got {self.kind!r}")
        if self.categories is not None:
            cats = tuple(str(c) for c in self.categories)
            if self.kind == "categorical" and len(cats) < 2:
                raise ValueError(f"categorical feature {self.name!r} needs >= 2 levels")
            object.__setattr__(self, "categories", cats)
        if self.reference is not None:
            if self.kind != "categorical":
                raise ValueError(f"feature {self.name!r}: only categoricals take a reference level")
            ref = str(self.reference)
            object.__setattr__(self, "reference", ref)
            if self.categories is not None and ref not in self.categories:
                raise ValueError(f"feature {self.name!r}: reference {ref!r} not among its categories")

    def to_dict(self):
        out = {"name": self.name, "kind": self.kind}
        if self.categories is not None:
            out["categories"] = list(self.categories)
        if self.reference is not None:
            out["reference"] = self.reference
        return out


def _spec_map(specs) -> dict:
    if isinstance(specs, Mapping):
        return dict(specs)
    return {s.name: s for s in specs}


def _levels(spec: FeatureSpec, values: list) -> tuple:
    """(levels in column order, reference) for a categorical feature."""
    if spec.categories is not None:
        unseen = sorted(set(values) - set(spec.categories))
        if unseen:
            raise DataError(f"feature {spec.name!r}: unseen categories {unseen}")
        levels = list(spec.categories)
    else:
        levels = sorted(set(values))
    if spec.reference is not None:
        ref = spec.reference
    else:
        counts = Counter(values)
        ref = min(counts, key=lambda lvl: (-counts[lvl], lvl))
    return tuple(lvl for lvl in levels if lvl != ref), ref


def encode_features(dataset: Dataset, specs, selected: Sequence[str] = ()) -> FeatureMatrix:
    """Intercept plus one block of columns per selected feature, repeated for
    every trial of a study."""
    spec_map = _spec_map(specs)
    columns = ["intercept"]
    owners = ["intercept"]
    study_cols = [np.ones(dataset.h)]
    for name in selected:
        if name not in spec_map:
            raise DataError(f"feature {name!r} is not declared")
        spec = spec_map[name]
        raw = [s.features.get(name) for s in dataset.studies]
        if spec.kind == "numeric":
            missing = [s.study_id for s, val in zip(dataset.studies, raw) if _is_missing(val)]
            if missing:
                raise DataError(f"numeric feature {name!r} missing for studies: {', '.join(missing)}")
            try:
                study_cols.append(np.array([float(val) for val in raw]))
            except (TypeError, ValueError) as exc:
                raise DataError(f"numeric feature {name!r}: {exc}") from None
            columns.append(name)
            owners.append(name)
        elif spec.kind == "binary":
            col = []
            for s, val in zip(dataset.studies, raw):
                b = _as_binary(val)
                if b is None:
                    raise DataError(f"binary feature {name!r} has value {val!r} for study {s.study_id!r}")
                col.append(b)
            study_cols.append(np.array(col, dtype=float))
            columns.append(name)
            owners.append(name)
        else:
            vals = [UNKNOWN if _is_missing(val) else str(val) for val in raw]
            levels, _ = _levels(spec, vals)
            for lvl in levels:
                study_cols.append(np.array([1.0 if val == lvl else 0.0 for val in vals]))
                columns.append(f"{name}[{lvl}]")
                owners.append(name)
    X = np.column_stack(study_cols)[dataset.study_index]
    check_rank(X)
    return FeatureMatrix(tuple(columns), X, tuple(owners))


def _is_missing(val) -> bool:
    return val is None or (isinstance(val, float) and math.isnan(val)) or val == ""


def _as_binary(val):
    if isinstance(val, bool):
        return int(val)
    if isinstance(val, (int, float)) and val in (0, 1):
        return int(val)
    if isinstance(val, str) and val.strip() in ("0", "1"):
        return int(val.strip())
    return None


@dataclass(frozen=True)
class RSquared:
    """Proportional reduction of each variance component; ``None`` when the
    null-model variance is zero. ``*_truncated`` flags a negative raw value
    that was reported as 0."""

    xi: Optional[float]
    zeta: Optional[float]
    xi_truncated: bool = False
    zeta_truncated: bool = False


def _r2(null, feat):
    if null <= 0.0:
        return None, False
    raw = 1.0 - feat / null
    if raw < 0.0:
        return 0.0, True
    return raw, False


def r_squared(fit_null, fit_feat) -> RSquared:
    """R^2 for both levels. Accepts two FitResults or two (s2xi, s2zeta) pairs."""
    null = _pair(fit_null)
    feat = _pair(fit_feat)
    xi, xi_t = _r2(null[0], feat[0])
    zeta, zeta_t = _r2(null[1], feat[1])
    return RSquared(xi, zeta, xi_t, zeta_t)


def _pair(fit):
    if isinstance(fit, FitResult):
        return fit.sigma2_xi, fit.sigma2_zeta
    a, b = fit
    return float(a), float(b)


@dataclass(frozen=True)
class Criteria:
    aic: float
    bic: float
    rmse: float
    loglik_ml: float
    loglik_reml: float
    n_params: int
    m: int

    @property
    def aic_reml(self) -> float:
        return -2.0 * self.loglik_reml + 2.0 * self.n_params

    @property
    def bic_reml(self) -> float:
        return -2.0 * self.loglik_reml + self.n_params * math.log(self.m)

    def value(self, criterion: str, likelihood: str = "ML") -> float:
        criterion = criterion.upper()
        if criterion == "RMSE":
            return self.rmse
        if likelihood.upper() == "REML":
            return self.aic_reml if criterion == "AIC" else self.bic_reml
        return self.aic if criterion == "AIC" else self.bic


def information_criteria(dataset: Dataset, X=None, *, reml: FitResult | None = None) -> Criteria:
    """AIC/BIC from an ML refit (fixed effects + 2 variance parameters) and
    the in-sample RMSE of fixed-effects predictions from the REML fit."""
    if X is None:
        X = FeatureMatrix.intercept(dataset.m)
    if reml is None:
        reml = reml_fit(dataset, X)
    ml = reml_fit(dataset, X, method="ML")
    k = reml.p + 2
    resid = dataset.theta - reml.fitted()
    return Criteria(
        aic=-2.0 * ml.loglik + 2.0 * k,
        bic=-2.0 * ml.loglik + k * math.log(dataset.m),
        rmse=float(np.sqrt(np.mean(resid * resid))),
        loglik_ml=ml.loglik,
        loglik_reml=reml.loglik,
        n_params=k,
        m=dataset.m,
    )


@dataclass(frozen=True)
class CandidateScore:
    feature: Optional[str]
    model: tuple
    n_columns: int
    aic: Optional[float] = None
    bic: Optional[float] = None
    rmse: Optional[float] = None
    aic_reml: Optional[float] = None
    bic_reml: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def value(self, criterion: str, likelihood: str = "ML") -> float:
        criterion = criterion.upper()
        if criterion == "RMSE":
            return self.rmse
        if likelihood.upper() == "REML":
            return self.aic_reml if criterion == "AIC" else self.bic_reml
        return self.aic if criterion == "AIC" else self.bic

    def to_dict(self):
        return {
            "feature": self.feature,
            "model": list(self.model),
            "n_columns": self.n_columns,
            "aic": self.aic,
            "bic": self.bic,
            "rmse": self.rmse,
            "aic_reml": self.aic_reml,
            "bic_reml": self.bic_reml,
            "error": self.error,
        }


@dataclass(frozen=True)
class SelectionStep:
    step: int
    base_model: tuple
    base_value: float
    candidates: tuple
    chosen: Optional[str]
    chosen_value: Optional[float]
    accepted: bool

    def to_dict(self):
        return {
            "step": self.step,
            "base_model": list(self.base_model),
            "base_value": self.base_value,
            "chosen": self.chosen,
            "chosen_value": self.chosen_value,
            "accepted": self.accepted,
            "candidates": [c.to_dict() for c in self.candidates],
        }


@dataclass(frozen=True)
class SelectionPath:
    criterion: str
    likelihood: str
    null: CandidateScore
    steps: tuple
    selected: tuple

    def to_dict(self):
        return {
            "criterion": self.criterion,
            "likelihood": self.likelihood,
            "null": self.null.to_dict(),
            "selected": list(self.selected),
            "steps": [s.to_dict() for s in self.steps],
        }


def _score(dataset, specs, model, feature) -> CandidateScore:
    try:
        X = encode_features(dataset, specs, model)
        crit = information_criteria(dataset, X)
    except MetaError as exc:
        return CandidateScore(feature, tuple(model), 0, error=f"{type(exc).__name__}: {exc}")
    return CandidateScore(feature, tuple(model), X.p, crit.aic, crit.bic, crit.rmse,
                          crit.aic_reml, crit.bic_reml)


def forward_select(dataset: Dataset, specs, criterion: str = "AIC", *,
                   candidates: Sequence[str] | None = None, likelihood: str = "ML") -> SelectionPath:
    """Greedy forward selection; a step is accepted only on a strict decrease.

    Ties between candidates go to the one adding fewer columns, then to the
    alphabetically first name. Candidates whose fit fails are kept in the
    step record with the error text and never chosen.
    """
    criterion = criterion.upper()
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    spec_map = _spec_map(specs)
    pool = sorted(candidates if candidates is not None else spec_map)
    if not pool:
        raise ValueError("forward_select needs at least one candidate feature")
    for name in pool:
        if name not in spec_map:
            raise DataError(f"feature {name!r} is not declared")

    null = _score(dataset, spec_map, [], None)
    if not null.ok:
        raise MetaError(f"null model failed: {null.error}")
    current: list = []
    current_value = null.value(criterion, likelihood)
    base_cols = 1
    steps = []
    while True:
        remaining = [f for f in pool if f not in current]
        if not remaining:
            break
        scores = tuple(_score(dataset, spec_map, current + [f], f) for f in remaining)
        ok = [s for s in scores if s.ok]
        if not ok:
            steps.append(SelectionStep(len(steps) + 1, tuple(current), current_value, scores,
                                       None, None, False))
            break
        best = min(ok, key=lambda s: (s.value(criterion, likelihood), s.n_columns - base_cols, s.feature))
        best_value = best.value(criterion, likelihood)
        accepted = best_value < current_value
        steps.append(SelectionStep(len(steps) + 1, tuple(current), current_value, scores,
                                   best.feature, best_value, accepted))
        if not accepted:
            break
        current.append(best.feature)
        current_value = best_value
        base_cols = best.n_columns
    return SelectionPath(criterion, likelihood.upper(), null, tuple(steps), tuple(current))


@dataclass(frozen=True)
class FeaturePfi:
    feature: str
    mean: float
    percentiles: dict
    replicates: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "feature": self.feature,
            "mean": self.mean,
            "percentiles": {f"{k:g}": v for k, v in self.percentiles.items()},
            "replicates": [float(x) for x in self.replicates],
        }


@dataclass(frozen=True)
class PfiReport:
    features: tuple
    folds: int
    permutations: int
    seed: int
    original_rmse: tuple

    def by_name(self, name) -> FeaturePfi:
        for f in self.features:
            if f.feature == name:
                return f
        raise KeyError(name)

    def ordered(self) -> list:
        """Features by decreasing mean PFI."""
        return sorted(self.features, key=lambda f: (-f.mean, f.feature))

    def to_dict(self):
        return {
            "folds": self.folds,
            "permutations": self.permutations,
            "seed": self.seed,
            "original_rmse": list(self.original_rmse),
            "features": [f.to_dict() for f in self.features],
        }


def _rmse(y, yhat):
    r = y - yhat
    return math.sqrt(float(np.mean(r * r)))


def fold_ratios(beta, X_test, y_test, cols, permutations, rng):
    """PFI ratios for one feature on one held-out fold."""
    base = _rmse(y_test, X_test @ beta)
    if base == 0.0:
        raise DataError("held-out RMSE is zero; PFI ratio undefined")
    out = np.empty(permutations)
    Xp = X_test.copy()
    for b in range(permutations):
        perm = rng.permutation(X_test.shape[0])
        Xp[:, cols] = X_test[perm][:, cols]
        out[b] = _rmse(y_test, Xp @ beta) / base
    return out


def permutation_importance(dataset: Dataset, specs, selected: Sequence[str] | None = None,
                           K: int = 5, B: int = 200, seed: int = 0) -> PfiReport:
    """Out-of-fold permutation feature importance.

    Trials are split at random into K folds. For each fold the full model
    is fitted by REML on the other folds, and the ratio of held-out RMSE
    with one feature's columns shuffled across held-out trials to the
    unshuffled RMSE is recorded, B times per feature. Predictions use fixed
    effects only.
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    if B < 1:
        raise ValueError("B must be >= 1")
    m = dataset.m
    if m < 2 * K:
        raise DataError(f"need m >= 2K trials (m={m}, K={K})")
    spec_map = _spec_map(specs)
    names = list(selected) if selected is not None else list(spec_map)
    if not names:
        raise ValueError("permutation_importance needs at least one feature")
    fm = encode_features(dataset, spec_map, names)
    X = fm.values
    y = dataset.theta
    rng = np.random.default_rng(seed)
    order = rng.permutation(m)
    folds = [np.sort(f) for f in np.array_split(order, K)]
    col_sets = [fm.columns_of(n) for n in names]
    ratios = [[] for _ in names]
    base_rmse = []
    for test in folds:
        train = np.setdiff1d(np.arange(m), test, assume_unique=True)
        if fm.p + 2 > train.size:
            raise DataError(f"fold too small: {train.size} training trials for {fm.p + 2} parameters")
        X_tr = X[train]
        try:
            check_rank(X_tr)
        except RankDeficiencyError as exc:
            raise DataError(f"training fold is rank deficient: {exc}") from None
        starts = starts_from_groups(dataset.study_index[train])
        comps, obj, *_ = _fit_arrays(y[train], dataset.v[train], starts, X_tr, "REML")
        _, _, beta, _, _ = obj.parts(comps.sigma2_xi, comps.sigma2_zeta)
        X_te, y_te = X[test], y[test]
        base_rmse.append(_rmse(y_te, X_te @ beta))
        for i, cols in enumerate(col_sets):
            ratios[i].append(fold_ratios(beta, X_te, y_te, cols, B, rng))
    feats = []
    for name, reps in zip(names, ratios):
        arr = np.concatenate(reps)
        pct = {q: float(np.percentile(arr, q)) for q in PFI_PERCENTILES}
        feats.append(FeaturePfi(name, float(arr.mean()), pct, arr))
    return PfiReport(tuple(feats), K, B, seed, tuple(base_rmse))
