"""Trial and study containers used throughout the package."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .transforms import EffectSize, ProportionOutcome, da_transform


@dataclass(frozen=True)
class Trial:
    trial_id: str
    outcome: ProportionOutcome
    effect: EffectSize

    @classmethod
    def from_counts(cls, trial_id, k, n):
        outcome = ProportionOutcome(k, n)
        return cls(str(trial_id), outcome, da_transform(outcome))


@dataclass(frozen=True)
class Study:
    study_id: str
    trials: tuple
    features: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "trials", tuple(self.trials))
        object.__setattr__(self, "features", MappingProxyType(dict(self.features)))
        if not self.trials:
            raise DataError(f"study {self.study_id!r} has no trials")

    @property
    def m(self) -> int:
        return len(self.trials)

    def __eq__(self, other):
        if not isinstance(other, Study):
            return NotImplemented
        return (self.study_id == other.study_id and self.trials == other.trials
                and dict(self.features) == dict(other.features))

    __hash__ = None


class Dataset:
    """Ordered studies, each with one or more trials. Immutable once built.

    Trial-level arrays (``theta``, ``v``, ``k``, ``n``) follow study order and,
    within a study, input order. ``starts`` holds block offsets (length h+1).
    """

    def __init__(self, studies: Iterable[Study]):
        studies = tuple(studies)
        if len(studies) < 2:
            raise DataError(f"need >= 2 studies, got {len(studies)}")
        ids = [s.study_id for s in studies]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise DataError(f"duplicate study ids: {', '.join(dupes)}")
        for s in studies:
            tids = [t.trial_id for t in s.trials]
            if len(set(tids)) != len(tids):
                raise DataError(f"duplicate trial ids within study {s.study_id!r}")
        self.studies = studies
        trials = [t for s in studies for t in s.trials]
        self.theta = _frozen(np.array([t.effect.theta for t in trials]))
        self.v = _frozen(np.array([t.effect.v for t in trials]))
        self.k = _frozen(np.array([t.outcome.k for t in trials], dtype=np.int64))
        self.n = _frozen(np.array([t.outcome.n for t in trials], dtype=np.int64))
        sizes = np.array([s.m for s in studies], dtype=np.intp)
        self.sizes = _frozen(sizes)
        self.starts = _frozen(np.concatenate([[0], np.cumsum(sizes)]).astype(np.intp))
        self.study_index = _frozen(np.repeat(np.arange(len(studies)), sizes))

    @classmethod
    def from_records(cls, records: Iterable[Mapping], features: Mapping[str, Mapping] | None = None):
        """Build from rows with ``study_id``, ``trial_id``, ``k``, ``n``; rows are
        grouped by study in order of first appearance."""
        grouped: dict = {}
        for i, rec in enumerate(records):
            sid = str(rec["study_id"])
            tid = str(rec.get("trial_id", i))
            grouped.setdefault(sid, []).append(Trial.from_counts(tid, rec["k"], rec["n"]))
        features = features or {}
        return cls(Study(sid, trials, features.get(sid, {})) for sid, trials in grouped.items())

    @property
    def h(self) -> int:
        return len(self.studies)

    @property
    def m(self) -> int:
        return int(self.starts[-1])

    @property
    def study_ids(self) -> tuple:
        return tuple(s.study_id for s in self.studies)

    @property
    def trials(self) -> tuple:
        return tuple(t for s in self.studies for t in s.trials)

    @property
    def p_obs(self) -> np.ndarray:
        return self.k / self.n

    def feature_names(self) -> list:
        names: list = []
        for s in self.studies:
            for key in s.features:
                if key not in names:
                    names.append(key)
        return names

    def exclude(self, study_ids: Sequence[str]) -> "Dataset":
        drop = set(study_ids)
        unknown = drop - set(self.study_ids)
        if unknown:
            raise DataError(f"cannot exclude unknown study ids: {', '.join(sorted(unknown))}")
        return Dataset(s for s in self.studies if s.study_id not in drop)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.studies == other.studies

    __hash__ = None

    def __repr__(self):
        return f"Dataset(h={self.h}, m={self.m})"


def starts_from_groups(groups: np.ndarray) -> np.ndarray:
    """Block offsets for a trial->study index array that is already sorted
    by study (groups may skip values)."""
    groups = np.asarray(groups)
    if groups.size == 0:
        return np.zeros(1, dtype=np.intp)
    change = np.flatnonzero(np.diff(groups)) + 1
    return np.concatenate([[0], change, [groups.size]]).astype(np.intp)


def _frozen(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FeatureMatrix:
    """Encoded design matrix aligned to trial order; first column is the
    intercept. ``column_features`` maps each column back to its source
    feature name (``"intercept"`` for the first)."""

    columns: tuple
    values: np.ndarray
    column_features: tuple

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != len(self.columns):
            raise ValueError("FeatureMatrix shape does not match its column names")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "column_features", tuple(self.column_features))

    @classmethod
    def intercept(cls, m: int) -> "FeatureMatrix":
        return cls(("intercept",), np.ones((m, 1)), ("intercept",))

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def features(self) -> tuple:
        out = []
        for f in self.column_features[1:]:
            if f not in out:
                out.append(f)
        return tuple(out)

    def columns_of(self, feature: str) -> list:
        return [i for i, f in enumerate(self.column_features) if f == feature]
