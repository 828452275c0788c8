"""Trial-table I/O with its JSON schema, plus synthetic data generation."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import Dataset, Study, Trial
from .errors import DataError
from .regression import UNKNOWN, FeatureSpec
from .transforms import da_inverse

__all__ = [
    "SchemaConfig",
    "SimFeature",
    "load_schema",
    "load_dataset",
    "write_dataset",
    "simulate_dataset",
]

_RESERVED_DEFAULTS = {"study_id": "study_id", "trial_id": "trial_id", "k": "k", "n": "n", "p": "p"}


@dataclass(frozen=True)
class SchemaConfig:
    features: tuple = ()
    ignore: tuple = ()
    missing: tuple = ("", "NA")
    delimiter: str = ","
    study_id: str = "study_id"
    trial_id: str = "trial_id"
    k: str = "k"
    n: str = "n"
    p: str = "p"

    @property
    def feature_map(self) -> dict:
        return {f.name: f for f in self.features}

    @classmethod
    def from_dict(cls, raw: dict) -> "SchemaConfig":
        known = {"features", "ignore", "missing", "delimiter", *_RESERVED_DEFAULTS}
        extra = sorted(set(raw) - known)
        if extra:
            raise DataError(f"schema: unknown keys {extra}")
        feats = []
        for i, f in enumerate(raw.get("features", [])):
            try:
                feats.append(FeatureSpec(f["name"], f["kind"], f.get("categories"), f.get("reference")))
            except (KeyError, ValueError) as exc:
                raise DataError(f"schema feature #{i}: {exc}") from None
        missing = raw.get("missing", ("", "NA"))
        if isinstance(missing, str):
            missing = (missing,)
        kwargs = {key: raw[key] for key in _RESERVED_DEFAULTS if key in raw}
        return cls(tuple(feats), tuple(raw.get("ignore", ())), tuple(missing),
                   raw.get("delimiter", ","), **kwargs)

    def to_dict(self) -> dict:
        out = {
            "delimiter": self.delimiter,
            "missing": list(self.missing),
            "features": [f.to_dict() for f in self.features],
            "ignore": list(self.ignore),
        }
        for key, default in _RESERVED_DEFAULTS.items():
            if getattr(self, key) != default:
                out[key] = getattr(self, key)
        return out


def load_schema(path) -> SchemaConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON schema ({exc})") from None
    if not isinstance(raw, dict):
        raise DataError(f"{path}: schema must be a JSON object")
    return SchemaConfig.from_dict(raw)


def _parse_int(text, what, line):
    try:
        val = float(text)
    except ValueError:
        raise DataError(f"line {line}: {what}={text!r} is not a number") from None
    if not val.is_integer():
        raise DataError(f"line {line}: {what}={text!r} is not an integer")
    return int(val)


def _feature_value(spec: FeatureSpec, text: str, missing: tuple, line: int):
    if text in missing:
        return UNKNOWN if spec.kind == "categorical" else None
    if spec.kind == "numeric":
        try:
            val = float(text)
        except ValueError:
            raise DataError(f"line {line}: feature {spec.name!r} value {text!r} is not numeric") from None
        if not math.isfinite(val):
            raise DataError(f"line {line}: feature {spec.name!r} value {text!r} is not finite")
        return val
    if spec.kind == "binary":
        if text.strip() not in ("0", "1"):
            raise DataError(f"line {line}: binary feature {spec.name!r} value {text!r} not in {{0, 1}}")
        return int(text.strip())
    if spec.categories is not None and text not in spec.categories:
        raise DataError(f"line {line}: feature {spec.name!r} has unseen category {text!r}")
    return text


def load_dataset(path, schema: SchemaConfig | None = None) -> Dataset:
    """Read trial rows grouped by study (order of first appearance) and apply
    the double-arcsine transform. Features are study-level: every trial of a
    study must carry the same value."""
    schema = schema or SchemaConfig()
    path = Path(path)
    spec_map = schema.feature_map
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file (header row required)") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names in header")
        for req in (schema.study_id, schema.n):
            if req not in header:
                raise DataError(f"{path}: missing required column {req!r}")
        if schema.k not in header and schema.p not in header:
            raise DataError(f"{path}: need a {schema.k!r} or {schema.p!r} column")
        reserved = {schema.study_id, schema.trial_id, schema.k, schema.n, schema.p}
        undeclared = [c for c in header if c not in reserved and c not in spec_map and c not in schema.ignore]
        if undeclared:
            raise DataError(f"{path}: columns neither declared nor ignored: {', '.join(undeclared)}")
        absent = [name for name in spec_map if name not in header]
        if absent:
            raise DataError(f"{path}: declared features absent from file: {', '.join(absent)}")
        col = {name: i for i, name in enumerate(header)}

        order: list = []
        trials: dict = {}
        feats: dict = {}
        feat_line: dict = {}
        seen = set()
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"line {line}: expected {len(header)} fields, got {len(row)}")
            sid = row[col[schema.study_id]].strip()
            if not sid:
                raise DataError(f"line {line}: empty study id")
            if schema.trial_id in col:
                tid = row[col[schema.trial_id]].strip()
            else:
                tid = str(len(trials.get(sid, ())) + 1)
            if (sid, tid) in seen:
                raise DataError(f"line {line}: duplicate (study_id, trial_id) = ({sid!r}, {tid!r})")
            seen.add((sid, tid))
            n = _parse_int(row[col[schema.n]].strip(), "n", line)
            if n < 1:
                raise DataError(f"line {line}: n must be >= 1, got {n}")
            k_text = row[col[schema.k]].strip() if schema.k in col else ""
            if k_text:
                k = _parse_int(k_text, "k", line)
            else:
                p_text = row[col[schema.p]].strip() if schema.p in col else ""
                if not p_text:
                    raise DataError(f"line {line}: neither k nor p given")
                try:
                    p = float(p_text)
                except ValueError:
                    raise DataError(f"line {line}: p={p_text!r} is not a number") from None
                if not 0.0 <= p <= 1.0:
                    raise DataError(f"line {line}: p={p} outside [0, 1]")
                k = int(math.floor(p * n + 0.5))
            if not 0 <= k <= n:
                raise DataError(f"line {line}: need 0 <= k <= n, got k={k}, n={n}")
            values = {name: _feature_value(spec, row[col[name]].strip(), schema.missing, line)
                      for name, spec in spec_map.items()}
            if sid not in trials:
                order.append(sid)
                trials[sid] = []
                feats[sid] = values
                feat_line[sid] = line
            else:
                for name, val in values.items():
                    if val != feats[sid][name]:
                        raise DataError(
                            f"line {line}: study {sid!r} feature {name!r} is {val!r} but was "
                            f"{feats[sid][name]!r} on line {feat_line[sid]}"
                        )
            trials[sid].append(Trial.from_counts(tid, k, n))
    return Dataset(Study(sid, trials[sid], feats[sid]) for sid in order)


def _fmt(val) -> str:
    if val is None:
        return ""
    if isinstance(val, float):
        return repr(val)
    return str(val)


def write_dataset(dataset: Dataset, path, schema: SchemaConfig | None = None) -> None:
    schema = schema or SchemaConfig()
    names = [f.name for f in schema.features] or dataset.feature_names()
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=schema.delimiter, lineterminator="\n")
        w.writerow([schema.study_id, schema.trial_id, schema.k, schema.n, *names])
        for s in dataset.studies:
            row_feats = [_fmt(s.features.get(name)) for name in names]
            for t in s.trials:
                w.writerow([s.study_id, t.trial_id, t.outcome.k, t.outcome.n, *row_feats])


@dataclass(frozen=True)
class SimFeature:
    """A simulated study-level feature and its effect on the DA scale.

    numeric: uniform on [low, high], effect per unit. binary: Bernoulli(prob),
    effect when 1. categorical: uniform over ``levels`` with per-level
    ``level_effects`` (missing levels contribute 0).
    """

    name: str
    kind: str = "numeric"
    effect: float = 0.0
    low: float = 0.0
    high: float = 1.0
    prob: float = 0.5
    levels: tuple = ()
    level_effects: dict = field(default_factory=dict)

    def spec(self) -> FeatureSpec:
        if self.kind == "categorical":
            return FeatureSpec(self.name, "categorical", tuple(self.levels))
        return FeatureSpec(self.name, self.kind)


def _draw_count(rng, spec):
    if isinstance(spec, (tuple, list)):
        lo, hi = spec
        return int(rng.integers(lo, hi + 1))
    return int(spec)


def simulate_dataset(h: int, m_per_study=5, n=500, mu: float = 1.0, sigma2_xi: float = 0.017,
                     sigma2_zeta: float = 0.010, features: Sequence[SimFeature] = (),
                     seed: int = 0, max_retries: int = 100, study_sizes: Sequence[int] | None = None):
    """Draw a dataset from the three-level model.

    ``m_per_study`` and ``n`` are ints or inclusive (low, high) ranges;
    ``study_sizes`` (length h) fixes every study's trial count instead. Each
    true trial effect is mapped to a proportion with the trial's n and a
    binomial count is drawn. Study and trial effects outside [0, pi/2] are
    redrawn (up to ``max_retries`` times each; the redraw count goes in the
    returned truth record).
    Returns ``(dataset, truth)``.
    """
    if h < 2:
        raise DataError("simulation needs h >= 2 studies")
    if sigma2_xi < 0 or sigma2_zeta < 0:
        raise DataError("variances must be >= 0")
    if study_sizes is not None and len(study_sizes) != h:
        raise DataError(f"study_sizes has {len(study_sizes)} entries for h={h}")
    rng = np.random.default_rng(seed)
    sd_xi, sd_zeta = math.sqrt(sigma2_xi), math.sqrt(sigma2_zeta)
    studies = []
    xis = []
    redraws = 0
    for j in range(h):
        fvals = {}
        shift = 0.0
        for f in features:
            if f.kind == "numeric":
                val = float(rng.uniform(f.low, f.high))
                shift += f.effect * val
            elif f.kind == "binary":
                val = int(rng.random() < f.prob)
                shift += f.effect * val
            elif f.kind == "categorical":
                val = str(f.levels[int(rng.integers(len(f.levels)))])
                shift += float(f.level_effects.get(val, 0.0))
            else:
                raise DataError(f"unknown simulated feature kind {f.kind!r}")
            fvals[f.name] = val
        for attempt in range(max_retries + 1):
            xi = float(rng.normal(0.0, sd_xi)) if sd_xi > 0 else 0.0
            if 0.0 <= mu + shift + xi <= math.pi / 2:
                break
            redraws += 1
        else:
            raise DataError(f"study {j}: mean effect outside [0, pi/2] after {max_retries} redraws")
        xis.append(xi)
        m_j = int(study_sizes[j]) if study_sizes is not None else _draw_count(rng, m_per_study)
        if m_j < 1:
            raise DataError("m_per_study must be >= 1")
        trials = []
        for i in range(m_j):
            n_ij = _draw_count(rng, n)
            for attempt in range(max_retries + 1):
                zeta = float(rng.normal(0.0, sd_zeta)) if sd_zeta > 0 else 0.0
                theta = mu + shift + xi + zeta
                if 0.0 <= theta <= math.pi / 2:
                    break
                redraws += 1
            else:
                raise DataError(f"study {j}: true effect outside [0, pi/2] after {max_retries} redraws")
            p = da_inverse(2.0 * theta, n_ij)
            k = int(rng.binomial(n_ij, p))
            trials.append(Trial.from_counts(str(i + 1), k, n_ij))
        studies.append(Study(f"S{j + 1:03d}", trials, fvals))
    truth = {
        "h": h,
        "mu": mu,
        "sigma2_xi": sigma2_xi,
        "sigma2_zeta": sigma2_zeta,
        "seed": seed,
        "m_per_study": list(m_per_study) if isinstance(m_per_study, (tuple, list)) else m_per_study,
        "study_sizes": [s.m for s in studies],
        "n": list(n) if isinstance(n, (tuple, list)) else n,
        "features": [{"name": f.name, "kind": f.kind, "effect": f.effect,
                      "level_effects": dict(f.level_effects)} for f in features],
        "study_effects": xis,
        "redraws": redraws,
    }
    return Dataset(studies), truth


def schema_for(features: Sequence[SimFeature]) -> SchemaConfig:
    return SchemaConfig(features=tuple(f.spec() for f in features))
