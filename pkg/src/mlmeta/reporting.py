"""Forest, funnel, regression, selection and importance plots (SVG plus a
JSON sidecar holding every plotted number) and the fitted-model summary table."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .core import FitResult, format_pvalue
from .data import Dataset
from .regression import PfiReport, RSquared, SelectionPath, r_squared
from .special import t_quantile
from .svg import Axis, Svg, color, nice_ticks
from .transforms import backtransform_ci

__all__ = [
    "PlotSpec",
    "PlotOutput",
    "forest_plot",
    "funnel_plot",
    "regression_plot",
    "selection_plot",
    "importance_plot",
    "summary_table",
    "population_estimate",
    "dumps",
]

SCHEMA_VERSION = 1
PLOT_KINDS = ("forest", "funnel", "regression", "selection", "importance")


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    width: int = 760
    height: Optional[int] = None
    alpha: float = 0.05
    axis: str = "auto"  # "auto" | "full" (0..1) | "zero" (y from 0)

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.width <= 0 or (self.height is not None and self.height <= 0):
            raise ValueError("plot dimensions must be positive")
        if self.axis not in ("auto", "full", "zero"):
            raise ValueError(f"unknown axis policy {self.axis!r}")


@dataclass(frozen=True)
class PlotOutput:
    svg: str
    data: dict

    def write(self, stem) -> tuple:
        from pathlib import Path

        stem = Path(stem)
        svg_path = stem.with_suffix(".svg")
        json_path = stem.with_suffix(".json")
        svg_path.write_text(self.svg, encoding="utf-8")
        json_path.write_text(dumps(self.data), encoding="utf-8")
        return svg_path, json_path


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _bt(est, var, h, alpha, fallback_n):
    n_hat = 1.0 / var if var > 0.0 else fallback_n
    return backtransform_ci(est, var, h, alpha, n_hat)


def population_estimate(fit: FitResult, alpha: float = 0.05):
    """Back-transformed population estimate at the mean design row (the
    intercept alone for the null model). Returns (est, var, estimate)."""
    xbar = fit.X.mean(axis=0)
    est = float(xbar @ fit.beta)
    var = float(xbar @ fit.cov_beta @ xbar)
    return est, var, _bt(est, var, fit.h, alpha, fit.n_hat)


def _sidecar(kind, spec, rows, geometry, **extra):
    out = {"schema_version": SCHEMA_VERSION, "kind": kind, "alpha": spec.alpha,
           "axis_policy": spec.axis}
    out.update(extra)
    out["rows"] = rows
    out["geometry"] = geometry
    return out


def forest_plot(fit: FitResult, dataset: Dataset, spec: PlotSpec | None = None) -> PlotOutput:
    spec = spec or PlotSpec("forest")
    if dataset.h < 2:
        raise ValueError("forest plot needs h >= 2 studies")
    rows = []
    for j, eff in enumerate(fit.study_effects):
        bt = _bt(eff.kappa, eff.var, fit.h, spec.alpha, fit.n_hat)
        rows.append({"study_id": eff.study_id, "m": eff.m, "kappa": eff.kappa, "var": eff.var,
                     "estimate": bt.p_bar, "lcb": bt.lcb, "ucb": bt.ucb, "n_hat": bt.n_hat})
    est, var, pop = population_estimate(fit, spec.alpha)
    population = {"mu": est, "var": var, "estimate": pop.p_bar, "lcb": pop.lcb, "ucb": pop.ucb,
                  "n_hat": pop.n_hat}

    row_h = 22
    top, bottom = 50, 60
    height = spec.height or top + row_h * (len(rows) + 2) + bottom
    left, right = 190, spec.width - 190
    if spec.axis == "full":
        lo, hi = 0.0, 1.0
    else:
        lo = min([r["lcb"] for r in rows] + [pop.lcb])
        hi = max([r["ucb"] for r in rows] + [pop.ucb])
        pad = max(0.02, 0.05 * (hi - lo))
        lo, hi = max(0.0, lo - pad), min(1.0, hi + pad)
    ax = Axis(lo, hi, left, right)
    max_m = max(r["m"] for r in rows)
    svg = Svg(spec.width, height)
    svg.text(10, 30, "Study", weight="bold")
    svg.text(150, 30, "m", anchor="end", weight="bold")
    svg.text(spec.width - 10, 30, f"Estimate [{100 * (1 - spec.alpha):g}% CI]", anchor="end", weight="bold")
    for i, r in enumerate(rows):
        y = top + row_h * (i + 0.5)
        # square area proportional to m_j
        side = 14.0 * math.sqrt(r["m"] / max_m)
        r["y"] = y
        r["x"] = ax(r["estimate"])
        r["x_lcb"], r["x_ucb"] = ax(r["lcb"]), ax(r["ucb"])
        r["square_side"] = side
        svg.text(10, y + 4, r["study_id"])
        svg.text(150, y + 4, str(r["m"]), anchor="end")
        svg.line(r["x_lcb"], y, r["x_ucb"], y, stroke="#000000")
        svg.rect(r["x"] - side / 2, y - side / 2, side, side, fill=color(i))
        svg.text(spec.width - 10, y + 4, f"{r['estimate']:.2f} [{r['lcb']:.2f}, {r['ucb']:.2f}]", anchor="end")
    y_pop = top + row_h * (len(rows) + 1)
    x_c, x_l, x_u = ax(pop.p_bar), ax(pop.lcb), ax(pop.ucb)
    population.update({"y": y_pop, "x": x_c, "x_lcb": x_l, "x_ucb": x_u})
    svg.text(10, y_pop + 4, "Population", weight="bold")
    svg.text(150, y_pop + 4, str(fit.m), anchor="end", weight="bold")
    svg.polygon([(x_l, y_pop), (x_c, y_pop - 7), (x_u, y_pop), (x_c, y_pop + 7)], fill="#000000")
    svg.text(spec.width - 10, y_pop + 4, f"{pop.p_bar:.2f} [{pop.lcb:.2f}, {pop.ucb:.2f}]",
             anchor="end", weight="bold")
    svg.line(x_c, top - 8, x_c, y_pop + 10, stroke="#555555", dash="4,3")
    y_axis = y_pop + 20
    svg.line(left, y_axis, right, y_axis)
    ticks = nice_ticks(lo, hi)
    for t in ticks:
        svg.line(ax(t), y_axis, ax(t), y_axis + 5)
        svg.text(ax(t), y_axis + 18, f"{t:g}", anchor="middle", size=10)
    svg.text((left + right) / 2, y_axis + 36, "Overall accuracy", anchor="middle")
    geometry = {"width": spec.width, "height": height, "x_axis": ax.to_dict(), "row_height": row_h,
                "ticks": ticks, "reference_line_x": x_c}
    data = _sidecar("forest", spec, rows, geometry, h=fit.h, m=fit.m, population=population,
                    columns=list(fit.columns))
    return PlotOutput(svg.to_string(), data)


def funnel_plot(fit: FitResult, dataset: Dataset, spec: PlotSpec | None = None) -> PlotOutput:
    """Effect size (DA scale) against standard error, SE axis pointing down.

    Two wedges at the population value: sampling variance only (dark) and all
    variance components (light), both with t_(h-1) critical values.
    """
    spec = spec or PlotSpec("funnel")
    tcrit = t_quantile(1.0 - spec.alpha / 2.0, fit.h - 1)
    mu = fit.mu
    tau2 = fit.sigma2_xi + fit.sigma2_zeta
    se = np.sqrt(dataset.v)
    theta = dataset.theta
    se_max = float(se.max()) * 1.05
    grid = np.linspace(0.0, se_max, 41)
    dark_half = tcrit * grid
    light_half = tcrit * np.sqrt(tau2 + grid * grid)

    width = spec.width
    height = spec.height or 520
    left, right, top, bottom = 70, width - 20, 20, height - 50
    x_lo = min(float(theta.min()), mu - float(light_half.max()))
    x_hi = max(float(theta.max()), mu + float(light_half.max()))
    pad = 0.03 * (x_hi - x_lo)
    ax = Axis(x_lo - pad, x_hi + pad, left, right)
    ay = Axis(0.0, se_max, top, bottom)  # SE = 0 at the top
    svg = Svg(width, height)
    light = [(ax(mu - w), ay(g)) for g, w in zip(grid, light_half)]
    light += [(ax(mu + w), ay(g)) for g, w in zip(grid[::-1], light_half[::-1])]
    dark = [(ax(mu - w), ay(g)) for g, w in zip(grid, dark_half)]
    dark += [(ax(mu + w), ay(g)) for g, w in zip(grid[::-1], dark_half[::-1])]
    svg.polygon(light, fill="#d9d9d9")
    svg.polygon(dark, fill="#969696")
    svg.line(ax(mu), ay(0.0), ax(mu), ay(se_max), stroke="#000000")
    rows = []
    for idx in range(dataset.m):
        j = int(dataset.study_index[idx])
        x, y = ax(theta[idx]), ay(se[idx])
        half_light = tcrit * math.sqrt(tau2 + se[idx] ** 2)
        half_dark = tcrit * se[idx]
        rows.append({
            "study_id": dataset.studies[j].study_id,
            "theta": float(theta[idx]),
            "se": float(se[idx]),
            "x": x,
            "y": y,
            "inside_dark": bool(abs(theta[idx] - mu) <= half_dark),
            "inside_light": bool(abs(theta[idx] - mu) <= half_light),
        })
        svg.circle(x, y, 3.0, fill=color(j), stroke="#000000")
    svg.line(left, bottom, right, bottom)
    svg.line(left, top, left, bottom)
    for t in nice_ticks(ax.lo, ax.hi):
        svg.line(ax(t), bottom, ax(t), bottom + 5)
        svg.text(ax(t), bottom + 18, f"{t:g}", anchor="middle", size=10)
    for t in nice_ticks(0.0, se_max, 4):
        svg.line(left - 5, ay(t), left, ay(t))
        svg.text(left - 8, ay(t) + 4, f"{t:g}", anchor="end", size=10)
    svg.text((left + right) / 2, height - 12, "Double arcsine transformed overall accuracy", anchor="middle")
    svg.text(16, (top + bottom) / 2, "Standard error", anchor="middle", rotate=-90)
    geometry = {"width": width, "height": height, "x_axis": ax.to_dict(), "y_axis": ay.to_dict(),
                "mu_x": ax(mu)}
    wedges = {"se": grid.tolist(), "dark_lo": (mu - dark_half).tolist(), "dark_hi": (mu + dark_half).tolist(),
              "light_lo": (mu - light_half).tolist(), "light_hi": (mu + light_half).tolist()}
    data = _sidecar("funnel", spec, rows, geometry, mu=mu, t_crit=tcrit, sigma2_xi=fit.sigma2_xi,
                    sigma2_zeta=fit.sigma2_zeta, wedges=wedges)
    return PlotOutput(svg.to_string(), data)


def regression_plot(fit: FitResult, dataset: Dataset, feature: str, spec: PlotSpec | None = None,
                    n_grid: int = 101) -> PlotOutput:
    """Observed accuracy against one numeric feature with the back-transformed
    regression line and its pointwise interval. Other columns are held at
    their trial means."""
    spec = spec or PlotSpec("regression")
    if feature not in fit.columns:
        raise ValueError(f"feature {feature!r} is not a column of the fitted model")
    col = fit.columns.index(feature)
    xs = fit.X[:, col]
    weights, _ = kernels.block_solve(dataset.v, dataset.starts, fit.sigma2_xi, fit.sigma2_zeta,
                                     np.ones(dataset.m))
    p_obs = dataset.p_obs
    xbar = fit.X.mean(axis=0)
    # one n_hat for the whole curve, so the back-transform is the same
    # monotone map at every x and a zero slope draws a flat line
    _, _, pop = population_estimate(fit, spec.alpha)
    grid = np.linspace(float(xs.min()), float(xs.max()), n_grid)
    curve = []
    for g in grid:
        row = xbar.copy()
        row[col] = g
        est = float(row @ fit.beta)
        var = float(row @ fit.cov_beta @ row)
        bt = backtransform_ci(est, var, fit.h, spec.alpha, pop.n_hat)
        curve.append({"x": float(g), "est": est, "var": var, "p": bt.p_bar, "lcb": bt.lcb, "ucb": bt.ucb})

    width = spec.width
    height = spec.height or 480
    left, right, top, bottom = 70, width - 20, 20, height - 50
    ax = Axis(float(xs.min()), float(xs.max()), left, right)
    if spec.axis == "full":
        y_lo, y_hi = 0.0, 1.0
    else:
        y_lo = min(float(p_obs.min()), min(c["lcb"] for c in curve))
        y_hi = max(float(p_obs.max()), max(c["ucb"] for c in curve))
        pad = 0.03 * max(y_hi - y_lo, 0.01)
        y_lo, y_hi = max(0.0, y_lo - pad), min(1.0, y_hi + pad)
        if spec.axis == "zero":
            y_lo = 0.0
    ay = Axis(y_lo, y_hi, bottom, top)
    svg = Svg(width, height)
    wmax = float(weights.max())
    rows = []
    for idx in range(dataset.m):
        j = int(dataset.study_index[idx])
        # area proportional to the trial's weight (row sum of W)
        r = 8.0 * math.sqrt(max(weights[idx], 0.0) / wmax) if wmax > 0 else 3.0
        x, y = ax(xs[idx]), ay(p_obs[idx])
        rows.append({"study_id": dataset.studies[j].study_id, "feature": float(xs[idx]),
                     "p": float(p_obs[idx]), "weight": float(weights[idx]), "x": x, "y": y, "r": r})
        svg.circle(x, y, r, fill=color(j), opacity=0.7)
    for c in curve:
        c["px"], c["py"], c["py_lcb"], c["py_ucb"] = ax(c["x"]), ay(c["p"]), ay(c["lcb"]), ay(c["ucb"])
    svg.polyline([(c["px"], c["py"]) for c in curve], stroke="#000000", width=2.0)
    svg.polyline([(c["px"], c["py_lcb"]) for c in curve], stroke="#000000", dash="5,4")
    svg.polyline([(c["px"], c["py_ucb"]) for c in curve], stroke="#000000", dash="5,4")
    svg.line(left, bottom, right, bottom)
    svg.line(left, top, left, bottom)
    for t in nice_ticks(ax.lo, ax.hi):
        svg.line(ax(t), bottom, ax(t), bottom + 5)
        svg.text(ax(t), bottom + 18, f"{t:g}", anchor="middle", size=10)
    for t in nice_ticks(ay.lo, ay.hi):
        svg.line(left - 5, ay(t), left, ay(t))
        svg.text(left - 8, ay(t) + 4, f"{t:g}", anchor="end", size=10)
    svg.text((left + right) / 2, height - 12, feature, anchor="middle")
    svg.text(16, (top + bottom) / 2, "Overall accuracy", anchor="middle", rotate=-90)
    geometry = {"width": width, "height": height, "x_axis": ax.to_dict(), "y_axis": ay.to_dict()}
    data = _sidecar("regression", spec, rows, geometry, feature=feature,
                    coefficient=float(fit.beta[col]), n_hat=pop.n_hat, curve=curve)
    return PlotOutput(svg.to_string(), data)


def _selection_models(path: SelectionPath) -> list:
    models = [dict(path.null.to_dict(), label="(null)", step=0)]
    for step in path.steps:
        for c in step.candidates:
            if c.ok:
                models.append(dict(c.to_dict(), label=" + ".join(c.model), step=step.step))
    return models


def selection_plot(path: SelectionPath, spec: PlotSpec | None = None) -> PlotOutput:
    """Three panels (AIC, BIC, RMSE) with one row per fitted model, sorted by
    AIC; dashed lines mark the null model."""
    spec = spec or PlotSpec("selection")
    models = sorted(_selection_models(path), key=lambda r: (r["aic"], r["label"]))
    row_h = 18
    top, bottom = 40, 50
    height = spec.height or top + row_h * len(models) + bottom
    label_w = 230
    panel_w = (spec.width - label_w - 20) / 3.0
    svg = Svg(spec.width, height)
    panels = {}
    for pi, key in enumerate(("aic", "bic", "rmse")):
        vals = [r[key] for r in models]
        lo, hi = min(vals), max(vals)
        pad = 0.05 * (hi - lo) if hi > lo else 1.0
        a = label_w + pi * panel_w + 10
        ax = Axis(lo - pad, hi + pad, a, a + panel_w - 20)
        panels[key] = ax
        svg.text(a + (panel_w - 20) / 2, 24, key.upper(), anchor="middle", weight="bold")
        y_end = top + row_h * len(models)
        svg.rect(a, top, panel_w - 20, y_end - top, fill="none", stroke="#000000")
        x_null = ax(path.null.to_dict()[key])
        svg.line(x_null, top, x_null, y_end, stroke="#555555", dash="4,3")
        for t in nice_ticks(ax.lo, ax.hi, 3):
            svg.line(ax(t), y_end, ax(t), y_end + 4)
            svg.text(ax(t), y_end + 16, f"{t:g}", anchor="middle", size=9)
    for i, r in enumerate(models):
        y = top + row_h * (i + 0.5)
        r["y"] = y
        svg.text(label_w - 6, y + 4, r["label"], anchor="end", size=10)
        for key, ax in panels.items():
            r[f"x_{key}"] = ax(r[key])
            svg.circle(ax(r[key]), y, 3.0, fill="#000000")
    geometry = {"width": spec.width, "height": height,
                "panels": {k: ax.to_dict() for k, ax in panels.items()}}
    data = _sidecar("selection", spec, models, geometry, criterion=path.criterion,
                    likelihood=path.likelihood, selected=list(path.selected))
    return PlotOutput(svg.to_string(), data)


def importance_plot(report: PfiReport, spec: PlotSpec | None = None) -> PlotOutput:
    """Mean PFI per feature with 25-75 (dark) and 2.5-97.5 (light) percentile bars."""
    spec = spec or PlotSpec("importance")
    feats = report.ordered()
    row_h = 24
    top, bottom = 30, 50
    height = spec.height or top + row_h * len(feats) + bottom
    left, right = 160, spec.width - 20
    lo = min(min(f.percentiles[2.5] for f in feats), 1.0)
    hi = max(max(f.percentiles[97.5] for f in feats), 1.0)
    pad = 0.05 * (hi - lo) if hi > lo else 0.05
    ax = Axis(lo - pad, hi + pad, left, right)
    svg = Svg(spec.width, height)
    rows = []
    y_end = top + row_h * len(feats)
    svg.line(ax(1.0), top - 5, ax(1.0), y_end, stroke="#000000")
    for i, f in enumerate(feats):
        y = top + row_h * (i + 0.5)
        pct = f.percentiles
        svg.rect(ax(pct[2.5]), y - 6, ax(pct[97.5]) - ax(pct[2.5]), 12, fill="#d9d9d9")
        svg.rect(ax(pct[25.0]), y - 6, ax(pct[75.0]) - ax(pct[25.0]), 12, fill="#969696")
        svg.circle(ax(f.mean), y, 4.0, fill="#000000")
        svg.text(left - 8, y + 4, f.feature, anchor="end")
        rows.append({"feature": f.feature, "mean": f.mean,
                     "percentiles": {f"{k:g}": v for k, v in pct.items()},
                     "y": y, "x_mean": ax(f.mean)})
    svg.line(left, y_end, right, y_end)
    for t in nice_ticks(ax.lo, ax.hi):
        svg.line(ax(t), y_end, ax(t), y_end + 5)
        svg.text(ax(t), y_end + 18, f"{t:g}", anchor="middle", size=10)
    svg.text((left + right) / 2, height - 10, "Permutation feature importance (RMSE ratio)", anchor="middle")
    geometry = {"width": spec.width, "height": height, "x_axis": ax.to_dict(), "reference_x": ax(1.0)}
    data = _sidecar("importance", spec, rows, geometry, folds=report.folds,
                    permutations=report.permutations, seed=report.seed)
    return PlotOutput(svg.to_string(), data)


def _model_column(fit: FitResult, alpha: float, r2: RSquared | None) -> dict:
    _, _, pop = population_estimate(fit, alpha)
    se = fit.se_beta
    col = {
        "columns": list(fit.columns),
        "Q": fit.q_stat,
        "Q_pvalue": fit.q_pvalue,
        "Q_pvalue_text": format_pvalue(fit.q_pvalue),
        "df": fit.q_df,
        "h": fit.h,
        "m": fit.m,
        "sigma2_xi": fit.sigma2_xi,
        "sigma2_zeta": fit.sigma2_zeta,
        "sigma2_eps": fit.sigma2_eps,
        "xi_at_boundary": fit.components.xi_at_boundary,
        "zeta_at_boundary": fit.components.zeta_at_boundary,
        "I2_xi": fit.i2.xi,
        "I2_zeta": fit.i2.zeta,
        "I2_eps": fit.i2.eps,
        "mu": fit.mu,
        "mu_se": fit.se_mu,
        "coefficients": [{"name": n, "estimate": float(b), "se": float(s)}
                         for n, b, s in zip(fit.columns[1:], fit.beta[1:], se[1:])],
        "p_bar": pop.p_bar,
        "p_lcb": pop.lcb,
        "p_ucb": pop.ucb,
        "loglik": fit.loglik,
        "method": fit.method,
    }
    if r2 is not None:
        col.update({"R2_xi": r2.xi, "R2_zeta": r2.zeta, "R2_xi_truncated": r2.xi_truncated,
                    "R2_zeta_truncated": r2.zeta_truncated})
    return col


def _sci(x):
    if x is None:
        return "undefined"
    if x == 0:
        return "0"
    if abs(x) >= 1e5 or abs(x) < 1e-3:
        mant, exp = f"{x:.1e}".split("e")
        exp = int(exp)
        return f"{mant}e{exp}" if mant not in ("1.0",) else f"1e{exp}"
    return f"{x:.4f}"


def _frac(x):
    return "undefined" if x is None else (f"{x:.2f}" if x >= 1e-3 else _sci(x))


def summary_table(null_fit: FitResult, feat_fit: FitResult | None = None, alpha: float = 0.05):
    """Table of both fitted models with Q, df, variance components and I^2,
    R^2, mu and coefficients with SEs, and the back-transformed estimate.
    Returns ``(text, data)``."""
    cols = {"meta_analysis": _model_column(null_fit, alpha, None)}
    if feat_fit is not None:
        if feat_fit.m != null_fit.m:
            raise ValueError("both fits must use the same dataset")
        cols["meta_regression"] = _model_column(feat_fit, alpha, r_squared(null_fit, feat_fit))
    data = {"schema_version": SCHEMA_VERSION, "kind": "summary", "alpha": alpha, "models": cols}

    names = list(cols)
    headers = ["", *("Meta-analysis" if n == "meta_analysis" else "Meta-regression" for n in names)]
    table = [
        ["Q", *(f"{_sci(c['Q'])} (p {c['Q_pvalue_text'] if c['Q_pvalue_text'].startswith('<') else '= ' + c['Q_pvalue_text']})" for c in cols.values())],
        ["df", *(str(c["df"]) for c in cols.values())],
        [f"sigma2_xi (h = {null_fit.h})", *(f"{c['sigma2_xi']:.4f} (I2_xi = {_frac(c['I2_xi'])})" for c in cols.values())],
        [f"sigma2_zeta (m = {null_fit.m})", *(f"{c['sigma2_zeta']:.4f} (I2_zeta = {_frac(c['I2_zeta'])})" for c in cols.values())],
        ["sigma2_eps", *(f"{_sci(c['sigma2_eps'])} (I2_eps = {_frac(c['I2_eps'])})" for c in cols.values())],
    ]
    if feat_fit is not None:
        reg = cols["meta_regression"]
        table.append(["R2_xi", "", "undefined" if reg["R2_xi"] is None else f"{reg['R2_xi']:.2f}"])
        table.append(["R2_zeta", "", "undefined" if reg["R2_zeta"] is None else f"{reg['R2_zeta']:.2f}"])
    table.append(["mu (SE)", *(f"{c['mu']:.4f} ({c['mu_se']:.4f})" for c in cols.values())])
    if feat_fit is not None:
        for coef in cols["meta_regression"]["coefficients"]:
            table.append([f"beta({coef['name']}) (SE)", "", f"{coef['estimate']:.4f} ({coef['se']:.4f})"])
    level = f"{100 * (1 - alpha):g}%"
    table.append([f"p_bar [{level} CI]", *(f"{c['p_bar']:.2f} [{c['p_lcb']:.2f}, {c['p_ucb']:.2f}]" for c in cols.values())])

    widths = [max(len(str(r[i])) for r in [headers] + table) for i in range(len(headers))]
    lines = ["  ".join(str(cell).ljust(w) for cell, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in table:
        lines.append("  ".join(str(cell).ljust(w) for cell, w in zip(r, widths)).rstrip())
    data["rows"] = [{"label": r[0], "values": r[1:]} for r in table]
    return "\n".join(lines) + "\n", data
