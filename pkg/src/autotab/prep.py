"""Replayable data preparation: cleaning, imputation, outlier handling,
feature engineering, and feature selection.

Everything is fit on the training table only; the resulting PrepPipeline
replays the stored transforms on any table without refitting, so test
data can never leak statistics into the pipeline.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from datetime import date
from itertools import combinations

import numpy as np

from .metrics import auc
from .table import EPOCH_ORDINAL, Column, Kind, Role, Schema, Table, TableError

PIPELINE_VERSION = 1


class PrepError(Exception):
    pass


@dataclass(frozen=True)
class PrepConfig:
    missimpute: str = "MeanMedian"          # or "ModeOnly"
    auto_mar: bool = False
    dummyvar: bool = True
    char_var_limit: int = 15
    aucv: float = 0.002
    corr: float = 0.98
    outlier_flag: bool = True
    max_interaction_pairs: int = 200

    def __post_init__(self):
        if self.missimpute not in ("MeanMedian", "ModeOnly"):
            raise PrepError("missimpute must be MeanMedian or ModeOnly")
        if not 0 < self.aucv < 0.5:
            raise PrepError("aucv must be in (0, 0.5)")
        if not 0 < self.corr <= 1:
            raise PrepError("corr must be in (0,1]")
        if self.char_var_limit < 2:
            raise PrepError("char_var_limit must be >= 2")


class Reject(enum.Enum):
    ZERO_VARIANCE = "ZeroVariance"
    HIGH_CORRELATION = "HighCorrelation"
    LOW_AUC = "LowAUC"
    HIGH_CARDINALITY = "HighCardinality"
    DUPLICATE = "Duplicate"


@dataclass(frozen=True)
class Rejection:
    feature: str
    reason: Reject
    detail: str = ""

    def to_json(self) -> dict:
        return {"feature": self.feature, "reason": self.reason.value,
                "detail": self.detail}


def clean_name(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower())


def _unique_names(raw: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for n in raw:
        if n in seen:
            seen[n] += 1
            out.append(f"{n}_{seen[n]}")
        else:
            seen[n] = 1
            out.append(n)
    return out


def clean_names(t: Table) -> tuple[Table, dict]:
    """Lowercase/underscore column names, suffixing collisions _2, _3, ..."""
    new = _unique_names([clean_name(c.name) for c in t.columns])
    mapping = {c.name: n for c, n in zip(t.columns, new)}
    return Table(t.name, tuple(c.rename(n) for c, n in zip(t.columns, new))), mapping


def dedupe_rows(t: Table) -> Table:
    keys = set()
    keep = []
    for i in range(t.n_rows):
        key = tuple((bool(c.missing[i]), None if c.missing[i] else c.values[i].item())
                    for c in t.columns)
        if key not in keys:
            keys.add(key)
            keep.append(i)
    if len(keep) == t.n_rows:
        return t
    return t.take(np.asarray(keep))


def clean(t: Table) -> tuple[Table, dict]:
    """Duplicate-row removal plus name cleaning; returns (table, name map)."""
    t2, mapping = clean_names(t)
    return dedupe_rows(t2), mapping


# ---------------------------------------------------------------------------
# imputation


def _mode(values: np.ndarray, levels=None):
    """Most frequent value; ties resolved to the smallest (lexicographic for
    categorical levels, numeric order otherwise)."""
    uniq, counts = np.unique(values, return_counts=True)
    if levels is not None:
        order = sorted(range(len(uniq)), key=lambda i: (-counts[i], levels[int(uniq[i])]))
    else:
        order = sorted(range(len(uniq)), key=lambda i: (-counts[i], uniq[i]))
    return uniq[order[0]]


def fit_impute(train: Table, cfg: PrepConfig, feature_names: list[str]):
    """Per-column imputation values from train; 100%-missing columns are
    flagged for removal instead."""
    imap: dict = {}
    rejected: list[Rejection] = []
    for name in feature_names:
        col = train.column(name)
        obs = col.non_missing()
        if len(obs) == 0:
            rejected.append(Rejection(name, Reject.ZERO_VARIANCE,
                                      "all values missing in train"))
            continue
        if col.kind is Kind.NUMERIC and cfg.missimpute == "MeanMedian":
            imap[name] = float(np.median(obs))
        elif col.kind is Kind.CATEGORICAL:
            imap[name] = col.levels[int(_mode(obs, col.levels))]
        elif col.kind is Kind.NUMERIC:
            imap[name] = float(_mode(obs))
        else:  # boolean / date: mode
            imap[name] = int(_mode(obs))
    return imap, rejected


def apply_impute(t: Table, imap: dict) -> Table:
    out = t
    for name, value in imap.items():
        col = out.column(name)
        if not col.missing.any():
            continue
        vals = col.values.copy()
        if col.kind is Kind.CATEGORICAL:
            if value in col.levels:
                fill = col.levels.index(value)
                levels = col.levels
            else:
                levels = col.levels + (value,)
                fill = len(levels) - 1
            vals[col.missing] = fill
            new = Column(name, col.kind, vals, np.zeros(col.n_rows, dtype=bool), levels)
        else:
            vals[col.missing] = value
            new = Column(name, col.kind, vals, np.zeros(col.n_rows, dtype=bool))
        out = out.replace_column(new)
    return out


# ---------------------------------------------------------------------------
# outliers


@dataclass(frozen=True)
class OutlierSpec:
    lo_fence: float
    hi_fence: float
    cap_lo: float
    cap_hi: float
    has_outliers: bool

    def to_json(self):
        return {"lo_fence": self.lo_fence, "hi_fence": self.hi_fence,
                "cap_lo": self.cap_lo, "cap_hi": self.cap_hi,
                "has_outliers": self.has_outliers}


def fit_outliers(train: Table, numeric_names: list[str]) -> dict:
    """Tukey 1.5*IQR fences plus 5th/95th percentile caps, type-7 quantiles
    over non-missing train cells."""
    specs = {}
    for name in numeric_names:
        obs = train.column(name).non_missing()
        if len(obs) == 0:
            continue
        q1, q3, p5, p95 = np.quantile(obs, [0.25, 0.75, 0.05, 0.95])
        iqr = q3 - q1
        lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
        has = bool(((obs < lo) | (obs > hi)).any())
        specs[name] = OutlierSpec(float(lo), float(hi), float(p5), float(p95), has)
    return specs


def apply_outliers(t: Table, specs: dict) -> Table:
    out = t
    flags = []
    for name, spec in specs.items():
        if not spec.has_outliers:
            continue
        col = out.column(name)
        vals = col.values.copy()
        low = vals < spec.lo_fence
        high = vals > spec.hi_fence
        flag = ((low | high) & ~col.missing).astype(np.int8)
        vals[low] = spec.cap_lo
        vals[high] = spec.cap_hi
        out = out.replace_column(Column(name, col.kind, vals, col.missing))
        flags.append(Column(f"{name}_out_flag", Kind.BOOLEAN, flag,
                            np.zeros(col.n_rows, dtype=bool)))
    return out.with_columns(flags) if flags else out


# ---------------------------------------------------------------------------
# feature engineering


def engineer_dates(t: Table, date_names: list[str]) -> Table:
    cols = []
    for c in t.columns:
        if c.name not in date_names:
            cols.append(c)
            continue
        parts = {"year": [], "month": [], "day": [], "weekday": []}
        for i in range(c.n_rows):
            d = date.fromordinal(int(c.values[i]) + EPOCH_ORDINAL)
            parts["year"].append(d.year)
            parts["month"].append(d.month)
            parts["day"].append(d.day)
            parts["weekday"].append(d.isoweekday())
        for suffix, vals in parts.items():
            cols.append(Column(f"{c.name}_{suffix}", Kind.NUMERIC,
                               np.asarray(vals, dtype=np.float64), c.missing.copy()))
        cols.append(Column(f"{c.name}_epochdays", Kind.NUMERIC,
                           c.values.astype(np.float64), c.missing.copy()))
    return Table(t.name, tuple(cols))


def interaction_pairs(numeric_names: list[str], max_pairs: int) -> list:
    return list(combinations(numeric_names, 2))[:max_pairs]


def engineer_interactions(t: Table, pairs: list) -> Table:
    extra = []
    for a, b in pairs:
        ca, cb = t.column(a), t.column(b)
        extra.append(Column(f"{a}_x_{b}", Kind.NUMERIC, ca.values * cb.values,
                            ca.missing | cb.missing))
    return t.with_columns(extra) if extra else t


def fit_onehot(train: Table, cfg: PrepConfig, cat_names: list[str]):
    """Dummy maps for categoricals with 2..char_var_limit train levels."""
    dmaps: dict = {}
    rejected: list[Rejection] = []
    for name in cat_names:
        col = train.column(name)
        levels = sorted({col.levels[int(v)] for v in col.non_missing()})
        if len(levels) < 2:
            rejected.append(Rejection(name, Reject.ZERO_VARIANCE,
                                      "single level in train"))
        elif len(levels) > cfg.char_var_limit:
            rejected.append(Rejection(name, Reject.HIGH_CARDINALITY,
                                      f"{len(levels)} levels > {cfg.char_var_limit}"))
        else:
            dmaps[name] = levels
    return dmaps, rejected


def dummy_names(col_name: str, levels: list[str]) -> list[str]:
    return _unique_names([f"{col_name}_{clean_name(lv)}" for lv in levels])


def apply_onehot(t: Table, dmaps: dict) -> Table:
    out_cols = []
    for c in t.columns:
        if c.name not in dmaps:
            out_cols.append(c)
            continue
        levels = dmaps[c.name]
        lut = {lv: j for j, lv in enumerate(levels)}
        names = dummy_names(c.name, levels)
        mats = np.zeros((len(levels), c.n_rows))
        for i in range(c.n_rows):
            if c.missing[i]:
                continue  # unseen levels and missing both map to all zeros
            j = lut.get(c.levels[int(c.values[i])])
            if j is not None:
                mats[j, i] = 1.0
        for j, name in enumerate(names):
            out_cols.append(Column(name, Kind.NUMERIC, mats[j].copy(),
                                   np.zeros(c.n_rows, dtype=bool)))
    return Table(t.name, tuple(out_cols))


def apply_ordinal(t: Table, omaps: dict) -> Table:
    """Level-index encoding used when dummy encoding is disabled."""
    out = t
    for name, levels in omaps.items():
        col = out.column(name)
        lut = {lv: float(j) for j, lv in enumerate(levels)}
        vals = np.array([lut.get(col.levels[int(v)], -1.0) for v in col.values])
        out = out.replace_column(Column(name, Kind.NUMERIC, vals, col.missing.copy()))
    return out


# ---------------------------------------------------------------------------
# feature selection


def select_features(candidates: list, y: np.ndarray, cfg: PrepConfig):
    """Zero-variance, duplicate, pairwise-correlation, then AUC filtering.

    candidates: ordered (name, float vector) pairs, fully imputed.
    Correlation pairs are scanned in column order and the later column of
    an over-correlated pair is dropped.
    """
    rejections: list[Rejection] = []
    kept: list[tuple[str, np.ndarray]] = []
    for name, vec in candidates:
        if vec.min() == vec.max():
            rejections.append(Rejection(name, Reject.ZERO_VARIANCE))
            continue
        kept.append((name, vec))

    if len(kept) > 1:
        corr = np.corrcoef(np.vstack([v for _, v in kept]))
        alive = [True] * len(kept)
        for j in range(1, len(kept)):
            for i in range(j):
                if alive[i] and alive[j] and abs(corr[i, j]) >= cfg.corr - 1e-12:
                    rejections.append(Rejection(kept[j][0], Reject.HIGH_CORRELATION,
                                                kept[i][0]))
                    alive[j] = False
                    break
        kept = [kv for kv, a in zip(kept, alive) if a]

    selected = []
    for name, vec in kept:
        a = auc(vec, y)
        if max(a, 1.0 - a) - 0.5 < cfg.aucv:
            rejections.append(Rejection(name, Reject.LOW_AUC, f"auc={a:.4f}"))
        else:
            selected.append(name)
    if not selected:
        raise PrepError("no features selected")
    return selected, rejections


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class PrepPipeline:
    config: PrepConfig
    target: str
    target_positive_label: str
    feature_names: list[str]            # post-clean source features
    impute_map: dict
    outlier_specs: dict
    date_names: list[str]
    pairs: list
    dummy_maps: dict
    ordinal_maps: dict
    mar_sources: list[str]
    mar_report: "object | None"
    selected: list[str]
    rejections: list[Rejection]

    def to_json(self) -> dict:
        return {
            "version": PIPELINE_VERSION,
            "config": {k: getattr(self.config, k) for k in
                       ("missimpute", "auto_mar", "dummyvar", "char_var_limit",
                        "aucv", "corr", "outlier_flag", "max_interaction_pairs")},
            "target": self.target,
            "target_positive_label": self.target_positive_label,
            "feature_names": self.feature_names,
            "impute_map": self.impute_map,
            "outlier_specs": {k: v.to_json() for k, v in self.outlier_specs.items()},
            "date_names": self.date_names,
            "interaction_pairs": [list(p) for p in self.pairs],
            "dummy_maps": self.dummy_maps,
            "ordinal_maps": self.ordinal_maps,
            "mar_sources": self.mar_sources,
            "mar_report": self.mar_report.to_json() if self.mar_report else None,
            "selected": self.selected,
            "rejections": [r.to_json() for r in self.rejections],
        }

    @classmethod
    def from_json(cls, d: dict) -> "PrepPipeline":
        if d.get("version") != PIPELINE_VERSION:
            raise PrepError(f"unsupported pipeline version: {d.get('version')}")
        from .mar import MarReport
        return cls(
            config=PrepConfig(**d["config"]),
            target=d["target"],
            target_positive_label=d["target_positive_label"],
            feature_names=list(d["feature_names"]),
            impute_map=dict(d["impute_map"]),
            outlier_specs={k: OutlierSpec(**v) for k, v in d["outlier_specs"].items()},
            date_names=list(d["date_names"]),
            pairs=[tuple(p) for p in d["interaction_pairs"]],
            dummy_maps={k: list(v) for k, v in d["dummy_maps"].items()},
            ordinal_maps={k: list(v) for k, v in d["ordinal_maps"].items()},
            mar_sources=list(d["mar_sources"]),
            mar_report=MarReport.from_json(d["mar_report"]) if d["mar_report"] else None,
            selected=list(d["selected"]),
            rejections=[Rejection(r["feature"], Reject(r["reason"]), r["detail"])
                        for r in d["rejections"]],
        )


def _transform(pipe: PrepPipeline, t: Table, with_target: bool) -> Table:
    """Replay the fitted transforms (shared by fit and apply)."""
    from .mar import mar_indicator

    for name in pipe.feature_names:
        if not t.has_column(name):
            raise PrepError(f"apply: table is missing required column {name}")
    keep = [n for n in pipe.feature_names]
    if with_target and t.has_column(pipe.target):
        keep.append(pipe.target)
    t = t.select(keep)

    mar_cols = [Column(f"{src}_mar", Kind.BOOLEAN, mar_indicator(t, src),
                       np.zeros(t.n_rows, dtype=bool))
                for src in pipe.mar_sources]
    t = apply_impute(t, pipe.impute_map)
    t = apply_outliers(t, pipe.outlier_specs)
    t = engineer_dates(t, pipe.date_names)
    t = engineer_interactions(t, pipe.pairs)
    t = apply_onehot(t, pipe.dummy_maps)
    t = apply_ordinal(t, pipe.ordinal_maps)
    if mar_cols:
        t = t.with_columns(mar_cols)
    return t


def _candidate_columns(t: Table, pipe: PrepPipeline) -> list:
    out = []
    for c in t.columns:
        if c.name == pipe.target:
            continue
        if c.kind in (Kind.NUMERIC, Kind.BOOLEAN):
            out.append((c.name, c.values.astype(np.float64)))
    return out


def fit_prep(train: Table, schema: Schema, cfg: PrepConfig,
             mar_config=None, seed: int = 0) -> PrepPipeline:
    """Fit the full preparation pipeline on the training table."""
    cleaned, mapping = clean(train)
    roles = {mapping[k]: v for k, v in schema.roles.items()}
    target = mapping[schema.target]
    feature_names = [c.name for c in cleaned.columns
                     if roles.get(c.name) is Role.FEATURE]

    impute_map, rejections = fit_impute(cleaned, cfg, feature_names)
    feature_names = [n for n in feature_names if n in impute_map]

    mar_sources: list[str] = []
    mar_report = None
    if cfg.auto_mar:
        from .mar import MarConfig, mar_scan
        mcfg = mar_config or MarConfig()
        schema2 = Schema(target=target,
                         roles={n: roles.get(n, Role.DROPPED) for n in cleaned.names},
                         target_positive_label=schema.target_positive_label)
        _, mar_report = mar_scan(cleaned, schema2, mcfg, seed=seed)
        mar_sources = [e.feature for e in mar_report.entries
                       if e.verdict == "Retained"]

    numeric_names = [n for n in feature_names
                     if cleaned.column(n).kind is Kind.NUMERIC]
    cat_names = [n for n in feature_names
                 if cleaned.column(n).kind is Kind.CATEGORICAL]
    date_names = [n for n in feature_names
                  if cleaned.column(n).kind is Kind.DATE]

    outlier_specs = fit_outliers(cleaned, numeric_names) if cfg.outlier_flag else {}
    pairs = interaction_pairs(numeric_names, cfg.max_interaction_pairs)
    if cfg.dummyvar:
        dummy_maps, oh_rej = fit_onehot(cleaned, cfg, cat_names)
        ordinal_maps = {}
    else:
        dummy_maps, oh_rej = {}, []
        ordinal_maps = {}
        for n in cat_names:
            col = cleaned.column(n)
            ordinal_maps[n] = sorted({col.levels[int(v)] for v in col.non_missing()})
    rejections += oh_rej
    encoded_out = {r.feature for r in rejections}
    feature_names = [n for n in feature_names if n not in encoded_out]

    pipe = PrepPipeline(config=cfg, target=target,
                        target_positive_label=schema.target_positive_label,
                        feature_names=feature_names, impute_map=impute_map,
                        outlier_specs=outlier_specs, date_names=date_names,
                        pairs=pairs, dummy_maps=dummy_maps,
                        ordinal_maps=ordinal_maps, mar_sources=mar_sources,
                        mar_report=mar_report, selected=[], rejections=rejections)

    transformed = _transform(pipe, cleaned, with_target=True)
    from .table import target_labels
    schema_t = Schema(target=target, roles={target: Role.TARGET},
                      target_positive_label=schema.target_positive_label)
    y = target_labels(transformed, schema_t)
    selected, sel_rej = select_features(_candidate_columns(transformed, pipe), y, cfg)
    pipe.selected = selected
    pipe.rejections = rejections + sel_rej
    return pipe


def apply_prep(pipe: PrepPipeline, t: Table) -> Table:
    """Replay a fitted pipeline; output = selected features (+ target if present)."""
    t, _ = clean_names(t)
    has_target = t.has_column(pipe.target)
    transformed = _transform(pipe, t, with_target=has_target)
    cols = [transformed.column(n) for n in pipe.selected]
    if has_target:
        from .table import target_labels
        schema_t = Schema(target=pipe.target, roles={pipe.target: Role.TARGET},
                          target_positive_label=pipe.target_positive_label)
        y = target_labels(transformed, schema_t)
        cols.append(Column(pipe.target, Kind.BOOLEAN, y,
                           np.zeros(transformed.n_rows, dtype=bool)))
    return Table(t.name, tuple(cols))


def to_matrix(t: Table, names: list[str]) -> np.ndarray:
    """Feature matrix in the given column order (float64, C-contiguous)."""
    return np.ascontiguousarray(
        np.column_stack([t.column(n).values.astype(np.float64) for n in names]))
