"""Informative-missingness detection.

For each feature with enough missing cells, a throwaway decision tree is
fit to predict the missingness indicator from all other features. A high
cross-validated AUC means the missingness carries signal, so the
indicator is kept as an extra feature; otherwise it is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .learners import fit_tree
from .metrics import MetricsError, auc
from .table import Column, Kind, Role, Table


class MarError(Exception):
    pass


@dataclass(frozen=True)
class MarConfig:
    auc_threshold: float = 0.8
    cv_folds: int = 5
    aux_max_depth: int = 5
    aux_min_leaf: int = 5

    def __post_init__(self):
        if not 0.5 < self.auc_threshold < 1:
            raise MarError("auc_threshold must be in (0.5, 1)")


@dataclass(frozen=True)
class MarEntry:
    feature: str
    missing_count: int
    auc: float | None
    verdict: str          # Retained | Dropped | Skipped
    note: str = ""

    def to_json(self) -> dict:
        return {"feature": self.feature, "missing_count": self.missing_count,
                "auc": self.auc, "verdict": self.verdict, "note": self.note}


@dataclass(frozen=True)
class MarReport:
    entries: list = field(default_factory=list)
    indicator_columns: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"entries": [e.to_json() for e in self.entries],
                "indicator_columns": list(self.indicator_columns)}

    @classmethod
    def from_json(cls, d: dict) -> "MarReport":
        return cls(entries=[MarEntry(**e) for e in d["entries"]],
                   indicator_columns=list(d["indicator_columns"]))


def mar_indicator(t: Table, name: str) -> np.ndarray:
    """0/1 vector marking where the named column is missing."""
    return t.column(name).missing.astype(np.int8)


def _aux_matrix(t: Table, feature_names: list[str]) -> np.ndarray:
    """Throwaway-imputed, ordinal-encoded matrix for auxiliary fits only."""
    cols = []
    for name in feature_names:
        col = t.column(name)
        vals = col.values.astype(np.float64).copy()
        obs = col.non_missing()
        if len(obs) == 0:
            fill = 0.0
        elif col.kind is Kind.NUMERIC:
            fill = float(np.median(obs))
        else:
            uniq, cnt = np.unique(obs, return_counts=True)
            fill = float(uniq[cnt.argmax()])
        vals[col.missing] = fill
        cols.append(vals)
    return np.ascontiguousarray(np.column_stack(cols))


def _stratified_folds(y: np.ndarray, k: int, rng: np.random.Generator):
    """Fold id per row; class proportions within one row of proportional."""
    fold = np.empty(len(y), dtype=np.int64)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        perm = rng.permutation(idx)
        fold[perm] = np.arange(len(perm)) % k
    return fold


def _cv_auc(X: np.ndarray, y: np.ndarray, cfg: MarConfig, seed: int) -> float:
    rng = np.random.default_rng([seed, 94121])
    folds = _stratified_folds(y, cfg.cv_folds, rng)
    aucs = []
    for f in range(cfg.cv_folds):
        tr = folds != f
        va = ~tr
        if y[va].min() == y[va].max() or y[tr].min() == y[tr].max():
            continue
        model = fit_tree(X[tr], y[tr].astype(np.float64),
                         max_depth=cfg.aux_max_depth, min_leaf=cfg.aux_min_leaf)
        aucs.append(auc(model.score(X[va]), y[va]))
    if not aucs:
        raise MetricsError("no valid folds")
    return float(np.mean(aucs))


def mar_scan(train: Table, schema, cfg: MarConfig, seed: int = 0):
    """Scan every feature with enough missing cells; append retained
    indicators as <name>_mar boolean columns."""
    feature_names = [c.name for c in train.columns
                     if schema.roles.get(c.name) is Role.FEATURE]
    n = train.n_rows
    floor = max(10, int(np.ceil(0.005 * n)))
    entries = []
    new_cols = []
    for name in feature_names:
        miss = train.column(name).missing
        count = int(miss.sum())
        if count == 0:
            continue
        if count < floor or count > n - floor:
            note = ("indicator nearly constant" if count >= n - floor
                    else f"fewer than {floor} missing cells")
            entries.append(MarEntry(name, count, None, "Skipped", note))
            continue
        y = miss.astype(np.int8)
        others = [f for f in feature_names if f != name]
        X = _aux_matrix(train, others)
        try:
            score = _cv_auc(X, y, cfg, seed)
        except MetricsError:
            entries.append(MarEntry(name, count, None, "Skipped",
                                    "indicator constant within folds"))
            continue
        if score >= cfg.auc_threshold:
            entries.append(MarEntry(name, count, score, "Retained"))
            new_cols.append(Column(f"{name}_mar", Kind.BOOLEAN, y.copy(),
                                   np.zeros(n, dtype=bool)))
        else:
            entries.append(MarEntry(name, count, score, "Dropped"))
    report = MarReport(entries=entries,
                       indicator_columns=[c.name for c in new_cols])
    out = train.with_columns(new_cols) if new_cols else train
    return out, report
