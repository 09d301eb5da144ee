"""Random-search hyperparameter tuning with stratified cross-validation.

All randomness is drawn from streams derived from (seed, model id,
candidate index, fold index), so results are reproducible and do not
depend on evaluation order.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import learners
from .learners import MODEL_IDS
from .metrics import auc, confusion_metrics

log = logging.getLogger(__name__)


class TuningError(Exception):
    pass


def _mid_index(model_id: str) -> int:
    try:
        return MODEL_IDS.index(model_id)
    except ValueError:
        raise TuningError(f"unknown model id: {model_id}") from None


def default_spaces(n_features: int) -> dict:
    """Per-model hyperparameter distributions.

    Distribution specs: ("int", lo, hi) inclusive, ("real", lo, hi)
    uniform, ("logreal", lo, hi) log-uniform.
    """
    p = max(1, n_features)
    mtry_lo = max(1, int(np.ceil(np.sqrt(p))) // 2)
    return {
        "logreg": {},
        "glmnet": {"lam": ("logreal", 1e-4, 10.0)},
        "rpart": {"max_depth": ("int", 2, 10), "min_leaf": ("int", 5, 50)},
        "randomForest": {"n_trees": ("int", 100, 500),
                         "mtry": ("int", mtry_lo, p)},
        "ranger": {"n_trees": ("int", 100, 500), "mtry": ("int", mtry_lo, p),
                   "sample_fraction": ("real", 0.5, 1.0)},
        "xgboost": {"n_rounds": ("int", 50, 500),
                    "learning_rate": ("logreal", 0.01, 0.3),
                    "max_depth": ("int", 2, 8),
                    "subsample": ("real", 0.5, 1.0)},
    }


def sample_params(space: dict, rng: np.random.Generator) -> dict:
    out = {}
    for name, (kind, lo, hi) in space.items():
        if kind == "int":
            out[name] = int(rng.integers(lo, hi + 1))
        elif kind == "real":
            out[name] = float(rng.uniform(lo, hi))
        elif kind == "logreal":
            out[name] = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        else:
            raise TuningError(f"unknown distribution kind: {kind}")
    return out


def fit_spec(model_id: str, params: dict, X, y, feature_names=None, seed: int = 0):
    """Construct and fit the learner named by model_id."""
    if model_id == "logreg":
        return learners.fit_logistic(X, y, lam=0.0, model_id=model_id,
                                     feature_names=feature_names)
    if model_id == "glmnet":
        return learners.fit_logistic(X, y, lam=params["lam"], model_id=model_id,
                                     feature_names=feature_names)
    if model_id == "rpart":
        return learners.fit_tree(X, y, max_depth=params["max_depth"],
                                 min_leaf=params["min_leaf"], min_gain=0.0,
                                 model_id=model_id, feature_names=feature_names)
    if model_id == "randomForest":
        return learners.fit_forest(X, y, n_trees=params["n_trees"],
                                   mtry=params["mtry"], sample_fraction=1.0,
                                   replace=True, min_leaf=1, seed=seed,
                                   model_id=model_id, feature_names=feature_names)
    if model_id == "ranger":
        return learners.fit_forest(X, y, n_trees=params["n_trees"],
                                   mtry=params["mtry"],
                                   sample_fraction=params["sample_fraction"],
                                   replace=False, min_leaf=1, seed=seed,
                                   model_id=model_id, feature_names=feature_names)
    if model_id == "xgboost":
        return learners.fit_gbt(X, y, n_rounds=params["n_rounds"],
                                learning_rate=params["learning_rate"],
                                max_depth=params["max_depth"],
                                subsample=params["subsample"], min_leaf=5,
                                seed=seed, model_id=model_id,
                                feature_names=feature_names)
    raise TuningError(f"unknown model id: {model_id}")


def stratified_folds(y: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Fold assignment; every row lands in exactly one validation fold and
    per-fold class counts are within one row of proportionality."""
    fold = np.empty(len(y), dtype=np.int64)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        perm = rng.permutation(idx)
        fold[perm] = np.arange(len(perm)) % k
    return fold


def stratified_subsample(y: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Row indices of a stratified subsample of the requested size."""
    n = len(y)
    if size >= n:
        return np.arange(n)
    picks = []
    counts = {}
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        counts[cls] = int(np.floor(len(idx) * size / n))
    while sum(counts.values()) < size:
        counts[0 if counts[0] / max((y == 0).sum(), 1) <= counts[1] / max((y == 1).sum(), 1) else 1] += 1
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        perm = rng.permutation(len(idx))
        picks.append(idx[perm[:counts[cls]]])
    return np.sort(np.concatenate(picks))


@dataclass
class Trial:
    params: dict
    mean_cv_auc: float
    fold_aucs: list
    error: str = ""

    def to_json(self) -> dict:
        return {"params": self.params, "mean_cv_auc": self.mean_cv_auc,
                "fold_aucs": self.fold_aucs, "error": self.error}


@dataclass
class TuneResult:
    model_id: str
    trials: list = field(default_factory=list)
    best_params: dict = field(default_factory=dict)
    model: object = None
    train_auc: float = 0.0
    test_auc: float = 0.0
    fit_time: float = 0.0
    score_time: float = 0.0
    metrics: dict = field(default_factory=dict)
    failed: bool = False
    error: str = ""

    def record(self) -> dict:
        """One Table-style metrics record."""
        return {"model_id": self.model_id,
                "fit_time_s": self.fit_time, "score_time_s": self.score_time,
                "train_auc": self.train_auc, "test_auc": self.test_auc,
                "accuracy": self.metrics.get("accuracy", 0.0),
                "precision": self.metrics.get("precision", 0.0),
                "recall": self.metrics.get("recall", 0.0),
                "f1": self.metrics.get("f1", 0.0),
                "failed": self.failed}


def random_search(X_train, y_train, X_test, y_test, model_id: str, space: dict,
                  tune_iters: int = 10, folds: int = 5, max_obs: int = 4000,
                  seed: int = 0, feature_names=None) -> TuneResult:
    """Tune one model by random search, refit the winner on full train,
    and evaluate it on the test partition."""
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    mid = _mid_index(model_id)
    n = len(y_train)

    if n > max_obs:
        rng = np.random.default_rng([seed, mid, 1])
        sub = stratified_subsample(y_train.astype(np.int8), max_obs, rng)
        X_tune, y_tune = X_train[sub], y_train[sub]
    else:
        X_tune, y_tune = X_train, y_train

    cand_rng = np.random.default_rng([seed, mid, 2])
    n_cand = 1 if not space else tune_iters
    candidates = [sample_params(space, cand_rng) for _ in range(n_cand)]
    fold_rng = np.random.default_rng([seed, mid, 3])
    fold_of = stratified_folds(y_tune.astype(np.int8), folds, fold_rng)

    trials = []
    for c, params in enumerate(candidates):
        fold_aucs = []
        err = ""
        for f in range(folds):
            va = fold_of == f
            tr = ~va
            fit_seed = int(np.random.default_rng([seed, mid, c, f]).integers(2**31))
            try:
                m = fit_spec(model_id, params, X_tune[tr], y_tune[tr], seed=fit_seed)
                fold_aucs.append(auc(m.score(X_tune[va]), y_tune[va]))
            except Exception as e:  # failed candidate scores 0, search continues
                err = f"fold {f}: {e}"
                log.warning("%s candidate %d failed: %s", model_id, c, err)
                fold_aucs = []
                break
        mean = float(np.mean(fold_aucs)) if fold_aucs else 0.0
        trials.append(Trial(params=params, mean_cv_auc=mean,
                            fold_aucs=[float(a) for a in fold_aucs], error=err))

    if all(t.error for t in trials):
        return TuneResult(model_id=model_id, trials=trials, failed=True,
                          error="all candidates failed")

    best_idx = int(np.argmax([t.mean_cv_auc for t in trials]))
    best = trials[best_idx]
    refit_seed = int(np.random.default_rng([seed, mid, 4]).integers(2**31))
    try:
        model = fit_spec(model_id, best.params, X_train, y_train,
                         feature_names=feature_names, seed=refit_seed)
    except Exception as e:
        return TuneResult(model_id=model_id, trials=trials, failed=True,
                          error=f"refit failed: {e}")
    train_scores, _ = learners.score(model, X_train)
    test_scores, score_time = learners.score(model, np.asarray(X_test, dtype=np.float64))
    y_test = np.asarray(y_test)
    result = TuneResult(model_id=model_id, trials=trials, best_params=best.params,
                        model=model, train_auc=auc(train_scores, y_train),
                        test_auc=auc(test_scores, y_test),
                        fit_time=model.fit_time, score_time=score_time,
                        metrics=confusion_metrics(test_scores, y_test))
    return result


def select_best(results: list) -> str:
    """Model id with the highest test AUC; ties go to the faster fit."""
    alive = [r for r in results if not r.failed]
    if not alive:
        raise TuningError("no model trained")
    best = min(alive, key=lambda r: (-r.test_auc, r.fit_time))
    return best.model_id
