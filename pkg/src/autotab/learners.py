"""Binary classifiers: regularized/plain logistic regression, CART decision
tree, two random-forest variants, and gradient-boosted trees.

All learners share the same surface: a fit_* constructor taking (X, y) plus
hyperparameters, returning a model with .score(X) -> probabilities in [0,1],
.importance() normalized to sum 1, and versioned JSON round-tripping.
Fits are deterministic given (X, y, hyperparams, seed); forest trees use
per-tree RNG streams derived from (seed, tree index) so results do not
depend on execution order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ._tree import CRIT_GINI, CRIT_VARIANCE, grow_tree, predict_tree

MODEL_IDS = ("glmnet", "logreg", "randomForest", "ranger", "xgboost", "rpart")

SERIAL_VERSION = 1


class FitError(Exception):
    pass


def _as_matrix(X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise FitError("X must be 2-dimensional")
    return X


def _normalized(scores: np.ndarray, names: list[str]) -> dict:
    total = scores.sum()
    if total > 0:
        scores = scores / total
    return {n: float(s) for n, s in zip(names, scores)}


@dataclass
class _Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        return predict_tree(X, self.feature, self.threshold, self.left,
                            self.right, self.value)

    def to_json(self) -> dict:
        return {"feature": self.feature.tolist(),
                "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "_Tree":
        return cls(np.asarray(d["feature"], dtype=np.int32),
                   np.asarray(d["threshold"], dtype=np.float64),
                   np.asarray(d["left"], dtype=np.int32),
                   np.asarray(d["right"], dtype=np.int32),
                   np.asarray(d["value"], dtype=np.float64))


@dataclass
class TrainedModel:
    model_id: str
    feature_names: list[str]
    fit_time: float = 0.0

    def score(self, X) -> np.ndarray:
        raise NotImplementedError

    def importance(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


def logistic_loss_grad(X, y, w, b, lam):
    """Mean negative log-likelihood + (lam/2)||w||^2 and its gradient.

    The intercept is unpenalized. Uses logaddexp so the loss stays finite
    for any finite inputs.
    """
    z = X @ w + b
    n = len(y)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * lam * (w @ w))
    p = expit(z)
    r = p - y
    gw = X.T @ r / n + lam * w
    gb = float(r.mean())
    return loss, gw, gb


@dataclass
class LogisticModel(TrainedModel):
    coef: np.ndarray = None            # on standardized scale
    intercept: float = 0.0
    mean: np.ndarray = None
    scale: np.ndarray = None           # 0 marks an ignored (constant) feature
    lam: float = 0.0
    n_iter: int = 0
    converged: bool = False

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        safe = np.where(self.scale > 0, self.scale, 1.0)
        Z = (X - self.mean) / safe
        Z[:, self.scale == 0] = 0.0
        return Z

    def decision(self, X) -> np.ndarray:
        return self._standardize(_as_matrix(X)) @ self.coef + self.intercept

    def score(self, X) -> np.ndarray:
        return expit(self.decision(X))

    def importance(self) -> dict:
        # coefficients are on standardized inputs, so |coef| already equals
        # |raw coef| * train sd
        return _normalized(np.abs(self.coef), self.feature_names)

    def to_json(self) -> dict:
        return {"version": SERIAL_VERSION, "type": "logistic",
                "model_id": self.model_id, "feature_names": self.feature_names,
                "coef": self.coef.tolist(), "intercept": self.intercept,
                "mean": self.mean.tolist(), "scale": self.scale.tolist(),
                "lam": self.lam, "n_iter": self.n_iter,
                "converged": self.converged}

    @classmethod
    def from_json(cls, d: dict) -> "LogisticModel":
        return cls(model_id=d["model_id"], feature_names=d["feature_names"],
                   coef=np.asarray(d["coef"]), intercept=d["intercept"],
                   mean=np.asarray(d["mean"]), scale=np.asarray(d["scale"]),
                   lam=d["lam"], n_iter=d["n_iter"], converged=d["converged"])


def fit_logistic(X, y, lam: float = 0.0, max_iter: int = 2000,
                 tol: float = 1e-6, model_id: str = "logreg",
                 feature_names: list[str] | None = None) -> LogisticModel:
    """Gradient descent with backtracking line search on standardized inputs."""
    t0 = time.perf_counter()
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    names = feature_names or [f"x{j}" for j in range(X.shape[1])]
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < 1e-12] = 0.0
    safe = np.where(scale > 0, scale, 1.0)
    Z = (X - mean) / safe
    Z[:, scale == 0] = 0.0

    w = np.zeros(X.shape[1])
    ybar = min(max(y.mean(), 1e-9), 1 - 1e-9)
    b = float(np.log(ybar / (1 - ybar)))
    step = 1.0
    loss, gw, gb = logistic_loss_grad(Z, y, w, b, lam)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gnorm = max(np.abs(gw).max(initial=0.0), abs(gb))
        if gnorm < tol:
            converged = True
            break
        gsq = float(gw @ gw + gb * gb)
        step = min(step * 2.0, 1e4)
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new, gw_new, gb_new = logistic_loss_grad(Z, y, w_new, b_new, lam)
            if loss_new <= loss - 1e-4 * step * gsq or step < 1e-12:
                break
            step *= 0.5
        w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
    if not np.isfinite(loss):
        raise FitError("logistic loss diverged to a non-finite value")
    return LogisticModel(model_id=model_id, feature_names=names,
                         fit_time=time.perf_counter() - t0,
                         coef=w, intercept=b, mean=mean, scale=scale,
                         lam=lam, n_iter=it, converged=converged)


@dataclass
class TreeModel(TrainedModel):
    tree: _Tree = None
    imp_gain: np.ndarray = None

    def score(self, X) -> np.ndarray:
        return self.tree.predict(_as_matrix(X))

    def importance(self) -> dict:
        return _normalized(self.imp_gain.copy(), self.feature_names)

    def to_json(self) -> dict:
        return {"version": SERIAL_VERSION, "type": "tree",
                "model_id": self.model_id, "feature_names": self.feature_names,
                "tree": self.tree.to_json(), "imp_gain": self.imp_gain.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "TreeModel":
        return cls(model_id=d["model_id"], feature_names=d["feature_names"],
                   tree=_Tree.from_json(d["tree"]),
                   imp_gain=np.asarray(d["imp_gain"]))


def fit_tree(X, y, max_depth: int = 8, min_leaf: int = 5,
             min_gain: float = 0.0, model_id: str = "rpart",
             feature_names: list[str] | None = None) -> TreeModel:
    """Greedy CART with gini impurity; leaf score = positive proportion."""
    t0 = time.perf_counter()
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    names = feature_names or [f"x{j}" for j in range(X.shape[1])]
    ones = np.ones(len(y))
    idx = np.arange(len(y), dtype=np.int64)
    f, thr, l, r, v, n, gain = grow_tree(X, y, ones, idx, CRIT_GINI,
                                         max_depth, min_leaf, min_gain,
                                         X.shape[1], 0)
    return TreeModel(model_id=model_id, feature_names=names,
                     fit_time=time.perf_counter() - t0,
                     tree=_Tree(f, thr, l, r, v), imp_gain=gain)


@dataclass
class ForestModel(TrainedModel):
    trees: list = field(default_factory=list)
    imp_gain: np.ndarray = None

    def score(self, X) -> np.ndarray:
        X = _as_matrix(X)
        total = np.zeros(X.shape[0])
        for t in self.trees:
            total += t.predict(X)
        return total / len(self.trees)

    def importance(self) -> dict:
        return _normalized(self.imp_gain.copy(), self.feature_names)

    def to_json(self) -> dict:
        return {"version": SERIAL_VERSION, "type": "forest",
                "model_id": self.model_id, "feature_names": self.feature_names,
                "trees": [t.to_json() for t in self.trees],
                "imp_gain": self.imp_gain.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "ForestModel":
        return cls(model_id=d["model_id"], feature_names=d["feature_names"],
                   trees=[_Tree.from_json(t) for t in d["trees"]],
                   imp_gain=np.asarray(d["imp_gain"]))


def fit_forest(X, y, n_trees: int = 300, mtry: int | None = None,
               sample_fraction: float = 1.0, replace: bool = True,
               min_leaf: int = 1, max_depth: int = 64, seed: int = 0,
               model_id: str = "randomForest",
               feature_names: list[str] | None = None) -> ForestModel:
    """Bagged CART ensemble; score = mean of per-tree leaf proportions."""
    t0 = time.perf_counter()
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    names = feature_names or [f"x{j}" for j in range(p)]
    if mtry is None:
        mtry = max(1, int(np.sqrt(p)))
    mtry = min(mtry, p)
    ones = np.ones(n)
    trees = []
    imp = np.zeros(p)
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        if replace:
            idx = rng.integers(0, n, size=n).astype(np.int64)
        else:
            k = max(2 * min_leaf, int(np.floor(sample_fraction * n)))
            idx = rng.permutation(n)[:min(k, n)].astype(np.int64)
        kernel_seed = int(rng.integers(0, 2**63 - 1))
        f, thr, l, r, v, _, gain = grow_tree(X, y, ones, np.sort(idx),
                                             CRIT_GINI, max_depth, min_leaf,
                                             0.0, mtry, kernel_seed)
        trees.append(_Tree(f, thr, l, r, v))
        imp += gain
    return ForestModel(model_id=model_id, feature_names=names,
                       fit_time=time.perf_counter() - t0,
                       trees=trees, imp_gain=imp)


@dataclass
class GbtModel(TrainedModel):
    trees: list = field(default_factory=list)
    base_score: float = 0.0            # initial logit
    learning_rate: float = 0.1
    imp_gain: np.ndarray = None

    def decision(self, X) -> np.ndarray:
        X = _as_matrix(X)
        F = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            F += self.learning_rate * t.predict(X)
        return F

    def score(self, X) -> np.ndarray:
        return expit(self.decision(X))

    def importance(self) -> dict:
        return _normalized(self.imp_gain.copy(), self.feature_names)

    def to_json(self) -> dict:
        return {"version": SERIAL_VERSION, "type": "gbt",
                "model_id": self.model_id, "feature_names": self.feature_names,
                "trees": [t.to_json() for t in self.trees],
                "base_score": self.base_score,
                "learning_rate": self.learning_rate,
                "imp_gain": self.imp_gain.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "GbtModel":
        return cls(model_id=d["model_id"], feature_names=d["feature_names"],
                   trees=[_Tree.from_json(t) for t in d["trees"]],
                   base_score=d["base_score"], learning_rate=d["learning_rate"],
                   imp_gain=np.asarray(d["imp_gain"]))


def fit_gbt(X, y, n_rounds: int = 100, learning_rate: float = 0.1,
            max_depth: int = 3, subsample: float = 1.0, min_leaf: int = 5,
            seed: int = 0, model_id: str = "xgboost",
            feature_names: list[str] | None = None) -> GbtModel:
    """Stagewise logistic boosting: regression trees on residuals y - p,
    Newton leaf values sum(residual)/sum(p(1-p)) floored at 1e-12."""
    t0 = time.perf_counter()
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    names = feature_names or [f"x{j}" for j in range(p)]
    ybar = min(max(y.mean(), 1e-9), 1 - 1e-9)
    base = float(np.log(ybar / (1 - ybar)))
    F = np.full(n, base)
    trees = []
    imp = np.zeros(p)
    for t in range(n_rounds):
        prob = expit(F)
        grad = y - prob
        hess = prob * (1.0 - prob)
        if subsample < 1.0:
            rng = np.random.default_rng([seed, t])
            k = max(2 * min_leaf, int(np.floor(subsample * n)))
            idx = np.sort(rng.permutation(n)[:min(k, n)]).astype(np.int64)
        else:
            idx = np.arange(n, dtype=np.int64)
        f, thr, l, r, v, _, gain = grow_tree(X, grad, hess, idx,
                                             CRIT_VARIANCE, max_depth,
                                             min_leaf, 0.0, p, 0)
        tree = _Tree(f, thr, l, r, v)
        trees.append(tree)
        imp += gain
        F += learning_rate * tree.predict(X)
    return GbtModel(model_id=model_id, feature_names=names,
                    fit_time=time.perf_counter() - t0,
                    trees=trees, base_score=base,
                    learning_rate=learning_rate, imp_gain=imp)


def score(model: TrainedModel, X):
    """Probability scores plus elapsed scoring time in seconds."""
    t0 = time.perf_counter()
    X = _as_matrix(X)
    if X.shape[0] == 0:
        return np.zeros(0), time.perf_counter() - t0
    s = model.score(X)
    return s, time.perf_counter() - t0


def importance(model: TrainedModel) -> dict:
    return model.importance()


_TYPES = {"logistic": LogisticModel, "tree": TreeModel,
          "forest": ForestModel, "gbt": GbtModel}


def model_from_json(d: dict) -> TrainedModel:
    if d.get("version") != SERIAL_VERSION:
        raise FitError(f"unsupported model serialization version: {d.get('version')}")
    return _TYPES[d["type"]].from_json(d)
