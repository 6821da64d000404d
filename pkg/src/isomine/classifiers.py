"""From-scratch relevance classifiers: multinomial NB, L2 logistic
regression (damped Newton), and a bagged CART random forest.

NB consumes raw term counts; the other two consume TF-IDF rows. All three
follow the sklearn estimator protocol and are deterministic per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import sparse

from ._validation import check_both_classes, check_positive_int


class ModelKind(Enum):
    """Tie-break order for model selection is the declaration order."""

    NAIVE_BAYES = "NAIVE_BAYES"
    LOGISTIC_REGRESSION = "LOGISTIC_REGRESSION"
    RANDOM_FOREST = "RANDOM_FOREST"


_KIND_RANK = {kind: i for i, kind in enumerate(ModelKind)}


def kind_rank(kind: ModelKind) -> int:
    return _KIND_RANK[kind]


def _as_dense(X) -> np.ndarray:
    if sparse.issparse(X):
        return np.asarray(X.todense(), dtype=np.float64)
    return np.asarray(X, dtype=np.float64)


class MultinomialNaiveBayes:
    """Multinomial NB with additive (Lidstone) smoothing.

    P(t|c) = (count(t, c) + alpha) / (total(c) + alpha * |V|);
    prediction is the argmax class of log-prior + sum tf * log P(t|c),
    ties resolving to the negative class.
    """

    def __init__(self, alpha: float = 1.0):
        self.alpha = alpha

    def get_params(self, deep: bool = True) -> dict:
        return {"alpha": self.alpha}

    def set_params(self, **params) -> "MultinomialNaiveBayes":
        for key, value in params.items():
            if not hasattr(self, key):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X, y) -> "MultinomialNaiveBayes":
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        y = check_both_classes(y)
        X = _as_dense(X)
        n_terms = X.shape[1]
        self.classes_ = np.array([0, 1])
        priors = np.array([(y == c).mean() for c in (0, 1)])
        self.class_log_prior_ = np.log(priors)
        log_prob = np.empty((2, n_terms))
        for c in (0, 1):
            counts = X[y == c].sum(axis=0)
            total = counts.sum()
            log_prob[c] = np.log(counts + self.alpha) - math.log(total + self.alpha * n_terms)
        self.feature_log_prob_ = log_prob
        return self

    def joint_log_likelihood(self, X) -> np.ndarray:
        self._check_fitted()
        X = X if sparse.issparse(X) else np.asarray(X, dtype=np.float64)
        return np.asarray(X @ self.feature_log_prob_.T) + self.class_log_prior_

    def predict(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        # strict > keeps exact ties on the negative class
        return (jll[:, 1] > jll[:, 0]).astype(np.int64)

    def _check_fitted(self):
        if not hasattr(self, "feature_log_prob_"):
            raise RuntimeError("MultinomialNaiveBayes is not fitted")


def logistic_loss_gradient(w: np.ndarray, b: float, X, y: np.ndarray, C: float):
    """Mean log-loss + ridge penalty (intercept unpenalized) and its gradient.

    f(w, b) = (1/n) sum log(1 + exp(-y~ z)) + (1 / (2 C n)) ||w||^2
    with y~ in {-1, +1} and z = X w + b.
    """
    n = X.shape[0]
    z = np.asarray(X @ w).ravel() + b
    y_pm = 2.0 * y - 1.0
    margins = y_pm * z
    loss = float(np.mean(np.logaddexp(0.0, -margins)) + (w @ w) / (2.0 * C * n))
    p = 1.0 / (1.0 + np.exp(-z))
    resid = p - y
    grad_w = np.asarray(X.T @ resid).ravel() / n + w / (C * n)
    grad_b = float(resid.mean())
    return loss, grad_w, grad_b


class LogisticClassifier:
    """Binary logistic regression fit by damped Newton iterations.

    Converges when the full gradient (of the mean objective) drops below
    ``tol`` in L2 norm, or after ``max_iter`` iterations. The per-sample
    scaling makes the regularizer 1/(2 C n) ||w||^2.
    """

    def __init__(self, C: float = 1.0, tol: float = 1e-5, max_iter: int = 1000):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def get_params(self, deep: bool = True) -> dict:
        return {"C": self.C, "tol": self.tol, "max_iter": self.max_iter}

    def set_params(self, **params) -> "LogisticClassifier":
        for key, value in params.items():
            if not hasattr(self, key):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X, y) -> "LogisticClassifier":
        if self.C <= 0:
            raise ValueError("C must be positive")
        y = check_both_classes(y).astype(np.float64)
        n, d = X.shape
        Xd = _as_dense(X)
        w = np.zeros(d)
        b = 0.0
        lam = 1.0 / (self.C * n)
        loss_path = []
        loss, grad_w, grad_b = logistic_loss_gradient(w, b, Xd, y, self.C)
        loss_path.append(loss)
        for _ in range(self.max_iter):
            grad_norm = math.hypot(float(np.linalg.norm(grad_w)), grad_b)
            if grad_norm < self.tol:
                break
            z = Xd @ w + b
            p = 1.0 / (1.0 + np.exp(-z))
            s = np.maximum(p * (1.0 - p), 1e-12)
            Xa = np.hstack([Xd, np.ones((n, 1))])
            H = (Xa.T * s) @ Xa / n
            H[np.arange(d), np.arange(d)] += lam
            g = np.concatenate([grad_w, [grad_b]])
            try:
                step = np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(H, g, rcond=None)[0]
            # backtracking keeps the loss monotone non-increasing
            t = 1.0
            improved = False
            for _ in range(50):
                w_new = w - t * step[:d]
                b_new = b - t * step[d]
                new_loss, new_gw, new_gb = logistic_loss_gradient(w_new, b_new, Xd, y, self.C)
                if new_loss <= loss:
                    improved = True
                    break
                t *= 0.5
            if not improved:
                break  # at numerical optimum; no step decreases the loss
            w, b, loss, grad_w, grad_b = w_new, b_new, new_loss, new_gw, new_gb
            loss_path.append(loss)
        self.coef_ = w
        self.intercept_ = b
        self.loss_path_ = loss_path
        self.final_gradient_norm_ = math.hypot(float(np.linalg.norm(grad_w)), grad_b)
        self.n_iter_ = len(loss_path) - 1
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise RuntimeError("LogisticClassifier is not fitted")
        return np.asarray(X @ self.coef_).ravel() + self.intercept_

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0.0).astype(np.int64)

    def predict_proba(self, X) -> np.ndarray:
        z = self.decision_function(X)
        p = 1.0 / (1.0 + np.exp(-z))
        return np.column_stack([1.0 - p, p])


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    counts: tuple[int, int] | None = None  # leaf class counts (neg, pos)

    @property
    def is_leaf(self) -> bool:
        return self.counts is not None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"counts": list(self.counts)}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "counts" in d:
            return cls(counts=tuple(d["counts"]))
        return cls(
            feature=d["feature"],
            threshold=d["threshold"],
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


def _best_split(X: np.ndarray, y: np.ndarray, feature_ids: np.ndarray):
    """Minimum weighted-Gini split over the candidate features.

    Returns (feature, threshold) or None when no candidate separates the
    node. Thresholds are midpoints between consecutive distinct values.
    """
    m = len(y)
    total_pos = int(y.sum())
    best = None
    best_cost = np.inf
    for f in feature_ids:
        v = X[:, f]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        sy = y[order]
        distinct = sv[:-1] != sv[1:]
        if not distinct.any():
            continue
        pos_left = np.cumsum(sy)[:-1]
        n_left = np.arange(1, m)
        n_right = m - n_left
        pos_right = total_pos - pos_left
        gini_left = 1.0 - (pos_left / n_left) ** 2 - ((n_left - pos_left) / n_left) ** 2
        gini_right = 1.0 - (pos_right / n_right) ** 2 - ((n_right - pos_right) / n_right) ** 2
        cost = (n_left * gini_left + n_right * gini_right) / m
        cost = np.where(distinct, cost, np.inf)
        idx = int(np.argmin(cost))
        if cost[idx] < best_cost:
            best_cost = cost[idx]
            best = (int(f), float((sv[idx] + sv[idx + 1]) / 2.0))
    return best


def _grow_tree(X, y, rng, max_depth, min_samples_split, n_sub_features, depth=0) -> TreeNode:
    counts = (int((y == 0).sum()), int((y == 1).sum()))
    if (
        counts[0] == 0
        or counts[1] == 0
        or len(y) < min_samples_split
        or (max_depth is not None and depth >= max_depth)
    ):
        return TreeNode(counts=counts)
    feature_ids = rng.choice(X.shape[1], size=n_sub_features, replace=False)
    split = _best_split(X, y, feature_ids)
    if split is None:
        return TreeNode(counts=counts)
    feature, threshold = split
    mask = X[:, feature] <= threshold
    left = _grow_tree(X[mask], y[mask], rng, max_depth, min_samples_split,
                      n_sub_features, depth + 1)
    right = _grow_tree(X[~mask], y[~mask], rng, max_depth, min_samples_split,
                       n_sub_features, depth + 1)
    return TreeNode(feature=feature, threshold=threshold, left=left, right=right)


def _tree_predict(node: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.int64)
    for i, row in enumerate(X):
        cur = node
        while not cur.is_leaf:
            cur = cur.left if row[cur.feature] <= cur.threshold else cur.right
        neg, pos = cur.counts
        # leaf ties predict the negative class
        out[i] = 1 if pos > neg else 0
    return out


class RandomForest:
    """Bagged CART trees, Gini criterion, ceil(sqrt(d)) features per node.

    Each tree grows on a bootstrap resample with its own derived seed;
    prediction is a majority vote with ties going to the negative class.
    """

    def __init__(self, n_estimators: int = 100, max_depth: int | None = None,
                 min_samples_split: int = 2, seed: int = 0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.seed = seed

    def get_params(self, deep: bool = True) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
        }

    def set_params(self, **params) -> "RandomForest":
        for key, value in params.items():
            if not hasattr(self, key):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X, y) -> "RandomForest":
        check_positive_int(self.n_estimators, "n_estimators")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        y = check_both_classes(y)
        X = _as_dense(X)
        n, d = X.shape
        n_sub = max(1, math.ceil(math.sqrt(d)))
        self.trees_ = []
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_estimators)
        for tree_seed in seeds:
            rng = np.random.default_rng(tree_seed)
            idx = rng.integers(0, n, size=n)
            tree = _grow_tree(X[idx], y[idx], rng, self.max_depth,
                              self.min_samples_split, n_sub)
            self.trees_.append(tree)
        self.classes_ = np.array([0, 1])
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "trees_"):
            raise RuntimeError("RandomForest is not fitted")
        X = _as_dense(X)
        votes = np.zeros(X.shape[0], dtype=np.int64)
        for tree in self.trees_:
            votes += _tree_predict(tree, X)
        return (votes * 2 > len(self.trees_)).astype(np.int64)
