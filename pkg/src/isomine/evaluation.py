"""Metric suite, stratified splitting, percentile-bootstrap CIs, and model
selection for the per-topic relevance classifiers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classifiers import ModelKind, kind_rank
from ._validation import check_binary_labels

METRIC_NAMES = (
    "accuracy",
    "precision_pos",
    "recall_pos",
    "f1_pos",
    "macro_precision",
    "macro_recall",
    "macro_f1",
)


@dataclass
class Metrics:
    accuracy: float
    precision_pos: float
    recall_pos: float
    f1_pos: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    # metric -> (lo, hi); populated by bootstrap_ci
    ci: dict[str, tuple[float, float]] = field(default_factory=dict)
    # metric -> number of bootstrap iterations excluded as undefined
    excluded: dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def confusion_counts(predictions, labels) -> tuple[int, int, int, int]:
    """(TP, FP, FN, TN) with the positive class encoded as 1."""
    p = check_binary_labels(predictions, "predictions")
    y = check_binary_labels(labels, "labels")
    if len(p) != len(y):
        raise ValueError("predictions and labels length mismatch")
    tp = int(np.sum((p == 1) & (y == 1)))
    fp = int(np.sum((p == 1) & (y == 0)))
    fn = int(np.sum((p == 0) & (y == 1)))
    tn = int(np.sum((p == 0) & (y == 0)))
    return tp, fp, fn, tn


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float, bool, bool]:
    """precision, recall, f1 plus definedness of the two denominators.

    Zero denominators follow the reporting convention value = 0."""
    p_defined = (tp + fp) > 0
    r_defined = (tp + fn) > 0
    precision = tp / (tp + fp) if p_defined else 0.0
    recall = tp / (tp + fn) if r_defined else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1, p_defined, r_defined


def compute_metrics(predictions, labels) -> tuple[Metrics, dict[str, bool]]:
    """Metrics plus a per-metric definedness map (bootstrap exclusions)."""
    tp, fp, fn, tn = confusion_counts(predictions, labels)
    n = tp + fp + fn + tn
    prec_p, rec_p, f1_p, pder_p, rder_p = _prf(tp, fp, fn)
    prec_n, rec_n, f1_n, pder_n, rder_n = _prf(tn, fn, fp)
    metrics = Metrics(
        accuracy=(tp + tn) / n,
        precision_pos=prec_p,
        recall_pos=rec_p,
        f1_pos=f1_p,
        macro_precision=(prec_p + prec_n) / 2.0,
        macro_recall=(rec_p + rec_n) / 2.0,
        macro_f1=(f1_p + f1_n) / 2.0,
    )
    defined = {
        "accuracy": n > 0,
        "precision_pos": pder_p,
        "recall_pos": rder_p,
        "f1_pos": pder_p or rder_p,
        "macro_precision": pder_p and pder_n,
        "macro_recall": rder_p and rder_n,
        "macro_f1": (pder_p or rder_p) and (pder_n or rder_n),
    }
    return metrics, defined


def evaluate(predictions, labels) -> Metrics:
    """Point metrics with the zero-denominator-reports-zero convention."""
    if len(labels) == 0:
        raise ValueError("empty test set")
    return compute_metrics(predictions, labels)[0]


def split_stratified(labels, train_fraction: float = 0.8, seed: int = 0):
    """Deterministic stratified train/test index split.

    Per-class train counts allocate round(train_fraction * n) slots by
    largest fractional remainder, so class proportions are preserved within
    one example. Single-class inputs fall back to a plain shuffled split.
    """
    y = check_binary_labels(labels, "labels")
    n = len(y)
    if n < 5:
        raise ValueError("need at least 5 examples to split")
    target_train = int(round(train_fraction * n))
    if target_train < 1 or n - target_train < 1:
        raise ValueError(
            f"train_fraction={train_fraction} leaves fewer than 1 example on a side"
        )
    rng = np.random.default_rng(seed)
    classes = sorted(set(y.tolist()))
    ideal = {c: train_fraction * int(np.sum(y == c)) for c in classes}
    base = {c: int(math.floor(ideal[c])) for c in classes}
    leftover = target_train - sum(base.values())
    by_remainder = sorted(classes, key=lambda c: (-(ideal[c] - base[c]), c))
    for c in by_remainder[:leftover]:
        base[c] += 1
    train_idx: list[int] = []
    test_idx: list[int] = []
    for c in classes:
        members = np.flatnonzero(y == c)
        perm = members[rng.permutation(len(members))]
        take = base[c]
        train_idx.extend(perm[:take].tolist())
        test_idx.extend(perm[take:].tolist())
    return np.array(sorted(train_idx)), np.array(sorted(test_idx))


class BootstrapUndefinedError(ValueError):
    """Raised when every bootstrap iteration left a metric undefined."""


def bootstrap_ci(predictions, labels, iterations: int = 1000,
                 fraction: float = 0.8, seed: int = 0,
                 strict: bool = True) -> Metrics:
    """Percentile-bootstrap CIs from without-replacement 80% slices.

    Iteration i draws ceil(fraction * n) indices with the derived seed
    (seed + i), recomputes every metric, and the CI is the 2.5th/97.5th
    percentile (linear interpolation) of the defined values. Iterations
    where a metric is undefined are dropped for that metric and counted in
    ``excluded``. A metric undefined in every iteration raises when
    ``strict``; otherwise its CI is simply omitted.
    """
    p = check_binary_labels(predictions, "predictions")
    y = check_binary_labels(labels, "labels")
    n = len(y)
    if n < 5:
        raise ValueError("need at least 5 prediction/label pairs")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    # canonicalize pair order: metrics only see the pair multiset, so sorting
    # makes the realized CIs exactly invariant to joint permutation
    order = np.lexsort((p, y))
    p, y = p[order], y[order]
    take = math.ceil(fraction * n)
    values: dict[str, list[float]] = {name: [] for name in METRIC_NAMES}
    for i in range(iterations):
        rng = np.random.default_rng(seed + i)
        idx = rng.permutation(n)[:take]
        metrics, defined = compute_metrics(p[idx], y[idx])
        for name in METRIC_NAMES:
            if defined[name]:
                values[name].append(getattr(metrics, name))
    result = evaluate(p, y)
    dead = []
    for name in METRIC_NAMES:
        kept = values[name]
        result.excluded[name] = iterations - len(kept)
        if not kept:
            dead.append(name)
            continue
        lo, hi = np.percentile(kept, [2.5, 97.5], method="linear")
        result.ci[name] = (float(lo), float(hi))
    if dead and strict:
        raise BootstrapUndefinedError(
            f"metric(s) {', '.join(dead)} undefined in all {iterations} "
            "bootstrap iterations"
        )
    return result


@dataclass
class Candidate:
    kind: ModelKind
    grid_index: int
    hyperparams: dict
    metrics: Metrics


def select_best(candidates: list[Candidate]) -> Candidate:
    """Lexicographic (macro_f1, recall_pos, accuracy); ties go to the
    earlier model kind (NB < LogReg < RF) then earlier grid position."""
    if not candidates:
        raise ValueError("no candidates to select from")
    return min(
        candidates,
        key=lambda c: (
            -c.metrics.macro_f1,
            -c.metrics.recall_pos,
            -c.metrics.accuracy,
            kind_rank(c.kind),
            c.grid_index,
        ),
    )
