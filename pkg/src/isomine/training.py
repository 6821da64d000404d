"""Per-topic classifier training over annotated narrative samples.

Ties the pieces together: consensus labels -> stratified split ->
train-split TF-IDF -> grid-searched NB / LogReg / RF -> test metrics with
bootstrap CIs -> lexicographic winner -> two-stage prediction over the
regex-matched decedents only.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .classifiers import (LogisticClassifier, ModelKind, MultinomialNaiveBayes,
                          RandomForest, TreeNode)
from .corpus import Corpus
from .evaluation import (BootstrapUndefinedError, Candidate, Metrics,
                         bootstrap_ci, evaluate, select_best, split_stratified)
from .lexicon import MatchSet
from .taxonomy import TopicId
from .text import TfidfFeaturizer, TokenizedDoc, tokenize

LABELS_CSV_HEADER = ["decedent_id", "topic", "annotator_id", "relevant", "timestamp"]
ADJUDICATOR_ID = "ADJUDICATED"


@dataclass(frozen=True)
class AnnotationLabel:
    decedent_id: str
    topic: TopicId
    annotator_id: str
    relevant: bool
    timestamp: str


def read_labels_csv(path: str | Path) -> list[AnnotationLabel]:
    labels = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(LABELS_CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"labels CSV missing columns {sorted(missing)}")
        for row in reader:
            if row["relevant"] not in ("0", "1"):
                raise ValueError(
                    f"relevant must be 0 or 1, got {row['relevant']!r} "
                    f"for {row['decedent_id']}"
                )
            labels.append(AnnotationLabel(
                decedent_id=row["decedent_id"],
                topic=TopicId.from_name(row["topic"]),
                annotator_id=row["annotator_id"],
                relevant=row["relevant"] == "1",
                timestamp=row["timestamp"],
            ))
    return labels


def append_labels_csv(path: str | Path, labels: Sequence[AnnotationLabel]) -> None:
    path = Path(path)
    new_file = not path.exists()
    with path.open("a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(LABELS_CSV_HEADER)
        for lab in labels:
            writer.writerow([lab.decedent_id, lab.topic.name, lab.annotator_id,
                             "1" if lab.relevant else "0", lab.timestamp])


class AdjudicationRequired(ValueError):
    pass


def consensus_labels(labels: Sequence[AnnotationLabel]) -> dict[tuple[str, TopicId], bool]:
    """Adjudicated training label per (decedent, topic).

    Single-coded items use their sole label; dual-coded agreement uses the
    shared value; disagreement requires an ADJUDICATED row (latest wins).
    """
    grouped: dict[tuple[str, TopicId], list[AnnotationLabel]] = {}
    for lab in labels:
        grouped.setdefault((lab.decedent_id, lab.topic), []).append(lab)
    out: dict[tuple[str, TopicId], bool] = {}
    for key, rows in grouped.items():
        adjudicated = [r for r in rows if r.annotator_id == ADJUDICATOR_ID]
        if adjudicated:
            out[key] = adjudicated[-1].relevant
            continue
        # replay order: the last row per annotator is that annotator's label
        per_annotator: dict[str, bool] = {}
        for r in rows:
            per_annotator[r.annotator_id] = r.relevant
        votes = set(per_annotator.values())
        if len(votes) == 1:
            out[key] = votes.pop()
        else:
            raise AdjudicationRequired(
                f"{key[0]}/{key[1].name}: annotators disagree and no "
                f"{ADJUDICATOR_ID} row is present"
            )
    return out


@dataclass
class HyperGrid:
    logreg_C: tuple[float, ...] = (0.01, 0.1, 1.0)
    rf_n_estimators: tuple[int, ...] = (100, 200, 300)
    rf_max_depth: tuple[int | None, ...] = (None, 10, 20)
    rf_min_samples_split: tuple[int, ...] = (2, 5, 10)
    nb_alpha: tuple[float, ...] = (0.1, 0.5, 1.0)

    def __post_init__(self):
        if any(c <= 0 for c in self.logreg_C):
            raise ValueError("logreg_C values must be positive")
        if any(n <= 0 for n in self.rf_n_estimators):
            raise ValueError("rf_n_estimators values must be positive")
        if any(d is not None and d <= 0 for d in self.rf_max_depth):
            raise ValueError("rf_max_depth values must be positive or None")
        if any(s < 2 for s in self.rf_min_samples_split):
            raise ValueError("rf_min_samples_split values must be >= 2")
        if any(a <= 0 for a in self.nb_alpha):
            raise ValueError("nb_alpha values must be positive")

    def to_dict(self) -> dict:
        return {
            "logreg_C": list(self.logreg_C),
            "rf_n_estimators": list(self.rf_n_estimators),
            "rf_max_depth": list(self.rf_max_depth),
            "rf_min_samples_split": list(self.rf_min_samples_split),
            "nb_alpha": list(self.nb_alpha),
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "HyperGrid":
        kwargs = {}
        for name in ("logreg_C", "rf_n_estimators", "rf_max_depth",
                     "rf_min_samples_split", "nb_alpha"):
            if name in obj:
                kwargs[name] = tuple(obj[name])
        return cls(**kwargs)


@dataclass
class LabeledText:
    decedent_id: str
    text: str  # full-length LE + CME narrative text
    label: bool


def labeled_texts(corpus: Corpus, topic: TopicId,
                  consensus: Mapping[tuple[str, TopicId], bool]) -> list[LabeledText]:
    out = []
    for (decedent_id, t), label in consensus.items():
        if t is not topic:
            continue
        rec = corpus.get(decedent_id)
        out.append(LabeledText(decedent_id=decedent_id,
                               text=rec.narratives.full_text(), label=label))
    out.sort(key=lambda e: e.decedent_id)
    return out


@dataclass
class TrainedTopicModel:
    topic: TopicId
    kind: ModelKind
    hyperparams: dict
    seed: int
    featurizer: TfidfFeaturizer
    estimator: object

    def predict_texts(self, texts: Sequence[str]) -> np.ndarray:
        docs = [TokenizedDoc(doc_id=str(i), tokens=tokenize(t))
                for i, t in enumerate(texts)]
        if self.kind is ModelKind.NAIVE_BAYES:
            X = self.featurizer.counts(docs)
        else:
            X = self.featurizer.transform(docs)
        return self.estimator.predict(X)

    def to_dict(self) -> dict:
        vocab = [None] * len(self.featurizer.vocabulary_)
        for term, col in self.featurizer.vocabulary_.items():
            vocab[col] = term
        payload: dict = {
            "format_version": 1,
            "topic": self.topic.name,
            "kind": self.kind.value,
            "hyperparams": self.hyperparams,
            "seed": self.seed,
            "tfidf": {
                "min_df": self.featurizer.min_df,
                "n_docs": self.featurizer.n_docs_,
                "vocabulary": vocab,
                "document_frequency": self.featurizer.document_frequency_.tolist(),
            },
        }
        est = self.estimator
        if self.kind is ModelKind.NAIVE_BAYES:
            payload["parameters"] = {
                "class_log_prior": est.class_log_prior_.tolist(),
                "feature_log_prob": est.feature_log_prob_.tolist(),
            }
        elif self.kind is ModelKind.LOGISTIC_REGRESSION:
            payload["parameters"] = {
                "coef": est.coef_.tolist(),
                "intercept": est.intercept_,
            }
        else:
            payload["parameters"] = {"trees": [t.to_dict() for t in est.trees_]}
        return payload

    @classmethod
    def from_dict(cls, obj: Mapping) -> "TrainedTopicModel":
        kind = ModelKind(obj["kind"])
        tf = obj["tfidf"]
        featurizer = TfidfFeaturizer(min_df=tf["min_df"])
        featurizer.n_docs_ = tf["n_docs"]
        featurizer.vocabulary_ = {t: i for i, t in enumerate(tf["vocabulary"])}
        featurizer.document_frequency_ = np.asarray(tf["document_frequency"],
                                                    dtype=np.int64)
        featurizer.idf_ = (np.log((1.0 + featurizer.n_docs_)
                                  / (1.0 + featurizer.document_frequency_)) + 1.0)
        params = obj["parameters"]
        hp = dict(obj["hyperparams"])
        if kind is ModelKind.NAIVE_BAYES:
            est = MultinomialNaiveBayes(alpha=hp["alpha"])
            est.class_log_prior_ = np.asarray(params["class_log_prior"])
            est.feature_log_prob_ = np.asarray(params["feature_log_prob"])
            est.classes_ = np.array([0, 1])
        elif kind is ModelKind.LOGISTIC_REGRESSION:
            est = LogisticClassifier(C=hp["C"])
            est.coef_ = np.asarray(params["coef"])
            est.intercept_ = float(params["intercept"])
            est.classes_ = np.array([0, 1])
        else:
            est = RandomForest(
                n_estimators=hp["n_estimators"], max_depth=hp["max_depth"],
                min_samples_split=hp["min_samples_split"], seed=obj["seed"],
            )
            est.trees_ = [TreeNode.from_dict(t) for t in params["trees"]]
            est.classes_ = np.array([0, 1])
        return cls(topic=TopicId.from_name(obj["topic"]), kind=kind,
                   hyperparams=hp, seed=obj["seed"], featurizer=featurizer,
                   estimator=est)


@dataclass
class KindResult:
    kind: ModelKind
    hyperparams: dict
    grid_index: int
    test_metrics: Metrics      # held-out split; drives model selection
    report_metrics: Metrics    # bootstrap target set (default: all examples)
    model: TrainedTopicModel


@dataclass
class TopicTrainingResult:
    topic: TopicId
    n_examples: int
    n_train: int
    n_test: int
    per_kind: list[KindResult]
    winner: KindResult


def train_topic(
    topic: TopicId,
    examples: Sequence[LabeledText],
    grid: HyperGrid,
    seed: int = 0,
    train_fraction: float = 0.8,
    bootstrap_iterations: int = 1000,
    bootstrap_fraction: float = 0.8,
    bootstrap_test_only: bool = False,
    bootstrap_seed: int | None = None,
    min_df: int = 1,
) -> TopicTrainingResult:
    """Grid-search the three model kinds on one topic's annotated sample.

    Within each kind the winner takes the best (macro_f1, recall_pos,
    accuracy) on the held-out split; bootstrap CIs are then computed over
    the full annotated sample's predictions (or test-only when asked).
    """
    if len(examples) < 5:
        raise ValueError(f"{topic.name}: need at least 5 labeled examples")
    labels = np.array([int(e.label) for e in examples])
    if labels.min() == labels.max():
        raise ValueError(f"{topic.name}: single-class annotation sample")
    train_idx, test_idx = split_stratified(labels, train_fraction, seed=seed)

    docs = [TokenizedDoc(doc_id=e.decedent_id, tokens=tokenize(e.text))
            for e in examples]
    featurizer = TfidfFeaturizer(min_df=min_df).fit([docs[i] for i in train_idx])
    tfidf_all = featurizer.transform(docs)
    counts_all = featurizer.counts(docs)
    y_train, y_test = labels[train_idx], labels[test_idx]

    def fit_kind(kind: ModelKind):
        if kind is ModelKind.NAIVE_BAYES:
            grid_points = [{"alpha": a} for a in grid.nb_alpha]
            X = counts_all
        elif kind is ModelKind.LOGISTIC_REGRESSION:
            grid_points = [{"C": c} for c in grid.logreg_C]
            X = tfidf_all
        else:
            grid_points = [
                {"n_estimators": n, "max_depth": d, "min_samples_split": s}
                for n, d, s in product(grid.rf_n_estimators, grid.rf_max_depth,
                                       grid.rf_min_samples_split)
            ]
            X = tfidf_all
        X_train, X_test = X[train_idx], X[test_idx]
        candidates = []
        estimators = []
        for gi, hp in enumerate(grid_points):
            if kind is ModelKind.NAIVE_BAYES:
                est = MultinomialNaiveBayes(alpha=hp["alpha"])
            elif kind is ModelKind.LOGISTIC_REGRESSION:
                est = LogisticClassifier(C=hp["C"])
            else:
                est = RandomForest(seed=seed, **hp)
            est.fit(X_train, y_train)
            metrics = evaluate(est.predict(X_test), y_test)
            candidates.append(Candidate(kind=kind, grid_index=gi,
                                        hyperparams=hp, metrics=metrics))
            estimators.append(est)
        best = select_best(candidates)
        est = estimators[best.grid_index]
        if bootstrap_test_only:
            preds, ys = est.predict(X_test), y_test
        else:
            preds, ys = est.predict(X), labels
        try:
            report = bootstrap_ci(
                preds, ys, iterations=bootstrap_iterations,
                fraction=bootstrap_fraction,
                seed=seed if bootstrap_seed is None else bootstrap_seed,
                strict=False)
        except ValueError:
            report = evaluate(preds, ys)
        model = TrainedTopicModel(topic=topic, kind=kind,
                                  hyperparams=best.hyperparams, seed=seed,
                                  featurizer=featurizer, estimator=est)
        return KindResult(kind=kind, hyperparams=best.hyperparams,
                          grid_index=best.grid_index, test_metrics=best.metrics,
                          report_metrics=report, model=model)

    per_kind = [fit_kind(kind) for kind in ModelKind]
    winner = select_best([
        Candidate(kind=kr.kind, grid_index=kr.grid_index,
                  hyperparams=kr.hyperparams, metrics=kr.test_metrics)
        for kr in per_kind
    ])
    winner_result = next(kr for kr in per_kind if kr.kind is winner.kind)
    return TopicTrainingResult(
        topic=topic, n_examples=len(examples),
        n_train=len(train_idx), n_test=len(test_idx),
        per_kind=per_kind, winner=winner_result,
    )


@dataclass
class PredictionResult:
    topic: TopicId
    matched_ids: list[str]
    positive_ids: list[str]

    @property
    def n_matched(self) -> int:
        return len(self.matched_ids)

    @property
    def n_positive(self) -> int:
        return len(self.positive_ids)

    @property
    def fraction_positive(self) -> float:
        return self.n_positive / self.n_matched if self.n_matched else 0.0


def predict_matched(model: TrainedTopicModel, matchset: MatchSet,
                    corpus: Corpus, topic: TopicId) -> PredictionResult:
    """Two-stage refinement: the classifier only sees decedents the lexicon
    flagged for this topic."""
    matched = matchset.flagged_ids(topic)
    if not matched:
        return PredictionResult(topic=topic, matched_ids=[], positive_ids=[])
    texts = [corpus.get(did).narratives.full_text() for did in matched]
    preds = model.predict_texts(texts)
    positives = [did for did, p in zip(matched, preds) if p == 1]
    return PredictionResult(topic=topic, matched_ids=matched, positive_ids=positives)


def save_models_json(results: Mapping[TopicId, TopicTrainingResult],
                     path: str | Path) -> None:
    payload = {
        topic.name: result.winner.model.to_dict()
        for topic, result in results.items()
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True),
                          encoding="utf-8")


def load_models_json(path: str | Path) -> dict[TopicId, TrainedTopicModel]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return {TopicId.from_name(k): TrainedTopicModel.from_dict(v)
            for k, v in payload.items()}
