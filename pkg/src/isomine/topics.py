"""Theme discovery over short circumstance summaries.

Pipeline shape: tokenize -> TF-IDF -> truncated SVD -> k-means (with a
small-cluster outlier merge) -> class-based TF-IDF term extraction ->
UMass coherence, plus a grid search that returns the highest-coherence
configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cluster import OUTLIER_LABEL, KMeans
from .decomposition import TruncatedSVD
from .text import TfidfFeaturizer, TokenizedDoc
from ._validation import check_positive_int


@dataclass(frozen=True)
class TopicHyperParams:
    n_components: int
    n_clusters: int
    min_cluster_size: int
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.n_components, "n_components")
        if self.n_clusters < 2:
            raise ValueError("n_clusters must be >= 2")
        check_positive_int(self.min_cluster_size, "min_cluster_size")


@dataclass
class TopicSummary:
    label: int
    size: int
    top_terms: list[tuple[str, float]]


@dataclass
class TopicModelResult:
    assignments: dict[str, int]
    topics: list[TopicSummary]
    coherence: float
    hyperparams: TopicHyperParams
    skipped_pairs: int = 0

    @property
    def n_topics(self) -> int:
        return len(self.topics)


def ctfidf_top_terms(
    docs: Sequence[TokenizedDoc],
    assignments: Sequence[int],
    top_n: int = 50,
) -> dict[int, list[tuple[str, float]]]:
    """Rank terms per topic by class-based TF-IDF.

    weight(t, c) = tf(t, c) * ln(1 + A / f(t)) where tf counts t inside the
    concatenated topic-c documents, f(t) counts t across all documents, and
    A is the average per-topic total token count. Ties break
    lexicographically.
    """
    if len(docs) != len(assignments):
        raise ValueError("docs and assignments length mismatch")
    labels = sorted(set(int(a) for a in assignments))
    if all(lbl == OUTLIER_LABEL for lbl in labels):
        raise ValueError("no non-outlier topic to extract terms from")

    per_topic_tf: dict[int, dict[str, int]] = {lbl: {} for lbl in labels}
    global_tf: dict[str, int] = {}
    topic_totals: dict[int, int] = {lbl: 0 for lbl in labels}
    for doc, lbl in zip(docs, assignments):
        lbl = int(lbl)
        tf = per_topic_tf[lbl]
        for token in doc.tokens:
            tf[token] = tf.get(token, 0) + 1
            global_tf[token] = global_tf.get(token, 0) + 1
        topic_totals[lbl] += len(doc.tokens)

    avg_topic_tokens = sum(topic_totals.values()) / len(labels)
    out: dict[int, list[tuple[str, float]]] = {}
    for lbl in labels:
        scored = [
            (term, count * math.log(1.0 + avg_topic_tokens / global_tf[term]))
            for term, count in per_topic_tf[lbl].items()
        ]
        scored.sort(key=lambda kv: (-kv[1], kv[0]))
        out[lbl] = scored[:top_n]
    return out


@dataclass
class CoherenceResult:
    score: float
    per_topic: dict[int, float]
    skipped_pairs: int


def umass_coherence(
    top_terms: Mapping[int, Sequence[str]],
    docs: Sequence[TokenizedDoc],
    top_k: int = 10,
) -> CoherenceResult:
    """UMass coherence of each topic's top terms against the doc corpus.

    For rank-ordered terms w_1..w_m (m <= top_k), each pair with i > j
    scores ln((D(w_i, w_j) + 1) / D(w_j)) where D counts documents
    containing the term(s). Pairs with D(w_j) = 0 are skipped and counted.
    """
    doc_sets = [frozenset(d.tokens) for d in docs]
    needed = {t for terms in top_terms.values() for t in terms[:top_k]}
    postings: dict[str, set[int]] = {t: set() for t in needed}
    for idx, tokens in enumerate(doc_sets):
        for t in needed & tokens:
            postings[t].add(idx)

    per_topic: dict[int, float] = {}
    skipped = 0
    for lbl, terms in top_terms.items():
        terms = list(terms[:top_k])
        if len(terms) < 2:
            raise ValueError(f"topic {lbl} has fewer than 2 terms")
        scores = []
        for i in range(1, len(terms)):
            for j in range(i):
                d_j = len(postings[terms[j]])
                if d_j == 0:
                    skipped += 1
                    continue
                d_ij = len(postings[terms[i]] & postings[terms[j]])
                scores.append(math.log((d_ij + 1.0) / d_j))
        if not scores:
            raise ValueError(f"topic {lbl}: all coherence pairs skipped")
        per_topic[lbl] = float(np.mean(scores))
    score = float(np.mean(list(per_topic.values())))
    return CoherenceResult(score=score, per_topic=per_topic, skipped_pairs=skipped)


def _canonical_labels(raw: np.ndarray) -> np.ndarray:
    """Relabel clusters 0..K-1 by decreasing size (outlier stays -1)."""
    values, counts = np.unique(raw[raw != OUTLIER_LABEL], return_counts=True)
    order = sorted(zip(values, counts), key=lambda vc: (-vc[1], vc[0]))
    remap = {int(v): i for i, (v, _) in enumerate(order)}
    remap[OUTLIER_LABEL] = OUTLIER_LABEL
    return np.array([remap[int(v)] for v in raw], dtype=np.int64)


class ThemeDiscovery:
    """End-to-end theme model over tokenized summaries (estimator-style)."""

    def __init__(self, n_components: int = 5, n_clusters: int = 12,
                 min_cluster_size: int = 5, seed: int = 0, min_df: int = 2,
                 top_n_terms: int = 50, coherence_top_k: int = 10):
        self.n_components = n_components
        self.n_clusters = n_clusters
        self.min_cluster_size = min_cluster_size
        self.seed = seed
        self.min_df = min_df
        self.top_n_terms = top_n_terms
        self.coherence_top_k = coherence_top_k

    def get_params(self, deep: bool = True) -> dict:
        return {
            "n_components": self.n_components,
            "n_clusters": self.n_clusters,
            "min_cluster_size": self.min_cluster_size,
            "seed": self.seed,
            "min_df": self.min_df,
            "top_n_terms": self.top_n_terms,
            "coherence_top_k": self.coherence_top_k,
        }

    def set_params(self, **params) -> "ThemeDiscovery":
        for key, value in params.items():
            if not hasattr(self, key):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, docs: Sequence[TokenizedDoc], _tfidf_matrix=None) -> "ThemeDiscovery":
        hp = TopicHyperParams(
            n_components=self.n_components,
            n_clusters=self.n_clusters,
            min_cluster_size=self.min_cluster_size,
            seed=self.seed,
        )
        featurizer = TfidfFeaturizer(min_df=self.min_df)
        X = featurizer.fit_transform(docs) if _tfidf_matrix is None else _tfidf_matrix
        embedding = TruncatedSVD(n_components=hp.n_components, seed=hp.seed).fit_transform(X)
        km = KMeans(
            n_clusters=hp.n_clusters,
            seed=hp.seed,
            min_cluster_size=hp.min_cluster_size,
        ).fit(embedding)
        labels = _canonical_labels(km.labels_)

        terms = ctfidf_top_terms(docs, labels, top_n=self.top_n_terms)
        scored = {
            lbl: [t for t, _ in pairs]
            for lbl, pairs in terms.items()
            if lbl != OUTLIER_LABEL
        }
        coh = umass_coherence(scored, docs, top_k=self.coherence_top_k)

        sizes = {lbl: int(np.sum(labels == lbl)) for lbl in sorted(set(labels.tolist()))}
        topics = [
            TopicSummary(label=lbl, size=sizes[lbl], top_terms=terms[lbl])
            for lbl in sorted(sizes)
            if lbl != OUTLIER_LABEL
        ]
        if OUTLIER_LABEL in sizes:
            topics.append(TopicSummary(
                label=OUTLIER_LABEL,
                size=sizes[OUTLIER_LABEL],
                top_terms=terms[OUTLIER_LABEL],
            ))
        self.result_ = TopicModelResult(
            assignments={doc.doc_id: int(lbl) for doc, lbl in zip(docs, labels)},
            topics=topics,
            coherence=coh.score,
            hyperparams=hp,
            skipped_pairs=coh.skipped_pairs,
        )
        self.labels_ = labels
        self.coherence_ = coh.score
        return self


@dataclass
class LeaderboardRow:
    hyperparams: TopicHyperParams
    coherence: float
    n_topics: int


def grid_search_topics(
    docs: Sequence[TokenizedDoc],
    grid: Sequence[TopicHyperParams],
    min_df: int = 2,
) -> tuple[TopicModelResult, list[LeaderboardRow]]:
    """Evaluate every hyperparameter combination, return the argmax-coherence
    model plus the full leaderboard (in grid order).

    Ties break toward fewer topics, then earlier grid position.
    """
    if not grid:
        raise ValueError("empty hyperparameter grid")
    featurizer = TfidfFeaturizer(min_df=min_df)
    X = featurizer.fit_transform(docs)

    leaderboard: list[LeaderboardRow] = []
    results: list[TopicModelResult] = []
    for hp in grid:
        try:
            model = ThemeDiscovery(
                n_components=hp.n_components,
                n_clusters=hp.n_clusters,
                min_cluster_size=hp.min_cluster_size,
                seed=hp.seed,
                min_df=min_df,
            )
            model.fit(docs, _tfidf_matrix=X)
        except Exception as exc:
            raise ValueError(f"grid combination {hp} failed: {exc}") from exc
        results.append(model.result_)
        leaderboard.append(LeaderboardRow(
            hyperparams=hp,
            coherence=model.result_.coherence,
            n_topics=model.result_.n_topics,
        ))

    best_idx = min(
        range(len(results)),
        key=lambda i: (-results[i].coherence, results[i].n_topics, i),
    )
    return results[best_idx], leaderboard


def default_grid(seed: int = 0) -> list[TopicHyperParams]:
    """54-combination default grid (3 x 6 x 3)."""
    grid = []
    for n_components in (5, 10, 15):
        for n_clusters in (8, 12, 16, 20, 24, 28):
            for min_cluster_size in (3, 5, 10):
                grid.append(TopicHyperParams(
                    n_components=n_components,
                    n_clusters=n_clusters,
                    min_cluster_size=min_cluster_size,
                    seed=seed,
                ))
    return grid
