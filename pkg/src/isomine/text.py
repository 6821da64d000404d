"""Tokenization and TF-IDF featurization for narrative and summary text.

Documents are reduced to lowercase unigrams plus space-joined bigrams, with
stop words removed before bigram formation. The featurizer follows the
sklearn estimator protocol (fit/transform, get_params) so it can slot into
ordinary pipelines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence
import math
import re

import numpy as np
from scipy import sparse

from ._stopwords import STOP_WORDS
from ._validation import check_positive_int

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass
class TokenizedDoc:
    """A document reduced to its unigram + bigram token sequence."""

    doc_id: str
    tokens: list[str] = field(default_factory=list)


def tokenize(text: str, stop_words: frozenset[str] = STOP_WORDS) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop stop words, then
    append space-joined bigrams of the surviving unigrams.

    Bigram formation happens after stop-word removal, so "lost custody of
    their children" yields the bigram "lost custody" and "custody children".
    """
    unigrams = [t for t in _TOKEN_RE.findall(text.lower()) if t not in stop_words]
    bigrams = [f"{a} {b}" for a, b in zip(unigrams, unigrams[1:])]
    return unigrams + bigrams


def tokenize_doc(doc_id: str, text: str, stop_words: frozenset[str] = STOP_WORDS) -> TokenizedDoc:
    return TokenizedDoc(doc_id=doc_id, tokens=tokenize(text, stop_words))


class TfidfFeaturizer:
    """Raw-count x smoothed-idf weighting with L2 row normalization.

    idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1. Vocabulary is restricted to
    terms appearing in at least ``min_df`` documents and ordered
    lexicographically so column indices are reproducible.
    """

    def __init__(self, min_df: int = 2):
        self.min_df = min_df

    def get_params(self, deep: bool = True) -> dict:
        return {"min_df": self.min_df}

    def set_params(self, **params) -> "TfidfFeaturizer":
        for key, value in params.items():
            if not hasattr(self, key):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, docs: Sequence[TokenizedDoc]) -> "TfidfFeaturizer":
        check_positive_int(len(docs), "number of documents")
        if self.min_df > len(docs):
            raise ValueError(
                f"min_df={self.min_df} exceeds the corpus size ({len(docs)} docs): "
                "vocabulary would be empty"
            )
        df: dict[str, int] = {}
        for doc in docs:
            for term in set(doc.tokens):
                df[term] = df.get(term, 0) + 1
        vocab = sorted(t for t, c in df.items() if c >= self.min_df)
        if not vocab:
            raise ValueError("empty vocabulary: no term meets min_df")
        self.n_docs_ = len(docs)
        self.vocabulary_ = {t: i for i, t in enumerate(vocab)}
        self.document_frequency_ = np.array([df[t] for t in vocab], dtype=np.int64)
        self.idf_ = np.log((1.0 + self.n_docs_) / (1.0 + self.document_frequency_)) + 1.0
        return self

    def fit_transform(self, docs: Sequence[TokenizedDoc]) -> sparse.csr_matrix:
        return self.fit(docs).transform(docs)

    def _count_rows(self, docs: Sequence[TokenizedDoc]):
        indptr = [0]
        indices: list[int] = []
        values: list[float] = []
        vocab = self.vocabulary_
        for doc in docs:
            counts: dict[int, int] = {}
            for token in doc.tokens:
                col = vocab.get(token)
                if col is not None:
                    counts[col] = counts.get(col, 0) + 1
            for col in sorted(counts):
                indices.append(col)
                values.append(counts[col])
            indptr.append(len(indices))
        return indptr, indices, values

    def counts(self, docs: Sequence[TokenizedDoc]) -> sparse.csr_matrix:
        """Raw in-vocabulary term counts (multinomial NB consumes these)."""
        self._check_fitted()
        indptr, indices, values = self._count_rows(docs)
        return sparse.csr_matrix(
            (np.asarray(values, dtype=np.float64), indices, indptr),
            shape=(len(docs), len(self.vocabulary_)),
        )

    def transform(self, docs: Sequence[TokenizedDoc]) -> sparse.csr_matrix:
        """Weight counts by idf and L2-normalize each row.

        All-out-of-vocabulary documents transform to the zero vector.
        """
        mat = self.counts(docs)
        mat = mat.multiply(self.idf_[np.newaxis, :]).tocsr()
        norms = np.sqrt(mat.multiply(mat).sum(axis=1)).A.ravel()
        nonzero = norms > 0.0
        scale = np.ones_like(norms)
        scale[nonzero] = 1.0 / norms[nonzero]
        return sparse.diags(scale).dot(mat).tocsr()

    def idf_of(self, term: str) -> float:
        self._check_fitted()
        col = self.vocabulary_.get(term)
        if col is None:
            raise KeyError(term)
        return float(self.idf_[col])

    def _check_fitted(self):
        if not hasattr(self, "vocabulary_"):
            raise RuntimeError("TfidfFeaturizer is not fitted")


def smoothed_idf(n_docs: int, df: int) -> float:
    """The exact idf formula used by :class:`TfidfFeaturizer`."""
    return math.log((1 + n_docs) / (1 + df)) + 1.0
