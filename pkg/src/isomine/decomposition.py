"""Truncated SVD via randomized power iteration (Halko-style range finder).

The reducer replaces a non-linear embedding stack with a linear surrogate:
it only has to hand the clusterer a low-dimensional, variance-ordered view
of the TF-IDF matrix.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import sparse

from ._validation import check_positive_int

_RANK_RTOL = 1e-10


class TruncatedSVD:
    """Rank-k factorization A ~ U S Vt with columns ordered by decreasing
    singular value. Deterministic for a fixed seed.

    If the matrix rank r is below ``n_components``, only r components are
    returned and a warning is emitted.
    """

    def __init__(self, n_components: int, seed: int = 0, n_oversample: int = 10,
                 n_power_iter: int = 12):
        self.n_components = n_components
        self.seed = seed
        self.n_oversample = n_oversample
        self.n_power_iter = n_power_iter

    def get_params(self, deep: bool = True) -> dict:
        return {
            "n_components": self.n_components,
            "seed": self.seed,
            "n_oversample": self.n_oversample,
            "n_power_iter": self.n_power_iter,
        }

    def set_params(self, **params) -> "TruncatedSVD":
        for key, value in params.items():
            if not hasattr(self, key):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X) -> "TruncatedSVD":
        self.fit_transform(X)
        return self

    def fit_transform(self, X) -> np.ndarray:
        """Factorize X and return the embedding U[:, :k] * s[:k]."""
        k = check_positive_int(self.n_components, "n_components")
        n_rows, n_cols = X.shape
        if k > min(n_rows, n_cols):
            raise ValueError(
                f"n_components={k} exceeds min(n_docs, n_features)={min(n_rows, n_cols)}"
            )
        rng = np.random.default_rng(self.seed)
        sketch = k + self.n_oversample
        omega = rng.standard_normal((n_cols, sketch))
        Y = X @ omega
        Y, _ = np.linalg.qr(Y)
        for _ in range(self.n_power_iter):
            Z = X.T @ Y
            Z, _ = np.linalg.qr(Z)
            Y = X @ Z
            Y, _ = np.linalg.qr(Y)
        B = Y.T @ (X.toarray() if sparse.issparse(X) else X)
        Ub, s, Vt = np.linalg.svd(B, full_matrices=False)
        U = Y @ Ub

        rank = int(np.sum(s > _RANK_RTOL * (s[0] if s.size else 0.0)))
        if rank < k:
            warnings.warn(
                f"requested {k} components but matrix rank is {rank}; "
                f"returning {rank} components",
                RuntimeWarning,
            )
            k = max(rank, 1)
        self.components_ = Vt[:k]
        self.singular_values_ = s[:k]
        self.n_components_ = k
        return U[:, :k] * s[:k]

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "components_"):
            raise RuntimeError("TruncatedSVD is not fitted")
        return np.asarray(X @ self.components_.T)


def reduce_matrix(X, n_components: int, seed: int = 0) -> np.ndarray:
    """One-shot reduction used by the theme-discovery grid search."""
    return TruncatedSVD(n_components=n_components, seed=seed).fit_transform(X)
