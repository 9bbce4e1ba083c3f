"""Dense ingredient embeddings via PCA over recipe-space.

Each ingredient is a sample living in m-dimensional recipe space (its
binary rating-matrix column). PCA rotates these n samples onto their
principal axes, replacing a sparse length-m vector by a dense length-d
score vector. Because n << m, the eigendecomposition is done on the
n x n Gram matrix of the (optionally centered) ingredient vectors, never
on any m x m object; the resulting score vectors reproduce the Gram
matrix exactly: dot(vec_i, vec_j) equals the (centered) column dot
products up to floating point error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import RatingMatrix

# Relative eigenvalue cutoff below which components count as rank deficiency.
RANK_EPS = 1e-12


@dataclass(frozen=True)
class EmbeddingConfig:
    """d = number of components (None means full rank n); center subtracts
    the per-recipe feature mean across ingredients before projecting."""

    d: int | None = None
    center: bool = True


@dataclass
class IngredientEmbedding:
    """PCA score vectors, one row per ingredient."""

    vectors: np.ndarray            # (n, d) float64
    feature_means: np.ndarray      # (m,) per-recipe means across ingredients
    explained_variance: np.ndarray  # (d,) nonincreasing, nonnegative
    center: bool
    rank_deficient: bool           # fewer components than requested

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def m(self) -> int:
        return self.feature_means.shape[0]

    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "m": self.m,
            "center": self.center,
            "rank_deficient": self.rank_deficient,
            "explained_variance": self.explained_variance.tolist(),
            "feature_means": self.feature_means.tolist(),
            "vectors": self.vectors.ravel().tolist(),  # row-major
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "IngredientEmbedding":
        vectors = np.asarray(doc["vectors"], dtype=np.float64).reshape(doc["n"], doc["d"])
        return cls(
            vectors=vectors,
            feature_means=np.asarray(doc["feature_means"], dtype=np.float64),
            explained_variance=np.asarray(doc["explained_variance"], dtype=np.float64),
            center=bool(doc["center"]),
            rank_deficient=bool(doc["rank_deficient"]),
        )


def pca_embed(matrix: RatingMatrix, config: EmbeddingConfig | None = None) -> IngredientEmbedding:
    """Embed each ingredient as its PCA scores over recipe features.

    The n x n Gram matrix G of ingredient columns is assembled from the
    sparse matrix (G = co-occurrence counts); centering is applied as
    double-centering of G, equivalent to subtracting the mean ingredient
    vector. Eigenvalues below max(eigenvalue) * 1e-12 are truncated as
    rank deficiency; asking for more components than the numerical rank
    yields fewer columns with ``rank_deficient`` set.
    """
    config = config or EmbeddingConfig()
    n = matrix.n
    d = n if config.d is None else config.d
    if not 1 <= d <= n:
        raise ValueError(f"component count d={d} must be in [1, {n}]")

    gram = matrix.cooccurrence().astype(np.float64)
    if not np.any(gram):
        raise ValueError("cannot embed an all-zero rating matrix")
    if config.center:
        row_mean = gram.mean(axis=0)
        total_mean = row_mean.mean()
        gram = gram - row_mean[None, :] - row_mean[:, None] + total_mean

    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    cutoff = max(eigvals.max(), 0.0) * RANK_EPS
    rank = int(np.count_nonzero(eigvals > cutoff))
    if rank == 0:
        raise ValueError("rating matrix has numerical rank zero after centering")
    keep = min(d, rank)
    vals = eigvals[:keep]
    vectors = eigvecs[:, :keep] * np.sqrt(vals)[None, :]

    counts_per_recipe = matrix.row_sizes().astype(np.float64)
    feature_means = counts_per_recipe / n

    denom = max(n - 1, 1)
    return IngredientEmbedding(
        vectors=np.ascontiguousarray(vectors),
        feature_means=feature_means,
        explained_variance=vals / denom,
        center=config.center,
        rank_deficient=keep < d,
    )
