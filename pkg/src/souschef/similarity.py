"""Ingredient-ingredient similarity: cosine, asymmetric cosine, Jaccard, PMI.

All four measures are expressed through one substitution rule over a pair
of ingredient vectors x, y (binary rating-matrix columns for the raw
source, dense PCA score vectors for the pca source):

    c = dot(x, y),  a = dot(x, x),  b = dot(y, y),  m = recipe count

    cosine             c / sqrt(a * b)
    asymmetric cosine  c / (a**alpha * b**(1 - alpha))
    jaccard            c / (a + b - c)
    pmi                ln(c * m / (a * b))

On raw binary columns c = |U(i) & U(j)| and a = |U(i)|, so these reduce
exactly to the set formulas. Pairs carrying no information (zero-support
vectors, or nonpositive co-occurrence under PMI) score the NEG_INF
sentinel and are never admitted into a neighborhood.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .corpus import RatingMatrix
from .embedding import EmbeddingConfig, IngredientEmbedding, pca_embed

NEG_INF = float("-inf")

MEASURE_KINDS = ("cosine", "asymmetric_cosine", "jaccard", "pmi")

# CLI/report shorthand for measure kinds.
MEASURE_ALIASES = {
    "cosine": "cosine", "cs": "cosine",
    "asymmetric_cosine": "asymmetric_cosine", "acs": "asymmetric_cosine",
    "jaccard": "jaccard", "js": "jaccard",
    "pmi": "pmi",
}

# Number of full similarity-matrix computations performed by this process.
# Lets callers (and tests) assert that expensive matrices are reused rather
# than rebuilt, e.g. across a neighbour-count sweep.
matrix_build_count = 0

Source = Union[RatingMatrix, IngredientEmbedding]


@dataclass(frozen=True)
class Measure:
    """A similarity measure; alpha only applies to asymmetric_cosine."""

    kind: str
    alpha: float = 0.05

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")

    @classmethod
    def parse(cls, name: str, alpha: float = 0.05) -> "Measure":
        kind = MEASURE_ALIASES.get(name.lower())
        if kind is None:
            raise ValueError(f"unknown measure {name!r}")
        return cls(kind, alpha)

    def label(self) -> str:
        if self.kind == "asymmetric_cosine":
            return f"asymmetric_cosine(alpha={self.alpha:g})"
        return self.kind

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Measure":
        return cls(doc["kind"], doc.get("alpha", 0.05))


@dataclass(frozen=True)
class SourceRef:
    """Which vector space similarities were computed in."""

    kind: str                   # "raw" | "pca"
    d: int | None = None        # pca only
    center: bool | None = None  # pca only

    def __post_init__(self):
        if self.kind not in ("raw", "pca"):
            raise ValueError(f"unknown source kind {self.kind!r}")

    def label(self) -> str:
        if self.kind == "raw":
            return "raw"
        center = "centered" if self.center else "uncentered"
        return f"pca(d={self.d}, {center})"

    def to_json_dict(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.kind == "pca":
            doc["d"] = self.d
            doc["center"] = self.center
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SourceRef":
        return cls(doc["kind"], doc.get("d"), doc.get("center"))


@dataclass
class SimilarityMatrix:
    """Dense n x n scores with NEG_INF marking no-information pairs.

    The diagonal is NEG_INF by convention: self-similarity is excluded from
    every neighborhood.
    """

    scores: np.ndarray
    measure: Measure
    source: SourceRef

    @property
    def n(self) -> int:
        return self.scores.shape[0]


@dataclass
class NeighborModel:
    """Per-ingredient top-k neighbor lists under one measure/source.

    ``neighbors[i]`` is a list of (neighbor id, score) sorted by score
    descending, ties by ascending canonical name; self and NEG_INF entries
    never appear.
    """

    k: int
    measure: Measure
    source: SourceRef
    neighbors: list[list[tuple[int, float]]]
    _weights: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.neighbors)

    def weight_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(nbr_idx, nbr_scores, abs_row_sums) padded to k with zero weight.

        Padding entries point at ingredient 0 with score 0.0, so vectorized
        scoring over these arrays equals summing the true lists.
        """
        if self._weights is None:
            n, k = self.n, self.k
            idx = np.zeros((n, k), dtype=np.int64)
            val = np.zeros((n, k), dtype=np.float64)
            for i, lst in enumerate(self.neighbors):
                for pos, (j, s) in enumerate(lst):
                    idx[i, pos] = j
                    val[i, pos] = s
            self._weights = (idx, val, np.abs(val).sum(axis=1))
        return self._weights

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "measure": self.measure.to_json_dict(),
            "source": self.source.to_json_dict(),
            "neighbors": [[[j, s] for j, s in lst] for lst in self.neighbors],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "NeighborModel":
        return cls(
            k=doc["k"],
            measure=Measure.from_json_dict(doc["measure"]),
            source=SourceRef.from_json_dict(doc["source"]),
            neighbors=[[(int(j), float(s)) for j, s in lst]
                       for lst in doc["neighbors"]],
        )


# ---------------------------------------------------------------------------
# Score computation
# ---------------------------------------------------------------------------

def source_ref(source: Source) -> SourceRef:
    if isinstance(source, RatingMatrix):
        return SourceRef("raw")
    return SourceRef("pca", d=source.d, center=source.center)


def build_source(matrix: RatingMatrix, ref: SourceRef) -> Source:
    """Materialize the vector source a SourceRef describes."""
    if ref.kind == "raw":
        return matrix
    return pca_embed(matrix, EmbeddingConfig(d=ref.d, center=bool(ref.center)))


def _gram(source: Source) -> tuple[np.ndarray, int]:
    """Dense pairwise dot-product matrix of ingredient vectors, plus m."""
    if isinstance(source, RatingMatrix):
        return source.cooccurrence().astype(np.float64), source.m
    vectors = source.vectors
    if not np.all(np.isfinite(vectors)):
        raise ValueError("embedding contains non-finite entries")
    return vectors @ vectors.T, source.m


def scores_from_gram(gram: np.ndarray, m: int, measure: Measure) -> np.ndarray:
    """Similarity scores for all pairs given their dot products.

    ``gram`` holds c on the off-diagonal and the supports a on the diagonal.
    Returns an n x n float matrix with NEG_INF sentinels; diagonal NEG_INF.
    """
    a = np.diag(gram).copy()
    c = gram.astype(np.float64, copy=True)
    valid = a > 0.0
    pair_valid = np.outer(valid, valid)

    with np.errstate(divide="ignore", invalid="ignore"):
        if measure.kind == "cosine":
            s = c / np.sqrt(np.outer(a, a))
        elif measure.kind == "asymmetric_cosine":
            al = measure.alpha
            denom = np.power(a, al)[:, None] * np.power(a, 1.0 - al)[None, :]
            s = c / denom
        elif measure.kind == "jaccard":
            s = c / (a[:, None] + a[None, :] - c)
        elif measure.kind == "pmi":
            ratio = np.where(c > 0.0, c * float(m) / np.outer(a, a), 1.0)
            s = np.where(c > 0.0, np.log(ratio), NEG_INF)
        else:  # pragma: no cover - Measure validates kind
            raise ValueError(measure.kind)

    s = np.where(pair_valid, s, NEG_INF)
    np.fill_diagonal(s, NEG_INF)
    return s


def _pair_score(c: float, a: float, b: float, m: int, measure: Measure) -> float:
    """Scalar form of the substitution rule; mirrors scores_from_gram."""
    if a <= 0.0 or b <= 0.0:
        return NEG_INF
    if measure.kind == "cosine":
        return c / float(np.sqrt(a * b))
    if measure.kind == "asymmetric_cosine":
        return c / (a ** measure.alpha * b ** (1.0 - measure.alpha))
    if measure.kind == "jaccard":
        return c / (a + b - c)
    if measure.kind == "pmi":
        if c <= 0.0:
            return NEG_INF
        return float(np.log(c * m / (a * b)))
    raise ValueError(measure.kind)  # pragma: no cover


def similarity_pair(i: int, j: int, source: Source, measure: Measure) -> float:
    """Score one ordered ingredient pair; NEG_INF when no information.

    Raw binary sources use exact integer set counting, so the reduction to
    the set formulas is exact.
    """
    if i == j:
        raise ValueError("self-similarity is excluded by convention")
    if isinstance(source, RatingMatrix):
        ui = source.col(i)
        uj = source.col(j)
        c = float(np.intersect1d(ui, uj, assume_unique=True).size)
        a, b = float(ui.size), float(uj.size)
        m = source.m
    else:
        x = source.vectors[i]
        y = source.vectors[j]
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("embedding contains non-finite entries")
        c = float(x @ y)
        a, b = float(x @ x), float(y @ y)
        m = source.m
    return _pair_score(c, a, b, m, measure)


def similarity_matrix(source: Source, measure: Measure) -> SimilarityMatrix:
    """All-pairs similarity under the substitution rule (vectorized).

    Symmetric measures are computed once per unordered pair via the shared
    Gram matrix; asymmetric cosine reuses the same Gram with row/column
    exponents.
    """
    global matrix_build_count
    gram, m = _gram(source)
    scores = scores_from_gram(gram, m, measure)
    matrix_build_count += 1
    return SimilarityMatrix(scores, measure, source_ref(source))


# ---------------------------------------------------------------------------
# Neighborhood selection
# ---------------------------------------------------------------------------

def name_order_permutation(names: list[str]) -> np.ndarray:
    """Ingredient ids sorted by canonical name; used for tie-breaking."""
    return np.array(sorted(range(len(names)), key=lambda i: names[i]), dtype=np.int64)


def topk_arrays(scores: np.ndarray, k: int,
                name_perm: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized per-row top-k with (score desc, name asc) ordering.

    Returns (ids, vals, valid_counts) where row i of ids/vals holds the
    first min(k, #valid) neighbors; positions beyond valid_counts[i] are
    padding. Relies on NEG_INF (including the diagonal) sorting last.
    """
    n = scores.shape[0]
    k_eff = min(k, max(n - 1, 0))
    by_name = scores[:, name_perm]
    order = np.argsort(-by_name, axis=1, kind="stable")
    cols = name_perm[order]
    vals = np.take_along_axis(scores, cols, axis=1)
    valid_counts = np.minimum((scores != NEG_INF).sum(axis=1), k_eff).astype(np.int64)
    return cols[:, :k_eff], vals[:, :k_eff], valid_counts


def top_k_neighbors(sim: SimilarityMatrix, k: int, names: list[str]) -> NeighborModel:
    """Select each ingredient's k best-scoring neighbors.

    NEG_INF entries are excluded entirely; fewer than k neighbors are
    retained when fewer valid candidates exist. Ties on score break by
    ascending canonical name, making the model deterministic.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(names) != sim.n:
        raise ValueError("names length does not match similarity matrix")
    perm = name_order_permutation(names)
    ids, vals, counts = topk_arrays(sim.scores, k, perm)
    neighbors = [
        [(int(ids[i, p]), float(vals[i, p])) for p in range(counts[i])]
        for i in range(sim.n)
    ]
    return NeighborModel(k=k, measure=sim.measure, source=sim.source,
                         neighbors=neighbors)
