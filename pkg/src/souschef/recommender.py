"""Scoring candidate ingredients against a partial recipe.

The fit of ingredient i to recipe u sums the similarities of i's
neighbors that are present in u and normalizes by the total absolute
similarity mass of the neighborhood:

    P(u, i) = sum_{j in N_i} s_ij * r_uj / sum_{j in N_i} |s_ij|

so P is 1 when every neighbor is present (all-nonnegative similarities),
0 when none is, and scale-free in the similarities. An empty or
zero-mass neighborhood scores 0 rather than erroring: such an ingredient
should simply rank last.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .corpus import Vocabulary
from .similarity import NeighborModel


class UnknownIngredientError(ValueError):
    """One or more ingredient names could not be resolved."""

    def __init__(self, names: list[str]):
        super().__init__("unknown ingredients: " + ", ".join(sorted(names)))
        self.names = list(names)


@dataclass(frozen=True)
class PartialRecipe:
    """The ingredients assembled so far, as vocabulary ids."""

    ids: frozenset[int]

    def __post_init__(self):
        if not self.ids:
            raise ValueError("a partial recipe needs at least one ingredient")

    @classmethod
    def from_ids(cls, ids: Iterable[int]) -> "PartialRecipe":
        return cls(frozenset(int(i) for i in ids))

    @classmethod
    def from_names(cls, vocabulary: Vocabulary, names: Iterable[str],
                   ignore_unknown: bool = False) -> "PartialRecipe":
        ids, unknown = vocabulary.resolve(names)
        if unknown and not ignore_unknown:
            raise UnknownIngredientError(unknown)
        return cls.from_ids(ids)


@dataclass(frozen=True)
class Recommendation:
    ingredient_id: int
    name: str
    fit: float
    rank: int


def fit_score(model: NeighborModel, recipe: PartialRecipe, ingredient: int) -> float:
    """P(u, i) for one candidate; the scalar reference path."""
    if not 0 <= ingredient < model.n:
        raise UnknownIngredientError([str(ingredient)])
    numer = 0.0
    denom = 0.0
    for j, s in sorted(model.neighbors[ingredient]):
        if j in recipe.ids:
            numer += s
        denom += abs(s)
    if denom == 0.0:
        return 0.0
    return numer / denom


def score_all(model: NeighborModel, recipe: PartialRecipe) -> np.ndarray:
    """P(u, i) for every ingredient id at once."""
    bad = [i for i in recipe.ids if not 0 <= i < model.n]
    if bad:
        raise UnknownIngredientError([str(i) for i in sorted(bad)])
    present = np.zeros(model.n, dtype=np.float64)
    present[list(recipe.ids)] = 1.0
    idx, val, abs_sums = model.weight_arrays()
    numer = (val * present[idx]).sum(axis=1)
    with np.errstate(invalid="ignore"):
        fits = np.where(abs_sums > 0.0, numer / np.where(abs_sums > 0.0, abs_sums, 1.0), 0.0)
    return fits


def recommend(model: NeighborModel, vocabulary: Vocabulary,
              recipe: PartialRecipe, n: int = 10) -> list[Recommendation]:
    """Top-n candidates by fit, excluding what the recipe already contains.

    Deterministic ordering: fit descending, then canonical name ascending.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(vocabulary) != model.n:
        raise ValueError("vocabulary size does not match model")
    fits = score_all(model, recipe)
    candidates = [i for i in range(model.n) if i not in recipe.ids]
    candidates.sort(key=lambda i: (-fits[i], vocabulary.names[i]))
    top = candidates[:n]
    return [Recommendation(ingredient_id=i, name=vocabulary.names[i],
                           fit=float(fits[i]), rank=pos + 1)
            for pos, i in enumerate(top)]
