import os
from pathlib import Path

import numpy as np
import pytest

from souschef.corpus import Corpus, Recipe, Vocabulary, RatingMatrix


def make_corpus(recipes: list[list[str]], cuisines: list[str] | None = None,
                ids: list[int] | None = None) -> Corpus:
    """Hand-build a Corpus from ingredient-name lists.

    Ids are assigned densely in lexicographic name order, matching what the
    cleaning pipeline produces.
    """
    names = sorted({name for recipe in recipes for name in recipe})
    index = {name: i for i, name in enumerate(names)}
    counts = [0] * len(names)
    built = []
    for pos, recipe in enumerate(recipes):
        ing = tuple(sorted({index[name] for name in recipe}))
        for i in ing:
            counts[i] += 1
        built.append(Recipe(
            id=ids[pos] if ids else pos + 1,
            cuisine=cuisines[pos] if cuisines else "other",
            ingredient_ids=ing,
        ))
    return Corpus(built, Vocabulary(names, counts))


def matrix_from_columns(columns: list[list[int]], m: int) -> RatingMatrix:
    """RatingMatrix from per-ingredient recipe-index lists."""
    rows: list[set[int]] = [set() for _ in range(m)]
    for ingredient, members in enumerate(columns):
        for u in members:
            rows[u].add(ingredient)
    return RatingMatrix.from_rows([sorted(r) for r in rows], len(columns))


def random_binary_matrix(rng: np.random.Generator, m: int, n: int,
                         density: float = 0.4) -> RatingMatrix:
    """Random binary matrix where every ingredient has nonzero support."""
    dense = (rng.random((m, n)) < density).astype(np.int8)
    for j in range(n):
        if dense[:, j].sum() == 0:
            dense[rng.integers(m), j] = 1
    return RatingMatrix.from_rows([np.flatnonzero(row) for row in dense], n)


def baking_recipe_lists(count: int = 30, seed: int = 7) -> tuple[list[list[str]], list[str]]:
    """Recipes drawn from two ingredient communities, plus cuisine labels."""
    savory = ["garlic", "olive oil", "onions", "tomatoes", "basil", "oregano"]
    sweet = ["butter", "eggs", "flour", "milk", "sugar", "vanilla"]
    rng = np.random.default_rng(seed)
    recipes = []
    cuisines = []
    for _ in range(count):
        pool = savory if rng.random() < 0.5 else sweet
        size = int(rng.integers(3, 6))
        picks = list(rng.choice(pool, size=size, replace=False))
        if rng.random() < 0.2:
            other = sweet if pool is savory else savory
            picks.append(str(rng.choice(other)))
        recipes.append([str(p) for p in picks])
        cuisines.append("savory" if pool is savory else "sweet")
    return recipes, cuisines


@pytest.fixture
def baking_corpus() -> Corpus:
    """Small corpus with two visible ingredient communities."""
    recipes, cuisines = baking_recipe_lists()
    return make_corpus(recipes, cuisines)


def kaggle_train_path() -> Path | None:
    """Locate the What's Cooking training file, if the user provided it."""
    env = os.environ.get("WHATS_COOKING_TRAIN")
    if env:
        p = Path(env)
        if p.is_file():
            return p
    default = Path(__file__).resolve().parent.parent / "data" / "train.json"
    if default.is_file():
        return default
    return None


requires_dataset = pytest.mark.skipif(
    kaggle_train_path() is None,
    reason="What's Cooking train.json not present (set WHATS_COOKING_TRAIN or put it at data/train.json)",
)


@pytest.fixture(scope="session")
def prepared_corpus():
    """Full default-config pipeline on the real dataset, shared across tests.

    Returns None when the dataset is absent; (corpus, stages, seconds)
    otherwise.
    """
    import time

    from souschef.corpus import PipelineConfig, run_pipeline

    path = kaggle_train_path()
    if path is None:
        return None
    data = path.read_bytes()
    started = time.perf_counter()
    corpus, stages = run_pipeline(data, PipelineConfig())
    return corpus, stages, time.perf_counter() - started
