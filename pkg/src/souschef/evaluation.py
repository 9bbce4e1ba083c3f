"""Leave-one-out ranking evaluation and parameter sweeps.

For every evaluated recipe one ingredient is removed at random (a
counter-style RNG keyed on (seed, recipe id), so the draw is independent
of evaluation order), every ingredient not in the partial recipe is
ranked by predicted fit, and the removed ingredient's 1-based rank is
recorded. Two leakage-free modes are provided:

* ``fold_complement``: one model built on all recipes outside the
  evaluated fold; the model never sees any fold recipe.
* ``exact_downdate``: global co-occurrence counts are computed once and
  each recipe's own contribution is subtracted before scoring it, which
  is exact per-recipe leave-one-out for raw binary sources.
"""

from __future__ import annotations

import random
import statistics
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, Recipe, Vocabulary, build_matrix, RatingMatrix
from .similarity import (
    Measure,
    NeighborModel,
    SourceRef,
    build_source,
    name_order_permutation,
    scores_from_gram,
    similarity_matrix,
    top_k_neighbors,
    topk_arrays,
)

FOLDS = ("tuning", "test")
MODES = ("fold_complement", "exact_downdate")


@dataclass(frozen=True)
class EvalConfig:
    """One evaluation configuration (grid cell)."""

    measure: Measure
    k: int
    source: SourceRef
    fold: str = "test"
    tuning_fraction: float = 0.10
    seed: int = 42
    mode: str = "fold_complement"

    def __post_init__(self):
        if self.fold not in FOLDS:
            raise ValueError(f"fold must be one of {FOLDS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0.0 < self.tuning_fraction < 1.0:
            raise ValueError("tuning_fraction must be in (0, 1)")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.mode == "exact_downdate" and self.source.kind != "raw":
            raise ValueError("exact_downdate mode requires the raw source")

    def to_json_dict(self) -> dict:
        return {
            "measure": self.measure.to_json_dict(),
            "k": self.k,
            "source": self.source.to_json_dict(),
            "fold": self.fold,
            "tuning_fraction": self.tuning_fraction,
            "seed": self.seed,
            "mode": self.mode,
        }


@dataclass(frozen=True)
class TraceRow:
    recipe_id: int
    removed_id: int
    removed: str
    rank: int


@dataclass
class EvalReport:
    """Metrics plus the per-recipe rank trace for one configuration.

    ``wall_time_s`` is informational only and deliberately excluded from
    the serialized JSON so that reports are byte-identical across runs.
    """

    config: dict
    evaluated: int
    recall_at_10: float
    mean_rank: float
    median_rank: float
    histogram: dict[int, int]
    trace: list[TraceRow]
    wall_time_s: float = field(compare=False, default=0.0)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "evaluated": self.evaluated,
            "recall_at_10": self.recall_at_10,
            "mean_rank": self.mean_rank,
            "median_rank": self.median_rank,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "trace": [
                {"recipe_id": t.recipe_id, "removed_id": t.removed_id,
                 "removed": t.removed, "rank": t.rank}
                for t in self.trace
            ],
        }

    def trace_csv(self) -> str:
        lines = ["recipe_id,removed_ingredient,rank"]
        lines.extend(f"{t.recipe_id},{t.removed},{t.rank}" for t in self.trace)
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        cfg = self.config
        measure = cfg["measure"]["kind"]
        if measure == "asymmetric_cosine":
            measure += f"(alpha={cfg['measure']['alpha']:g})"
        source = cfg["source"]["kind"]
        return (
            f"measure {measure}  k={cfg['k']}  source={source}  "
            f"fold={cfg['fold']}  seed={cfg['seed']}\n"
            f"recipes evaluated  {self.evaluated}\n"
            f"recall@10          {self.recall_at_10 * 100:.2f}%\n"
            f"mean rank          {self.mean_rank:.2f}\n"
            f"median rank        {self.median_rank:g}\n"
        )


def split_folds(corpus: Corpus, tuning_fraction: float = 0.10,
                seed: int = 42) -> tuple[list[int], list[int]]:
    """Deterministic disjoint split of recipe ids into (tuning, test).

    The tuning fold gets round(fraction * m) recipes, so sizes are within
    one of the exact fraction.
    """
    if corpus.m == 0:
        raise ValueError("cannot split an empty corpus")
    if not 0.0 < tuning_fraction < 1.0:
        raise ValueError("tuning_fraction must be in (0, 1)")
    ids = sorted(r.id for r in corpus.recipes)
    rng = random.Random(seed)
    rng.shuffle(ids)
    cut = round(len(ids) * tuning_fraction)
    return sorted(ids[:cut]), sorted(ids[cut:])


def hold_one_out(recipe: Recipe, seed: int) -> tuple[tuple[int, ...], int]:
    """Remove one uniformly random ingredient from the recipe.

    The draw uses a counter-based Philox generator keyed on
    (seed, recipe id): the same pair always removes the same ingredient,
    regardless of evaluation order or parallel schedule.
    """
    ids = recipe.ingredient_ids
    if len(ids) < 2:
        raise ValueError("cannot hold out from a recipe with fewer than 2 ingredients")
    key = np.array([seed % 2**64, recipe.id % 2**64], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    pos = int(rng.integers(len(ids)))
    missing = ids[pos]
    partial = ids[:pos] + ids[pos + 1:]
    return partial, missing


# ---------------------------------------------------------------------------
# Downdatable co-occurrence counts (exact per-recipe leave-one-out)
# ---------------------------------------------------------------------------

@dataclass
class CooccurrenceCounts:
    """Global pair counts: gram[i, j] = |U(i) & U(j)|, diagonal = supports."""

    gram: np.ndarray  # (n, n) int64
    m: int

    @classmethod
    def from_matrix(cls, matrix: RatingMatrix) -> "CooccurrenceCounts":
        return cls(matrix.cooccurrence(), matrix.m)

    def without_recipe(self, ingredient_ids: tuple[int, ...]) -> "CooccurrenceCounts":
        """Counts as if the given recipe were absent from the corpus."""
        ids = np.asarray(ingredient_ids, dtype=np.int64)
        gram = self.gram.copy()
        gram[np.ix_(ids, ids)] -= 1
        return CooccurrenceCounts(gram, self.m - 1)


# ---------------------------------------------------------------------------
# Core ranking
# ---------------------------------------------------------------------------

def _name_ranks(vocabulary: Vocabulary) -> np.ndarray:
    """rank[i] = position of ingredient i in lexicographic name order."""
    perm = name_order_permutation(vocabulary.names)
    ranks = np.empty(len(perm), dtype=np.int64)
    ranks[perm] = np.arange(len(perm))
    return ranks


def _rank_of_missing(fits: np.ndarray, partial: tuple[int, ...], missing: int,
                     name_ranks: np.ndarray) -> int:
    """1-based rank of the missing ingredient among all non-member candidates,
    under (fit descending, name ascending) ordering."""
    candidate = np.ones(fits.shape[0], dtype=bool)
    candidate[list(partial)] = False
    p = fits[missing]
    nr = name_ranks[missing]
    higher = int(np.count_nonzero(candidate & (fits > p)))
    tie_before = int(np.count_nonzero(candidate & (fits == p) & (name_ranks < nr)))
    return 1 + higher + tie_before


def _weight_csr(model: NeighborModel) -> tuple[sp.csr_matrix, np.ndarray]:
    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    for i, lst in enumerate(model.neighbors):
        for j, s in lst:
            rows.append(i)
            cols.append(j)
            data.append(s)
    w = sp.csr_matrix((data, (rows, cols)), shape=(model.n, model.n))
    abs_sums = np.abs(w).sum(axis=1)
    return w, np.asarray(abs_sums).ravel()


def _evaluate_with_model(model: NeighborModel, vocabulary: Vocabulary,
                         fold_recipes: list[Recipe], seed: int) -> list[TraceRow]:
    """Score every fold recipe against one fixed model (batched)."""
    n = model.n
    holdouts = [hold_one_out(r, seed) for r in fold_recipes]
    indptr = [0]
    indices: list[int] = []
    for partial, _ in holdouts:
        indices.extend(sorted(partial))
        indptr.append(len(indices))
    r_partial = sp.csr_matrix(
        (np.ones(len(indices)), np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(fold_recipes), n),
    )
    w, abs_sums = _weight_csr(model)
    numer = np.asarray((r_partial @ w.T).todense())
    safe = np.where(abs_sums > 0.0, abs_sums, 1.0)
    fits = np.where(abs_sums > 0.0, numer / safe, 0.0)

    name_ranks = _name_ranks(vocabulary)
    trace: list[TraceRow] = []
    for row, (recipe, (partial, missing)) in enumerate(zip(fold_recipes, holdouts)):
        rank = _rank_of_missing(fits[row], partial, missing, name_ranks)
        trace.append(TraceRow(recipe.id, missing,
                              vocabulary.names[missing], rank))
    return trace


def _evaluate_downdated(corpus: Corpus, matrix: RatingMatrix,
                        fold_recipes: list[Recipe],
                        config: EvalConfig) -> list[TraceRow]:
    """Exact leave-one-out for raw sources via count downdating."""
    counts = CooccurrenceCounts.from_matrix(matrix)
    name_perm = name_order_permutation(corpus.vocabulary.names)
    name_ranks = _name_ranks(corpus.vocabulary)
    n = corpus.n
    trace: list[TraceRow] = []
    for recipe in fold_recipes:
        ids = np.asarray(recipe.ingredient_ids, dtype=np.int64)
        counts.gram[np.ix_(ids, ids)] -= 1
        try:
            scores = scores_from_gram(counts.gram.astype(np.float64),
                                      counts.m - 1, config.measure)
            nbr_ids, nbr_vals, valid = topk_arrays(scores, config.k, name_perm)
            width = nbr_ids.shape[1]
            keep = np.arange(width)[None, :] < valid[:, None]
            vals = np.where(keep, nbr_vals, 0.0)

            partial, missing = hold_one_out(recipe, config.seed)
            present = np.zeros(n, dtype=np.float64)
            present[list(partial)] = 1.0
            numer = (vals * present[nbr_ids]).sum(axis=1)
            abs_sums = np.abs(vals).sum(axis=1)
            safe = np.where(abs_sums > 0.0, abs_sums, 1.0)
            fits = np.where(abs_sums > 0.0, numer / safe, 0.0)
            rank = _rank_of_missing(fits, partial, missing, name_ranks)
            trace.append(TraceRow(recipe.id, missing,
                                  corpus.vocabulary.names[missing], rank))
        finally:
            counts.gram[np.ix_(ids, ids)] += 1
    return trace


def _aggregate(trace: list[TraceRow]) -> tuple[float, float, float, dict[int, int]]:
    ranks = [t.rank for t in trace]
    histogram = dict(Counter(ranks))
    recall = sum(1 for r in ranks if r <= 10) / len(ranks)
    return (recall, float(np.mean(ranks)), float(statistics.median(ranks)),
            histogram)


def evaluate_fold(corpus: Corpus, config: EvalConfig) -> EvalReport:
    """Leave-one-out evaluation of one configuration over one fold."""
    started = time.perf_counter()
    tuning_ids, test_ids = split_folds(corpus, config.tuning_fraction, config.seed)
    fold_ids = set(tuning_ids if config.fold == "tuning" else test_ids)
    fold_recipes = sorted((r for r in corpus.recipes if r.id in fold_ids),
                          key=lambda r: r.id)
    if not fold_recipes:
        raise ValueError(f"{config.fold} fold is empty")

    if config.mode == "fold_complement":
        complement = corpus.subset(set(r.id for r in corpus.recipes) - fold_ids)
        matrix = build_matrix(complement)
        source = build_source(matrix, config.source)
        sim = similarity_matrix(source, config.measure)
        model = top_k_neighbors(sim, config.k, corpus.vocabulary.names)
        trace = _evaluate_with_model(model, corpus.vocabulary, fold_recipes,
                                     config.seed)
    else:
        matrix = build_matrix(corpus)
        trace = _evaluate_downdated(corpus, matrix, fold_recipes, config)

    recall, mean_rank, median_rank, histogram = _aggregate(trace)
    return EvalReport(
        config=config.to_json_dict(),
        evaluated=len(trace),
        recall_at_10=recall,
        mean_rank=mean_rank,
        median_rank=median_rank,
        histogram=histogram,
        trace=trace,
        wall_time_s=time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# Parameter sweep
# ---------------------------------------------------------------------------

SELECTION_RULE = "max recall@10, then lower median rank, then lower k"


@dataclass
class SweepReport:
    """Grid of evaluation reports plus the per-(measure, source) winners."""

    cells: list[EvalReport]
    selected: list[dict]
    selection_rule: str = SELECTION_RULE

    def to_json_dict(self) -> dict:
        # Cell traces are omitted: the sweep artifact is a comparison table.
        cell_docs = []
        for cell in self.cells:
            cell_docs.append({
                "config": cell.config,
                "evaluated": cell.evaluated,
                "recall_at_10": cell.recall_at_10,
                "mean_rank": cell.mean_rank,
                "median_rank": cell.median_rank,
            })
        return {"cells": cell_docs, "selected": self.selected,
                "selection_rule": self.selection_rule}

    def to_text(self) -> str:
        lines = [f"{'measure':<28} {'source':<22} {'k':>4} "
                 f"{'recall@10':>10} {'mean':>8} {'median':>8}"]
        for cell in self.cells:
            cfg = cell.config
            measure = cfg["measure"]["kind"]
            if measure == "asymmetric_cosine":
                measure += f"(a={cfg['measure']['alpha']:g})"
            source = SourceRef.from_json_dict(cfg["source"]).label()
            lines.append(
                f"{measure:<28} {source:<22} {cfg['k']:>4} "
                f"{cell.recall_at_10 * 100:>9.2f}% {cell.mean_rank:>8.2f} "
                f"{cell.median_rank:>8g}")
        lines.append("")
        lines.append(f"selection rule: {self.selection_rule}")
        for win in self.selected:
            measure = win["measure"]["kind"]
            source = SourceRef.from_json_dict(win["source"]).label()
            lines.append(
                f"best for {measure} on {source}: k={win['k']}"
                + (f", alpha={win['measure']['alpha']:g}"
                   if measure == "asymmetric_cosine" else "")
                + f" (recall@10 {win['recall_at_10'] * 100:.2f}%,"
                  f" median {win['median_rank']:g})")
        return "\n".join(lines) + "\n"


def sweep(corpus: Corpus, measures: list[str], alphas: list[float],
          ks: list[int], sources: list[SourceRef], seed: int = 42,
          tuning_fraction: float = 0.10) -> SweepReport:
    """Evaluate every (measure, alpha, k, source) cell on the tuning fold.

    The similarity matrix for each (measure, alpha, source) is computed
    once and its per-k neighbor truncations are re-scored, so adding k
    values to the grid costs only top-k selection and scoring.
    """
    if not measures or not ks or not sources:
        raise ValueError("measures, ks and sources must be nonempty")
    measure_kinds = [Measure.parse(m).kind for m in measures]
    if "asymmetric_cosine" in measure_kinds and not alphas:
        raise ValueError("alphas must be nonempty when sweeping asymmetric_cosine")

    tuning_ids, test_ids = split_folds(corpus, tuning_fraction, seed)
    fold_recipes = sorted((r for r in corpus.recipes if r.id in set(tuning_ids)),
                          key=lambda r: r.id)
    if not fold_recipes:
        raise ValueError("tuning fold is empty")
    complement = corpus.subset(test_ids)

    matrix = build_matrix(complement)
    cells: list[EvalReport] = []
    for ref in sources:
        source = build_source(matrix, ref)
        for kind in measure_kinds:
            grid_alphas = alphas if kind == "asymmetric_cosine" else [Measure(kind).alpha]
            for alpha in grid_alphas:
                measure = Measure(kind, alpha)
                sim = similarity_matrix(source, measure)
                for k in ks:
                    started = time.perf_counter()
                    model = top_k_neighbors(sim, k, corpus.vocabulary.names)
                    trace = _evaluate_with_model(model, corpus.vocabulary,
                                                 fold_recipes, seed)
                    recall, mean_rank, median_rank, histogram = _aggregate(trace)
                    config = EvalConfig(measure=measure, k=k, source=ref,
                                        fold="tuning",
                                        tuning_fraction=tuning_fraction,
                                        seed=seed)
                    cells.append(EvalReport(
                        config=config.to_json_dict(),
                        evaluated=len(trace),
                        recall_at_10=recall,
                        mean_rank=mean_rank,
                        median_rank=median_rank,
                        histogram=histogram,
                        trace=trace,
                        wall_time_s=time.perf_counter() - started,
                    ))

    selected = _select_best(cells)
    return SweepReport(cells=cells, selected=selected)


def _select_best(cells: list[EvalReport]) -> list[dict]:
    groups: dict[tuple[str, str], list[EvalReport]] = {}
    for cell in cells:
        key = (cell.config["measure"]["kind"],
               SourceRef.from_json_dict(cell.config["source"]).label())
        groups.setdefault(key, []).append(cell)
    winners = []
    for key in sorted(groups):
        best = min(groups[key],
                   key=lambda c: (-c.recall_at_10, c.median_rank, c.config["k"],
                                  c.config["measure"]["alpha"]))
        winners.append({
            "measure": best.config["measure"],
            "source": best.config["source"],
            "k": best.config["k"],
            "recall_at_10": best.recall_at_10,
            "mean_rank": best.mean_rank,
            "median_rank": best.median_rank,
        })
    return winners
