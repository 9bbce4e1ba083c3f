"""Recipe corpus ingestion, cleaning, and the binary rating matrix.

The pipeline turns a raw recipe JSON dump into a compact Corpus:

    parse_raw -> normalize_names -> drop_rare_raw -> merge_by_substrings
              -> filter_corpus -> build_matrix

Each stage is a pure function over lists of RawRecipe so stages can be
tested (and their shrinkage inspected) independently. ``run_pipeline``
chains them and records per-stage counts for provenance.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import statistics
from collections import Counter
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import stats as sp_stats

from .jsonio import dump_json, load_json

log = logging.getLogger(__name__)


class ParseError(ValueError):
    """Raised when the input document is not valid JSON."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class SchemaError(ValueError):
    """Raised when a recipe record is missing keys or has wrong types."""


class PipelineError(RuntimeError):
    """Raised when cleaning/filtering leaves no usable corpus."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass
class RawRecipe:
    """A recipe as it appears in the input dump: id, cuisine, name list."""

    id: int
    cuisine: str
    ingredients: list[str]


@dataclass(frozen=True)
class PipelineConfig:
    """Thresholds steering the cleaning pipeline.

    ``min_raw_count``/``min_final_count`` are inclusive lower bounds on the
    number of recipes an ingredient must appear in to survive (so the
    defaults drop ingredients seen in <= 3 and <= 250 recipes respectively).
    """

    min_raw_count: int = 4
    substring_ingredient_threshold: int = 30
    substring_recipe_threshold: int = 1000
    min_final_count: int = 251
    stop_ingredients: tuple[str, ...] = ("salt", "water")
    min_recipe_size: int = 3

    def __post_init__(self):
        for name in ("min_raw_count", "substring_ingredient_threshold",
                     "substring_recipe_threshold", "min_final_count",
                     "min_recipe_size"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        object.__setattr__(self, "stop_ingredients", tuple(self.stop_ingredients))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stop_ingredients"] = list(self.stop_ingredients)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return cls(**d)


@dataclass(frozen=True)
class Recipe:
    """A cleaned recipe: dense ingredient ids, sorted ascending."""

    id: int
    cuisine: str
    ingredient_ids: tuple[int, ...]


@dataclass
class Vocabulary:
    """Ingredient id <-> canonical name mapping with per-ingredient recipe counts."""

    names: list[str]
    counts: list[int]
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.names) != len(self.counts):
            raise ValueError("names and counts length mismatch")
        if len(set(self.names)) != len(self.names):
            raise ValueError("ingredient names must be unique")
        self._index = {name: i for i, name in enumerate(self.names)}

    def __len__(self) -> int:
        return len(self.names)

    def id_of(self, name: str) -> int | None:
        i = self._index.get(name)
        if i is None and "_" in name:
            # Underscores are a display convention in some exports; accept them.
            i = self._index.get(name.replace("_", " "))
        return i

    def resolve(self, names: Iterable[str]) -> tuple[list[int], list[str]]:
        """Map names to ids, returning (resolved ids, unknown names).

        Duplicate names resolve to one id. Order of first appearance is kept.
        """
        ids: list[int] = []
        unknown: list[str] = []
        seen: set[int] = set()
        for name in names:
            i = self.id_of(name)
            if i is None:
                unknown.append(name)
            elif i not in seen:
                seen.add(i)
                ids.append(i)
        return ids, unknown


@dataclass
class Corpus:
    """Cleaned recipes plus their ingredient vocabulary."""

    recipes: list[Recipe]
    vocabulary: Vocabulary

    @property
    def m(self) -> int:
        return len(self.recipes)

    @property
    def n(self) -> int:
        return len(self.vocabulary)

    def subset(self, recipe_ids: Iterable[int]) -> "Corpus":
        """Corpus restricted to the given recipe ids, same vocabulary.

        Counts are NOT recomputed: the vocabulary (and its dense id space)
        is shared so models built on a subset stay comparable.
        """
        wanted = set(recipe_ids)
        kept = [r for r in self.recipes if r.id in wanted]
        return Corpus(kept, self.vocabulary)


class RatingMatrix:
    """Sparse binary recipe x ingredient matrix with row and column views.

    Entry (u, i) is 1 iff ingredient i occurs in recipe u. Rows and columns
    are kept as CSR/CSC twins so both per-recipe and per-ingredient access
    are cheap; the two views are transposes of each other by construction.
    """

    def __init__(self, csr: sp.csr_matrix):
        csr = csr.tocsr().astype(np.int8)
        csr.sum_duplicates()
        csr.sort_indices()
        if csr.nnz and (csr.data != 1).any():
            raise ValueError("rating matrix entries must be binary")
        self._csr = csr
        self._csc = csr.tocsc()
        self._csc.sort_indices()

    @classmethod
    def from_rows(cls, rows: Sequence[Iterable[int]], n: int) -> "RatingMatrix":
        indptr = [0]
        indices: list[int] = []
        for row in rows:
            ids = sorted(set(row))
            if ids and (ids[0] < 0 or ids[-1] >= n):
                raise ValueError("ingredient id out of range")
            indices.extend(ids)
            indptr.append(len(indices))
        data = np.ones(len(indices), dtype=np.int8)
        csr = sp.csr_matrix(
            (data, np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int64)),
            shape=(len(rows), n),
        )
        return cls(csr)

    @property
    def m(self) -> int:
        return self._csr.shape[0]

    @property
    def n(self) -> int:
        return self._csr.shape[1]

    def row(self, u: int) -> np.ndarray:
        """Sorted ingredient ids of recipe u."""
        return self._csr.indices[self._csr.indptr[u]:self._csr.indptr[u + 1]]

    def col(self, i: int) -> np.ndarray:
        """Sorted recipe indices containing ingredient i."""
        return self._csc.indices[self._csc.indptr[i]:self._csc.indptr[i + 1]]

    def counts(self) -> np.ndarray:
        """Per-ingredient recipe counts (column sums)."""
        return np.asarray(self._csr.sum(axis=0)).ravel().astype(np.int64)

    def row_sizes(self) -> np.ndarray:
        """Per-recipe ingredient counts (row sums)."""
        return np.diff(self._csr.indptr).astype(np.int64)

    def csr(self) -> sp.csr_matrix:
        return self._csr

    def cooccurrence(self) -> np.ndarray:
        """Dense n x n co-occurrence counts: entry (i, j) = |U(i) & U(j)|."""
        csc = self._csc.astype(np.int64)
        return np.asarray((csc.T @ csc).todense())


@dataclass
class StatsReport:
    """Descriptive statistics of a cleaned corpus."""

    recipe_count: int
    ingredient_count: int
    frequency: list[tuple[str, int]]          # all ingredients, count desc then name
    length_histogram: dict[int, int]
    min_length: int
    max_length: int
    mean_length: float
    median_length: float
    skewness: float
    excess_kurtosis: float
    top_ingredients: list[tuple[str, int]]
    cuisine_distribution: dict[str, int]

    def to_json_dict(self) -> dict:
        return {
            "recipe_count": self.recipe_count,
            "ingredient_count": self.ingredient_count,
            "frequency": [{"name": n, "count": c} for n, c in self.frequency],
            "length_histogram": {str(k): v for k, v in sorted(self.length_histogram.items())},
            "min_length": self.min_length,
            "max_length": self.max_length,
            "mean_length": self.mean_length,
            "median_length": self.median_length,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
            "top_ingredients": [{"name": n, "count": c} for n, c in self.top_ingredients],
            "cuisine_distribution": dict(sorted(self.cuisine_distribution.items())),
        }

    def to_text(self) -> str:
        lines = [
            f"recipes            {self.recipe_count}",
            f"ingredients        {self.ingredient_count}",
            f"recipe length      min {self.min_length}  max {self.max_length}  "
            f"mean {self.mean_length:.2f}  median {self.median_length:.1f}",
            f"length skewness    {self.skewness:.3f}",
            f"excess kurtosis    {self.excess_kurtosis:.3f}",
            "",
            "top ingredients:",
        ]
        for name, count in self.top_ingredients:
            lines.append(f"  {name:<32s} {count:>7d}")
        lines.append("")
        lines.append("cuisines:")
        for cuisine, count in sorted(self.cuisine_distribution.items(),
                                     key=lambda kv: (-kv[1], kv[0])):
            lines.append(f"  {cuisine:<32s} {count:>7d}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Pipeline stages
# ---------------------------------------------------------------------------

def parse_raw(data: bytes | str) -> list[RawRecipe]:
    """Parse the raw JSON document into RawRecipe records, order preserved."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON at offset {e.pos}: {e.msg}", offset=e.pos) from e
    if not isinstance(doc, list):
        raise SchemaError("expected a JSON array of recipe objects")
    recipes: list[RawRecipe] = []
    for idx, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise SchemaError(f"recipe {idx}: expected an object")
        for key in ("id", "cuisine", "ingredients"):
            if key not in entry:
                raise SchemaError(f"recipe {idx}: missing key {key!r}")
        rid, cuisine, ingredients = entry["id"], entry["cuisine"], entry["ingredients"]
        if not isinstance(rid, int) or isinstance(rid, bool):
            raise SchemaError(f"recipe {idx}: id must be an integer")
        if not isinstance(cuisine, str):
            raise SchemaError(f"recipe {idx}: cuisine must be a string")
        if not isinstance(ingredients, list) or not all(isinstance(s, str) for s in ingredients):
            raise SchemaError(f"recipe {idx}: ingredients must be a list of strings")
        recipes.append(RawRecipe(rid, cuisine, list(ingredients)))
    return recipes


_DISALLOWED = re.compile(r"[^a-z \-]+")


def normalize_name(name: str) -> str:
    """Canonicalize one ingredient name.

    Lowercase, strip everything outside [a-z], space and hyphen (which
    removes digit runs like "14"), drop unit leftovers ("oz") and tokens
    left without any letter, and collapse whitespace.
    """
    cleaned = _DISALLOWED.sub("", name.lower())
    tokens = [t for t in cleaned.split()
              if t != "oz" and any(c.isalpha() for c in t)]
    return " ".join(tokens)


def normalize_names(recipes: list[RawRecipe]) -> list[RawRecipe]:
    """Normalize every ingredient name; dedupe within each recipe.

    Names that normalize to the empty string are dropped from the recipe
    (logged). Idempotent: a second pass is a no-op.
    """
    out: list[RawRecipe] = []
    for r in recipes:
        seen: set[str] = set()
        kept: list[str] = []
        for raw in r.ingredients:
            name = normalize_name(raw)
            if not name:
                log.debug("recipe %s: dropping ingredient %r (normalizes to empty)", r.id, raw)
                continue
            if name not in seen:
                seen.add(name)
                kept.append(name)
        out.append(RawRecipe(r.id, r.cuisine, kept))
    return out


def _name_recipe_counts(recipes: list[RawRecipe]) -> Counter:
    counts: Counter = Counter()
    for r in recipes:
        counts.update(set(r.ingredients))
    return counts


def drop_rare_raw(recipes: list[RawRecipe], min_raw_count: int) -> list[RawRecipe]:
    """Drop ingredient names appearing in fewer than min_raw_count recipes."""
    if min_raw_count <= 0:
        return recipes
    counts = _name_recipe_counts(recipes)
    keep = {name for name, c in counts.items() if c >= min_raw_count}
    return [RawRecipe(r.id, r.cuisine, [n for n in r.ingredients if n in keep])
            for r in recipes]


def _token_ngrams(tokens: tuple[str, ...]) -> dict[int, set[tuple[str, ...]]]:
    """All contiguous token subsequences of ``tokens``, grouped by length."""
    by_len: dict[int, set[tuple[str, ...]]] = {}
    size = len(tokens)
    for length in range(1, size + 1):
        by_len[length] = {tokens[s:s + length] for s in range(size - length + 1)}
    return by_len


def merge_by_substrings(recipes: list[RawRecipe], config: PipelineConfig) -> list[RawRecipe]:
    """Merge ingredient variants by keeping only dominant name substrings.

    1. Candidate substrings: for every pair of distinct names sharing at
       least one token, all of their longest common contiguous token
       subsequences.
    2. A candidate is dominant when it occurs in more than
       ``substring_ingredient_threshold`` distinct names OR in names that
       together cover more than ``substring_recipe_threshold`` recipes.
    3. Each name is rewritten by deleting every token not covered by some
       dominant substring occurrence; a name whose tokens would all be
       deleted is kept unchanged.
    4. Names that rewrite to the same string are merged (recipe memberships
       union automatically at the recipe level).
    """
    name_set: set[str] = set()
    for r in recipes:
        name_set.update(r.ingredients)
    names = sorted(name_set)
    if not names:
        return recipes
    tokens_of = {name: tuple(name.split()) for name in names}
    ngrams_of = {name: _token_ngrams(tokens_of[name]) for name in names}

    # Inverted index: token -> indices of names containing it.
    token_names: dict[str, list[int]] = {}
    for idx, name in enumerate(names):
        for tok in set(tokens_of[name]):
            token_names.setdefault(tok, []).append(idx)

    # Step 1: longest common contiguous token subsequences per pair.
    candidates: set[tuple[str, ...]] = set()
    n_names = len(names)
    visited: set[int] = set()
    for members in token_names.values():
        if len(members) < 2:
            continue
        for ai in range(len(members) - 1):
            a = members[ai]
            grams_a = ngrams_of[names[a]]
            len_a = len(tokens_of[names[a]])
            for bi in range(ai + 1, len(members)):
                b = members[bi]
                key = a * n_names + b
                if key in visited:
                    continue
                visited.add(key)
                grams_b = ngrams_of[names[b]]
                for length in range(min(len_a, len(tokens_of[names[b]])), 0, -1):
                    common = grams_a[length] & grams_b[length]
                    if common:
                        candidates.update(common)
                        break

    # Step 2a: dominance by number of distinct names containing the substring.
    ngram_name_count: Counter = Counter()
    for name in names:
        for by_len in ngrams_of[name].values():
            for g in by_len:
                if g in candidates:
                    ngram_name_count[g] += 1
    dominant = {g for g in candidates
                if ngram_name_count[g] > config.substring_ingredient_threshold}

    # Step 2b: dominance by recipe coverage, only needed for the rest.
    undecided = candidates - dominant
    if undecided:
        name_undecided: dict[str, list[tuple[str, ...]]] = {}
        for name in names:
            grams = [g for by_len in ngrams_of[name].values() for g in by_len if g in undecided]
            if grams:
                name_undecided[name] = grams
        coverage: Counter = Counter()
        for r in recipes:
            present: set[tuple[str, ...]] = set()
            for name in r.ingredients:
                grams = name_undecided.get(name)
                if grams:
                    present.update(grams)
            coverage.update(present)
        dominant.update(g for g in undecided
                        if coverage[g] > config.substring_recipe_threshold)

    # Steps 3 and 4: rewrite names to their dominant-covered tokens.
    rewritten: dict[str, str] = {}
    for name in names:
        toks = tokens_of[name]
        covered = [False] * len(toks)
        for by_len in ngrams_of[name].values():
            for g in by_len:
                if g not in dominant:
                    continue
                glen = len(g)
                for start in range(len(toks) - glen + 1):
                    if tuple(toks[start:start + glen]) == g:
                        for p in range(start, start + glen):
                            covered[p] = True
        kept = [t for t, c in zip(toks, covered) if c]
        rewritten[name] = " ".join(kept) if kept else name

    out: list[RawRecipe] = []
    for r in recipes:
        seen: set[str] = set()
        merged: list[str] = []
        for name in r.ingredients:
            new = rewritten[name]
            if new not in seen:
                seen.add(new)
                merged.append(new)
        out.append(RawRecipe(r.id, r.cuisine, merged))
    return out


def filter_corpus(recipes: list[RawRecipe], config: PipelineConfig) -> Corpus:
    """Apply final frequency/stop-list/recipe-size filters and build the Corpus.

    Filters interact (dropping recipes lowers ingredient counts and vice
    versa), so they are re-applied until a fixed point where every
    ingredient appears in >= min_final_count recipes and every recipe keeps
    >= min_recipe_size distinct ingredients. Ids are then assigned densely
    in lexicographic name order.
    """
    stop = set(config.stop_ingredients)
    counts = _name_recipe_counts(recipes)
    keep = {name for name, c in counts.items()
            if c >= config.min_final_count and name not in stop}
    current = [(r.id, r.cuisine, [n for n in r.ingredients if n in keep])
               for r in recipes]
    while True:
        survivors = [(rid, cz, ings) for rid, cz, ings in current
                     if len(ings) >= config.min_recipe_size]
        counts = Counter()
        for _, _, ings in survivors:
            counts.update(ings)
        keep = {name for name, c in counts.items() if c >= config.min_final_count}
        filtered = [(rid, cz, [n for n in ings if n in keep])
                    for rid, cz, ings in survivors]
        if filtered == current:
            break
        current = filtered

    if not current or not keep:
        raise PipelineError("pipeline produced an empty corpus")

    names = sorted(keep)
    index = {name: i for i, name in enumerate(names)}
    final_counts = [0] * len(names)
    recipes_out: list[Recipe] = []
    for rid, cuisine, ings in current:
        ids = tuple(sorted(index[n] for n in ings))
        recipes_out.append(Recipe(rid, cuisine, ids))
        for i in ids:
            final_counts[i] += 1
    return Corpus(recipes_out, Vocabulary(names, final_counts))


def build_matrix(corpus: Corpus) -> RatingMatrix:
    """Indicator matrix over the corpus: r_ui = 1 iff ingredient i in recipe u."""
    return RatingMatrix.from_rows(
        [r.ingredient_ids for r in corpus.recipes], corpus.n)


def corpus_stats(corpus: Corpus, top_n: int = 10) -> StatsReport:
    """Descriptive statistics of the corpus recipe-length distribution.

    Skewness is sample Fisher skewness and kurtosis is sample excess
    kurtosis; both are defined as 0 for a zero-variance sample.
    """
    lengths = np.array([len(r.ingredient_ids) for r in corpus.recipes], dtype=np.int64)
    if lengths.size == 0:
        raise PipelineError("cannot compute statistics of an empty corpus")
    hist = Counter(int(x) for x in lengths)
    if np.ptp(lengths) == 0:
        skew, kurt = 0.0, 0.0
    else:
        skew = float(sp_stats.skew(lengths))
        kurt = float(sp_stats.kurtosis(lengths))  # Fisher: excess kurtosis
    freq = sorted(zip(corpus.vocabulary.names, corpus.vocabulary.counts),
                  key=lambda kv: (-kv[1], kv[0]))
    cuisines = Counter(r.cuisine for r in corpus.recipes)
    return StatsReport(
        recipe_count=corpus.m,
        ingredient_count=corpus.n,
        frequency=freq,
        length_histogram=dict(hist),
        min_length=int(lengths.min()),
        max_length=int(lengths.max()),
        mean_length=float(lengths.mean()),
        median_length=float(statistics.median(lengths.tolist())),
        skewness=skew,
        excess_kurtosis=kurt,
        top_ingredients=freq[:top_n],
        cuisine_distribution=dict(cuisines),
    )


# ---------------------------------------------------------------------------
# Orchestration and the corpus bundle
# ---------------------------------------------------------------------------

@dataclass
class StageCount:
    stage: str
    recipes: int
    ingredients: int


def _counts(recipes: list[RawRecipe]) -> tuple[int, int]:
    names = set()
    for r in recipes:
        names.update(r.ingredients)
    return len(recipes), len(names)


def run_pipeline(data: bytes | str,
                 config: PipelineConfig | None = None) -> tuple[Corpus, list[StageCount]]:
    """Run the full cleaning pipeline, returning the corpus and stage counts."""
    config = config or PipelineConfig()
    stages: list[StageCount] = []

    def record(stage: str, recipes: list[RawRecipe]):
        m, n = _counts(recipes)
        stages.append(StageCount(stage, m, n))

    recipes = parse_raw(data)
    record("parsed", recipes)
    recipes = normalize_names(recipes)
    record("normalized", recipes)
    recipes = drop_rare_raw(recipes, config.min_raw_count)
    record("rare_dropped", recipes)
    recipes = merge_by_substrings(recipes, config)
    record("merged", recipes)
    corpus = filter_corpus(recipes, config)
    stages.append(StageCount("filtered", corpus.m, corpus.n))
    return corpus, stages


def save_corpus_bundle(corpus: Corpus, out_dir: str | Path,
                       config: PipelineConfig,
                       stages: list[StageCount] | None = None,
                       input_sha256: str | None = None) -> None:
    """Write vocabulary.json, recipes.jsonl, pipeline.json into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vocab = [{"id": i, "name": name, "count": count}
             for i, (name, count) in enumerate(zip(corpus.vocabulary.names,
                                                   corpus.vocabulary.counts))]
    dump_json({"ingredients": vocab}, out / "vocabulary.json")
    with open(out / "recipes.jsonl", "w", encoding="utf-8") as fh:
        for r in corpus.recipes:
            fh.write(json.dumps({"id": r.id, "cuisine": r.cuisine,
                                 "ingredient_ids": list(r.ingredient_ids)},
                                sort_keys=True) + "\n")
    pipeline = {
        "config": config.to_dict(),
        "input_sha256": input_sha256,
        "stages": [asdict(s) for s in (stages or [])],
    }
    dump_json(pipeline, out / "pipeline.json")


def load_corpus_bundle(path: str | Path) -> tuple[Corpus, dict]:
    """Load a corpus bundle directory; returns (corpus, pipeline provenance)."""
    root = Path(path)
    for fname in ("vocabulary.json", "recipes.jsonl", "pipeline.json"):
        if not (root / fname).is_file():
            raise FileNotFoundError(f"corpus bundle is missing {fname}: {root}")
    vocab_doc = load_json(root / "vocabulary.json")
    entries = sorted(vocab_doc["ingredients"], key=lambda e: e["id"])
    if [e["id"] for e in entries] != list(range(len(entries))):
        raise SchemaError("vocabulary ids must be dense 0..n-1")
    vocabulary = Vocabulary([e["name"] for e in entries],
                            [e["count"] for e in entries])
    recipes: list[Recipe] = []
    with open(root / "recipes.jsonl", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            if not line.strip():
                continue
            doc = json.loads(line)
            try:
                recipes.append(Recipe(doc["id"], doc["cuisine"],
                                      tuple(sorted(doc["ingredient_ids"]))))
            except KeyError as e:
                raise SchemaError(f"recipes.jsonl line {line_no}: missing {e}") from e
    pipeline = load_json(root / "pipeline.json")
    return Corpus(recipes, vocabulary), pipeline


def corpus_bundle_sha256(path: str | Path) -> str:
    """Content hash tying a model bundle to the corpus it was built from."""
    h = hashlib.sha256()
    root = Path(path)
    for fname in ("vocabulary.json", "recipes.jsonl"):
        h.update((root / fname).read_bytes())
    return h.hexdigest()


def stats_to_files(report: StatsReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_json(report.to_json_dict(), out / "stats.json")
    (out / "stats.txt").write_text(report.to_text(), encoding="utf-8")
