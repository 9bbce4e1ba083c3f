import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from souschef.corpus import (
    Corpus,
    ParseError,
    PipelineConfig,
    PipelineError,
    RatingMatrix,
    RawRecipe,
    SchemaError,
    Vocabulary,
    build_matrix,
    corpus_stats,
    drop_rare_raw,
    filter_corpus,
    load_corpus_bundle,
    merge_by_substrings,
    normalize_name,
    normalize_names,
    parse_raw,
    run_pipeline,
    save_corpus_bundle,
)

from conftest import make_corpus


# ---------------------------------------------------------------------------
# parse_raw
# ---------------------------------------------------------------------------

class TestParseRaw:
    def test_single_recipe(self):
        recipes = parse_raw(b'[{"id":7,"cuisine":"italian","ingredients":["salt","olive oil"]}]')
        assert len(recipes) == 1
        assert recipes[0].id == 7
        assert recipes[0].cuisine == "italian"
        assert recipes[0].ingredients == ["salt", "olive oil"]

    def test_empty_array(self):
        assert parse_raw(b"[]") == []

    def test_order_preserved(self):
        recipes = parse_raw(
            b'[{"id":2,"cuisine":"a","ingredients":[]},{"id":1,"cuisine":"b","ingredients":[]}]')
        assert [r.id for r in recipes] == [2, 1]

    def test_malformed_json_reports_offset(self):
        with pytest.raises(ParseError) as exc:
            parse_raw(b'[{"id": 7, "cuisine"')
        assert exc.value.offset is not None
        assert str(exc.value.offset) in str(exc.value)

    def test_missing_key_names_recipe_index(self):
        doc = b'[{"id":1,"cuisine":"a","ingredients":[]},{"id":2,"cuisine":"b"}]'
        with pytest.raises(SchemaError, match="recipe 1"):
            parse_raw(doc)

    def test_not_an_array(self):
        with pytest.raises(SchemaError):
            parse_raw(b'{"id": 1}')

    def test_bad_types(self):
        with pytest.raises(SchemaError, match="recipe 0"):
            parse_raw(b'[{"id":"x","cuisine":"a","ingredients":[]}]')
        with pytest.raises(SchemaError, match="recipe 0"):
            parse_raw(b'[{"id":1,"cuisine":"a","ingredients":[1]}]')


# ---------------------------------------------------------------------------
# normalize_names
# ---------------------------------------------------------------------------

class TestNormalize:
    @pytest.mark.parametrize("raw,expected", [
        ("14 oz Tomatoes", "tomatoes"),
        (" olive oil", "olive oil"),
        ("garlic", "garlic"),
        ("1/2  cup  Sugar", "cup sugar"),
        ("half-and-half", "half-and-half"),
        ("Chicken Broth!", "chicken broth"),
    ])
    def test_examples(self, raw, expected):
        assert normalize_name(raw) == expected

    def test_empty_names_dropped_from_recipe(self):
        recipes = [RawRecipe(1, "a", ["14", "garlic", "1/2"])]
        out = normalize_names(recipes)
        assert out[0].ingredients == ["garlic"]

    def test_within_recipe_dedup(self):
        recipes = [RawRecipe(1, "a", ["Garlic", "garlic", "GARLIC!"])]
        assert normalize_names(recipes)[0].ingredients == ["garlic"]

    @given(st.text(max_size=40))
    def test_idempotent(self, name):
        once = normalize_name(name)
        assert normalize_name(once) == once


# ---------------------------------------------------------------------------
# drop_rare_raw
# ---------------------------------------------------------------------------

class TestDropRare:
    def _recipes(self, occurrences: int) -> list[RawRecipe]:
        # 'rare' appears in the first `occurrences` recipes, 'common' in all six
        return [RawRecipe(i, "a", ["common"] + (["rare"] if i < occurrences else []))
                for i in range(6)]

    def test_below_threshold_removed(self):
        out = drop_rare_raw(self._recipes(3), min_raw_count=4)
        assert all("rare" not in r.ingredients for r in out)

    def test_at_threshold_kept(self):
        out = drop_rare_raw(self._recipes(4), min_raw_count=4)
        assert sum("rare" in r.ingredients for r in out) == 4

    def test_zero_threshold_noop(self):
        recipes = self._recipes(2)
        assert drop_rare_raw(recipes, 0) is recipes


# ---------------------------------------------------------------------------
# merge_by_substrings
# ---------------------------------------------------------------------------

def _singleton_recipes(names: list[str]) -> list[RawRecipe]:
    return [RawRecipe(i, "x", [n]) for i, n in enumerate(names)]


class TestMerge:
    def test_brown_sugar_variants_merge(self):
        config = PipelineConfig(substring_ingredient_threshold=2,
                                substring_recipe_threshold=1000)
        names = ["light brown sugar", "dark brown sugar", "golden brown sugar"]
        out = merge_by_substrings(_singleton_recipes(names), config)
        assert {r.ingredients[0] for r in out} == {"brown sugar"}

    def test_rare_qualifier_dropped(self):
        config = PipelineConfig(substring_ingredient_threshold=2,
                                substring_recipe_threshold=1000)
        names = ["adzuki beans", "black beans", "green beans", "beans"]
        out = merge_by_substrings(_singleton_recipes(names), config)
        assert all(r.ingredients == ["beans"] for r in out)

    def test_two_dominant_tokens_keep_name(self):
        config = PipelineConfig(substring_ingredient_threshold=2,
                                substring_recipe_threshold=1000)
        names = ["chicken broth", "chicken stock", "chicken wings",
                 "beef broth", "vegetable broth"]
        out = merge_by_substrings(_singleton_recipes(names), config)
        assert out[0].ingredients == ["chicken broth"]

    def test_recipe_coverage_dominance(self):
        # "tortillas" occurs in only 2 names but covers 12 recipes > threshold.
        config = PipelineConfig(substring_ingredient_threshold=5,
                                substring_recipe_threshold=10)
        recipes = []
        rid = 0
        for _ in range(6):
            recipes.append(RawRecipe(rid, "x", ["corn tortillas"])); rid += 1
            recipes.append(RawRecipe(rid, "x", ["flour tortillas"])); rid += 1
        out = merge_by_substrings(recipes, config)
        assert all(r.ingredients == ["tortillas"] for r in out)

    def test_no_dominant_substring_keeps_name(self):
        config = PipelineConfig(substring_ingredient_threshold=30,
                                substring_recipe_threshold=1000)
        names = ["saffron threads", "saffron"]
        out = merge_by_substrings(_singleton_recipes(names), config)
        assert [r.ingredients[0] for r in out] == names

    def test_merged_memberships_union(self):
        config = PipelineConfig(substring_ingredient_threshold=1,
                                substring_recipe_threshold=1000)
        recipes = [
            RawRecipe(0, "x", ["light brown sugar", "flour"]),
            RawRecipe(1, "x", ["dark brown sugar", "flour"]),
            RawRecipe(2, "x", ["brown sugar"]),
        ]
        out = merge_by_substrings(recipes, config)
        members = [r.id for r in out if "brown sugar" in r.ingredients]
        assert members == [0, 1, 2]

    @given(st.lists(
        st.lists(
            st.lists(st.sampled_from(["red", "hot", "chili", "bean", "oil", "dry"]),
                     min_size=1, max_size=3).map(" ".join),
            min_size=1, max_size=5),
        min_size=1, max_size=8))
    @settings(max_examples=60, deadline=None)
    def test_never_increases_distinct_names(self, name_lists):
        recipes = [RawRecipe(i, "x", sorted(set(names)))
                   for i, names in enumerate(name_lists)]
        before = {n for r in recipes for n in r.ingredients}
        config = PipelineConfig(substring_ingredient_threshold=1,
                                substring_recipe_threshold=2)
        out = merge_by_substrings(recipes, config)
        after = {n for r in out for n in r.ingredients}
        assert len(after) <= len(before)


# ---------------------------------------------------------------------------
# filter_corpus
# ---------------------------------------------------------------------------

class TestFilterCorpus:
    def test_small_recipes_removed(self):
        config = PipelineConfig(min_final_count=1, stop_ingredients=(),
                                min_recipe_size=3)
        recipes = [
            RawRecipe(1, "a", ["a", "b", "c"]),
            RawRecipe(2, "a", ["a", "b"]),
        ]
        corpus = filter_corpus(recipes, config)
        assert [r.id for r in corpus.recipes] == [1]

    def test_stop_ingredients_removed(self):
        config = PipelineConfig(min_final_count=1, min_recipe_size=1)
        recipes = [RawRecipe(1, "a", ["salt", "water", "garlic", "onion", "oil"])]
        corpus = filter_corpus(recipes, config)
        assert "salt" not in corpus.vocabulary.names
        assert "water" not in corpus.vocabulary.names

    def test_ids_dense_lexicographic(self):
        config = PipelineConfig(min_final_count=1, stop_ingredients=(),
                                min_recipe_size=1)
        recipes = [RawRecipe(1, "a", ["zucchini", "apple", "mango"])]
        corpus = filter_corpus(recipes, config)
        assert corpus.vocabulary.names == ["apple", "mango", "zucchini"]

    def test_empty_corpus_raises(self):
        config = PipelineConfig(min_final_count=100, stop_ingredients=(),
                                min_recipe_size=3)
        with pytest.raises(PipelineError):
            filter_corpus([RawRecipe(1, "a", ["a", "b", "c"])], config)

    def test_cascade_reaches_fixed_point(self):
        # dropping 'rare' shrinks recipe 3 below min size, which in turn
        # drops 'c' below min_final_count, which shrinks recipe 2
        config = PipelineConfig(min_final_count=2, stop_ingredients=(),
                                min_recipe_size=3)
        recipes = [
            RawRecipe(1, "a", ["a", "b", "d"]),
            RawRecipe(2, "a", ["a", "b", "c", "d"]),
            RawRecipe(3, "a", ["a", "b", "c", "rare"]),
        ]
        corpus = filter_corpus(recipes, config)
        counts = corpus.vocabulary.counts
        sizes = [len(r.ingredient_ids) for r in corpus.recipes]
        assert min(counts) >= config.min_final_count
        assert min(sizes) >= config.min_recipe_size

    @given(st.lists(
        st.lists(st.sampled_from(list("abcdefgh")), min_size=1, max_size=6),
        min_size=1, max_size=20))
    @settings(max_examples=60, deadline=None)
    def test_fixed_point_invariants(self, raw_lists):
        recipes = [RawRecipe(i, "x", sorted(set(names)))
                   for i, names in enumerate(raw_lists)]
        config = PipelineConfig(min_final_count=2, stop_ingredients=(),
                                min_recipe_size=2)
        try:
            corpus = filter_corpus(recipes, config)
        except PipelineError:
            return
        assert min(corpus.vocabulary.counts) >= config.min_final_count
        assert min(len(r.ingredient_ids) for r in corpus.recipes) >= config.min_recipe_size
        # counts consistent with recipe sets
        recount = [0] * corpus.n
        for r in corpus.recipes:
            for i in r.ingredient_ids:
                recount[i] += 1
        assert recount == corpus.vocabulary.counts
        assert sum(corpus.vocabulary.counts) == sum(
            len(r.ingredient_ids) for r in corpus.recipes)


# ---------------------------------------------------------------------------
# build_matrix
# ---------------------------------------------------------------------------

class TestRatingMatrix:
    def test_column_counts(self):
        corpus = make_corpus([["a", "b"], ["b", "c"]])
        matrix = build_matrix(corpus)
        assert matrix.m == 2 and matrix.n == 3
        assert matrix.counts().tolist() == [1, 2, 1]

    def test_total_count_identity(self):
        corpus = make_corpus([["a", "b", "c"], ["b", "c"], ["c", "d", "e"]])
        matrix = build_matrix(corpus)
        total_slots = sum(len(r.ingredient_ids) for r in corpus.recipes)
        assert int(matrix.counts().sum()) == total_slots

    def test_transpose_consistency(self):
        rng = np.random.default_rng(3)
        dense = (rng.random((12, 7)) < 0.4).astype(int)
        matrix = RatingMatrix.from_rows([np.flatnonzero(r) for r in dense], 7)
        for _ in range(50):
            u = int(rng.integers(12))
            i = int(rng.integers(7))
            assert (i in matrix.row(u)) == (u in matrix.col(i)) == bool(dense[u, i])

    def test_rejects_nonbinary(self):
        import scipy.sparse as sp
        with pytest.raises(ValueError):
            RatingMatrix(sp.csr_matrix(np.array([[2, 0], [0, 1]])))

    def test_cooccurrence_counts(self):
        corpus = make_corpus([["a", "b"], ["b", "c"], ["a", "b", "c"]])
        gram = build_matrix(corpus).cooccurrence()
        # names sorted: a, b, c
        assert gram[0, 0] == 2 and gram[1, 1] == 3 and gram[2, 2] == 2
        assert gram[0, 1] == 2 and gram[0, 2] == 1 and gram[1, 2] == 2


# ---------------------------------------------------------------------------
# corpus_stats
# ---------------------------------------------------------------------------

class TestStats:
    def test_constant_lengths_zero_moments(self):
        corpus = make_corpus([["a", "b", "c"], ["a", "b", "d"], ["b", "c", "d"]])
        report = corpus_stats(corpus)
        assert report.skewness == 0.0
        assert report.excess_kurtosis == 0.0
        assert report.min_length == report.max_length == 3

    def test_moments_match_hand_formula(self):
        # lengths 3,4,5,9: oracle values from the raw moment formulas
        # g1 = m3 / m2^1.5, g2 = m4 / m2^2 - 3
        corpus = make_corpus([
            ["a", "b", "c"],
            ["a", "b", "c", "d"],
            ["a", "b", "c", "d", "e"],
            ["a", "b", "c", "d", "e", "f", "g", "h", "i"],
        ])
        report = corpus_stats(corpus)
        assert report.mean_length == pytest.approx(5.25)
        assert report.median_length == pytest.approx(4.5)
        assert report.skewness == pytest.approx(0.8331504071506617, abs=1e-12)
        assert report.excess_kurtosis == pytest.approx(-0.9020177093917838, abs=1e-12)

    def test_histogram_sums_to_recipe_count(self, baking_corpus):
        report = corpus_stats(baking_corpus)
        assert sum(report.length_histogram.values()) == baking_corpus.m

    def test_top_and_cuisines(self):
        corpus = make_corpus([["a", "b", "c"], ["a", "b", "d"], ["a", "c", "d"]],
                             cuisines=["x", "x", "y"])
        report = corpus_stats(corpus, top_n=2)
        assert report.top_ingredients[0] == ("a", 3)
        assert report.cuisine_distribution == {"x": 2, "y": 1}

    def test_json_and_text_render(self, baking_corpus):
        report = corpus_stats(baking_corpus)
        doc = report.to_json_dict()
        assert doc["recipe_count"] == baking_corpus.m
        assert "top ingredients" in report.to_text()


# ---------------------------------------------------------------------------
# pipeline orchestration + corpus bundle
# ---------------------------------------------------------------------------

TINY = json.dumps([
    {"id": 1, "cuisine": "a", "ingredients": ["Salt", "olive oil", "garlic", "tomatoes"]},
    {"id": 2, "cuisine": "a", "ingredients": ["olive oil", "garlic", "onions", "tomatoes"]},
    {"id": 3, "cuisine": "b", "ingredients": ["garlic", "onions", "butter", "tomatoes"]},
    {"id": 4, "cuisine": "b", "ingredients": ["butter", "flour", "milk", "sugar"]},
    {"id": 5, "cuisine": "b", "ingredients": ["butter", "flour", "eggs", "sugar"]},
    {"id": 6, "cuisine": "a", "ingredients": ["eggs", "flour", "milk", "sugar"]},
]).encode()

TINY_CONFIG = PipelineConfig(min_raw_count=1, substring_ingredient_threshold=99,
                             substring_recipe_threshold=99, min_final_count=1,
                             min_recipe_size=3)


class TestPipelineAndBundle:
    def test_stage_counts_recorded(self):
        corpus, stages = run_pipeline(TINY, TINY_CONFIG)
        assert [s.stage for s in stages] == [
            "parsed", "normalized", "rare_dropped", "merged", "filtered"]
        assert stages[-1].recipes == corpus.m
        assert "salt" not in corpus.vocabulary.names

    def test_bundle_round_trip(self, tmp_path):
        corpus, stages = run_pipeline(TINY, TINY_CONFIG)
        save_corpus_bundle(corpus, tmp_path / "bundle", TINY_CONFIG, stages, "deadbeef")
        loaded, pipeline = load_corpus_bundle(tmp_path / "bundle")
        assert loaded.vocabulary.names == corpus.vocabulary.names
        assert loaded.vocabulary.counts == corpus.vocabulary.counts
        assert loaded.recipes == corpus.recipes
        assert pipeline["input_sha256"] == "deadbeef"
        assert pipeline["config"]["min_final_count"] == 1

    def test_bundle_rerun_byte_identical(self, tmp_path):
        for out in ("one", "two"):
            corpus, stages = run_pipeline(TINY, TINY_CONFIG)
            save_corpus_bundle(corpus, tmp_path / out, TINY_CONFIG, stages, "cafe")
        for fname in ("vocabulary.json", "recipes.jsonl", "pipeline.json"):
            assert (tmp_path / "one" / fname).read_bytes() == \
                (tmp_path / "two" / fname).read_bytes()

    def test_missing_bundle_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_corpus_bundle(tmp_path / "nope")
