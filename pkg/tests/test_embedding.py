import numpy as np
import pytest

from souschef.corpus import RatingMatrix
from souschef.embedding import EmbeddingConfig, IngredientEmbedding, pca_embed

from conftest import matrix_from_columns, random_binary_matrix
from oracles import oracle_scores


class TestPcaEmbed:
    def test_uncentered_full_rank_preserves_cooccurrence(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m = int(rng.integers(4, 30))
            n = int(rng.integers(2, 10))
            matrix = random_binary_matrix(rng, m, n)
            emb = pca_embed(matrix, EmbeddingConfig(center=False))
            gram = emb.gram()
            counts = matrix.cooccurrence()
            assert np.abs(gram - counts).max() <= 1e-6 * m

    def test_centered_matches_svd_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            m = int(rng.integers(4, 25))
            n = int(rng.integers(2, 9))
            matrix = random_binary_matrix(rng, m, n)
            emb = pca_embed(matrix, EmbeddingConfig(center=True))
            expected = oracle_scores(matrix, center=True)
            assert np.abs(emb.gram() - expected @ expected.T).max() <= 1e-9

    def test_two_ingredient_example(self):
        matrix = matrix_from_columns([[0, 1], [1, 2]], m=3)
        emb = pca_embed(matrix, EmbeddingConfig(center=True))
        expected = oracle_scores(matrix, center=True)
        assert np.abs(emb.gram() - expected @ expected.T).max() <= 1e-9
        # centering collapses two opposite ingredients onto one axis
        assert emb.rank_deficient
        assert emb.d == 1

    def test_explained_variance_nonincreasing_and_total(self):
        rng = np.random.default_rng(13)
        matrix = random_binary_matrix(rng, 40, 8)
        emb = pca_embed(matrix, EmbeddingConfig(center=True))
        ev = emb.explained_variance
        assert np.all(np.diff(ev) <= 1e-12)
        assert np.all(ev >= 0)
        expected = oracle_scores(matrix, center=True)
        total = np.trace(expected @ expected.T) / (matrix.n - 1)
        assert np.isclose(ev.sum(), total, atol=1e-9)

    def test_truncation_keeps_top_components(self):
        rng = np.random.default_rng(14)
        matrix = random_binary_matrix(rng, 60, 9)
        full = pca_embed(matrix, EmbeddingConfig(center=True))
        part = pca_embed(matrix, EmbeddingConfig(d=3, center=True))
        assert part.d == 3
        assert np.allclose(part.explained_variance, full.explained_variance[:3])
        # same leading subspace: compare gram restricted to 3 components
        lead = full.vectors[:, :3]
        assert np.abs(part.gram() - lead @ lead.T).max() <= 1e-9

    def test_rank_deficiency_flag(self):
        # two identical columns: centered rank is 1 although n = 2
        matrix = matrix_from_columns([[0, 1], [0, 1]], m=3)
        emb = pca_embed(matrix, EmbeddingConfig(center=False))
        assert emb.rank_deficient
        assert emb.d == 1

    def test_zero_matrix_rejected(self):
        matrix = RatingMatrix.from_rows([[], [], []], 3)
        with pytest.raises(ValueError):
            pca_embed(matrix, EmbeddingConfig())

    def test_bad_component_count(self):
        matrix = matrix_from_columns([[0], [1]], m=2)
        with pytest.raises(ValueError):
            pca_embed(matrix, EmbeddingConfig(d=0))
        with pytest.raises(ValueError):
            pca_embed(matrix, EmbeddingConfig(d=3))

    def test_sign_free_determinism(self):
        rng = np.random.default_rng(15)
        matrix = random_binary_matrix(rng, 20, 6)
        a = pca_embed(matrix, EmbeddingConfig(center=True))
        b = pca_embed(matrix, EmbeddingConfig(center=True))
        assert np.array_equal(a.gram(), b.gram())
        assert np.array_equal(np.abs(a.vectors), np.abs(b.vectors))

    def test_feature_means(self):
        matrix = matrix_from_columns([[0, 1], [1, 2]], m=3)
        emb = pca_embed(matrix, EmbeddingConfig(center=True))
        assert emb.feature_means.tolist() == [0.5, 1.0, 0.5]

    def test_json_round_trip(self):
        rng = np.random.default_rng(16)
        matrix = random_binary_matrix(rng, 15, 5)
        emb = pca_embed(matrix, EmbeddingConfig(center=True))
        clone = IngredientEmbedding.from_json_dict(emb.to_json_dict())
        assert np.array_equal(clone.vectors, emb.vectors)
        assert np.array_equal(clone.feature_means, emb.feature_means)
        assert np.array_equal(clone.explained_variance, emb.explained_variance)
        assert clone.center == emb.center
        assert clone.rank_deficient == emb.rank_deficient
