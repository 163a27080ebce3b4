import numpy as np
import pytest

from bevnav.labels import (
    Vocabulary,
    VocabularyError,
    load_label_embeddings,
    pixel_label_map,
    similarity,
)


class TestVocabulary:
    def test_basic_lookup(self):
        vocab = Vocabulary(("floor", "table", "chair"), "category")
        assert len(vocab) == 3
        assert vocab.index("table") == 1
        assert "chair" in vocab
        assert "sofa" not in vocab

    def test_rejects_empty(self):
        with pytest.raises(VocabularyError):
            Vocabulary((), "category")

    def test_rejects_duplicates(self):
        with pytest.raises(VocabularyError):
            Vocabulary(("a", "b", "a"), "category")

    def test_rejects_unknown_kind(self):
        with pytest.raises(VocabularyError):
            Vocabulary(("a",), "shape")

    def test_unknown_label_raises(self):
        vocab = Vocabulary(("none", "red"), "color")
        with pytest.raises(VocabularyError):
            vocab.index("blue")


class TestLoadLabelEmbeddings:
    VOCAB = Vocabulary(("floor", "table"), "category")

    def test_rows_are_unit_normalized(self):
        emb = load_label_embeddings(self.VOCAB, np.array([[3.0, 4.0], [0.0, 2.0]]))
        assert np.allclose(np.linalg.norm(emb.matrix, axis=1), 1.0)
        assert np.allclose(emb.matrix[0], [0.6, 0.8])

    def test_rejects_wrong_row_count(self):
        with pytest.raises(VocabularyError):
            load_label_embeddings(self.VOCAB, np.ones((3, 4)))

    def test_rejects_non_finite(self):
        with pytest.raises(VocabularyError):
            load_label_embeddings(self.VOCAB, np.array([[1.0, np.nan], [1.0, 0.0]]))

    def test_rejects_zero_row(self):
        with pytest.raises(VocabularyError) as err:
            load_label_embeddings(self.VOCAB, np.array([[1.0, 0.0], [0.0, 0.0]]))
        assert "table" in str(err.value)


class TestSimilarity:
    def test_dot_products_against_normalized_rows(self):
        vocab = Vocabulary(("floor", "table"), "category")
        emb = load_label_embeddings(vocab, np.eye(2))
        cells = np.array([[[0.2, 0.9]]])
        scores = similarity(cells, emb)
        assert scores.shape == (1, 1, 2)
        assert np.allclose(scores[0, 0], [0.2, 0.9])

    def test_rejects_dim_mismatch(self):
        vocab = Vocabulary(("floor",), "category")
        emb = load_label_embeddings(vocab, np.ones((1, 3)))
        with pytest.raises(VocabularyError):
            similarity(np.zeros((2, 2, 4)), emb)


class TestPixelLabelMap:
    def test_argmax_per_cell(self):
        scores = np.array([[[0.1, 0.9], [0.8, 0.2]]])
        plm = pixel_label_map(scores)
        assert plm.labels.tolist() == [[1, 0]]
        assert plm.similarity is scores

    def test_ties_break_to_smallest_index(self):
        scores = np.array([[[0.5, 0.5, 0.5]]])
        assert pixel_label_map(scores).labels[0, 0] == 0

    def test_all_zero_rows_map_to_background(self):
        scores = np.zeros((3, 3, 4))
        assert np.all(pixel_label_map(scores).labels == 0)
