import json

import numpy as np
import pytest

from pragmachine import lexicon
from pragmachine.color import ColorLuv
from pragmachine.validation import DataError

from .conftest import random_luv


def zero_params(vocab, d=3, hidden=4):
    p = lexicon.init_lexicon_params(vocab, d=d, hidden=hidden, seed=0)
    p.hidden_w[...] = 0.0
    p.hidden_b[...] = 0.0
    p.score_w[...] = 0.0
    p.score_b = 0.0
    return p


class TestLexiconScore:
    def test_zero_weights_give_half(self, micro_vocab):
        p = zero_params(micro_vocab)
        for u in range(len(micro_vocab)):
            assert lexicon.lexicon_score(p, u, ColorLuv(40.0, 10.0, -5.0)) == 0.5

    def test_large_bias_saturates_inside_open_interval(self, micro_vocab):
        p = zero_params(micro_vocab)
        p.score_b = 20.0
        v = lexicon.lexicon_score(p, 0, ColorLuv(50.0, 0.0, 0.0))
        assert v >= 1.0 - 3e-9
        assert v < 1.0

    def test_extreme_bias_still_open_interval(self, micro_vocab):
        p = zero_params(micro_vocab)
        for bias in (500.0, -500.0):
            p.score_b = bias
            v = lexicon.lexicon_score(p, 0, ColorLuv(50.0, 0.0, 0.0))
            assert 0.0 < v < 1.0

    def test_deterministic(self, micro_vocab):
        p = lexicon.init_lexicon_params(micro_vocab, d=3, hidden=4, seed=9)
        m = ColorLuv(62.0, 13.0, -40.0)
        assert lexicon.lexicon_score(p, 2, m) == lexicon.lexicon_score(p, 2, m)

    def test_utterance_id_validated(self, micro_params):
        with pytest.raises(DataError):
            lexicon.lexicon_score(micro_params, 99, ColorLuv(50.0, 0.0, 0.0))

    def test_values_strictly_inside_unit_interval_random(self, micro_vocab):
        rng = np.random.default_rng(5)
        p = lexicon.init_lexicon_params(micro_vocab, d=3, hidden=4, seed=3)
        p.score_w *= 100.0  # force saturation regions
        for _ in range(100):
            v = lexicon.lexicon_score(p, int(rng.integers(4)), random_luv(rng))
            assert 0.0 < v < 1.0


class TestContextLexicon:
    def test_matches_individual_scores(self, micro_params):
        rng = np.random.default_rng(1)
        ctx = (random_luv(rng), random_luv(rng), random_luv(rng))
        cl = lexicon.context_lexicon(micro_params, ctx)
        for i in range(3):
            for u in range(micro_params.n_utterances):
                assert cl.values[i, u] == pytest.approx(
                    lexicon.lexicon_score(micro_params, u, ctx[i]), abs=1e-15)

    def test_slices(self, micro_params):
        rng = np.random.default_rng(2)
        ctx = (random_luv(rng), random_luv(rng), random_luv(rng))
        cl = lexicon.context_lexicon(micro_params, ctx)
        n = micro_params.n_utterances
        assert cl.flat.shape == (3 * n,)
        np.testing.assert_array_equal(cl.utterance_vector(1), cl.values[:, 1])
        np.testing.assert_array_equal(cl.meaning_vector(2), cl.values[2, :])
        np.testing.assert_array_equal(cl.flat[:n], cl.meaning_vector(0))

    def test_permuting_context_permutes_rows(self, micro_params):
        rng = np.random.default_rng(3)
        ctx = (random_luv(rng), random_luv(rng), random_luv(rng))
        cl = lexicon.context_lexicon(micro_params, ctx)
        swapped = lexicon.context_lexicon(micro_params, (ctx[2], ctx[0], ctx[1]))
        np.testing.assert_array_equal(swapped.values[0], cl.values[2])
        np.testing.assert_array_equal(swapped.values[1], cl.values[0])

    def test_log_values_consistent(self, micro_params):
        rng = np.random.default_rng(4)
        ctx = (random_luv(rng), random_luv(rng), random_luv(rng))
        cl = lexicon.context_lexicon(micro_params, ctx)
        np.testing.assert_allclose(np.exp(cl.log_values), cl.values, rtol=1e-12)

    def test_from_values_requires_open_interval(self):
        with pytest.raises(DataError):
            lexicon.ContextLexicon.from_values(np.array([[0.0, 0.5], [0.5, 0.5], [0.5, 0.5]]))


class TestScoreGradient:
    def test_matches_finite_differences(self, micro_vocab):
        p = lexicon.init_lexicon_params(micro_vocab, d=3, hidden=4, seed=21)
        rng = np.random.default_rng(8)
        h = 1e-6
        for _ in range(5):
            u = int(rng.integers(len(micro_vocab)))
            m = random_luv(rng)
            grads = lexicon.lexicon_score_grad(p, u, m)
            for name in ("embeddings", "hidden_w", "hidden_b", "score_w"):
                arr = getattr(p, name)
                g = getattr(grads, name)
                it = np.nditer(arr, flags=["multi_index"])
                while not it.finished:
                    idx = it.multi_index
                    orig = arr[idx]
                    arr[idx] = orig + h
                    fp = lexicon.lexicon_score(p, u, m)
                    arr[idx] = orig - h
                    fm = lexicon.lexicon_score(p, u, m)
                    arr[idx] = orig
                    numeric = (fp - fm) / (2 * h)
                    a = float(g[idx])
                    assert abs(a - numeric) / max(1.0, abs(a), abs(numeric)) <= 1e-6
                    it.iternext()
            orig = p.score_b
            p.score_b = orig + h
            fp = lexicon.lexicon_score(p, u, m)
            p.score_b = orig - h
            fm = lexicon.lexicon_score(p, u, m)
            p.score_b = orig
            numeric = (fp - fm) / (2 * h)
            assert abs(grads.score_b - numeric) / max(1.0, abs(numeric)) <= 1e-6


class TestInitEmbeddings:
    def test_file_mode_exact(self, micro_vocab, tmp_path):
        rng = np.random.default_rng(0)
        vecs = {t: rng.normal(size=5).tolist() for t in micro_vocab.texts}
        path = tmp_path / "emb.jsonl"
        path.write_text("\n".join(json.dumps({"text": t, "vec": v}) for t, v in vecs.items()),
                        encoding="utf-8")
        emb = lexicon.init_embeddings(micro_vocab, path=path)
        assert emb.shape == (4, 5)
        for i, t in enumerate(micro_vocab.texts):
            assert emb[i].tolist() == vecs[t]

    def test_missing_entry_named(self, micro_vocab, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text(json.dumps({"text": "alpha", "vec": [1.0, 2.0]}) + "\n", encoding="utf-8")
        with pytest.raises(DataError, match="missing embedding for .*bravo"):
            lexicon.init_embeddings(micro_vocab, path=path)

    def test_dimension_mismatch(self, micro_vocab, tmp_path):
        lines = [json.dumps({"text": "alpha", "vec": [1.0, 2.0]}),
                 json.dumps({"text": "bravo", "vec": [1.0, 2.0, 3.0]})]
        path = tmp_path / "emb.jsonl"
        path.write_text("\n".join(lines), encoding="utf-8")
        with pytest.raises(DataError, match="dimension mismatch"):
            lexicon.init_embeddings(micro_vocab, path=path)

    def test_seeded_random_deterministic(self, micro_vocab):
        a = lexicon.init_embeddings(micro_vocab, seed=7, d=50)
        b = lexicon.init_embeddings(micro_vocab, seed=7, d=50)
        np.testing.assert_array_equal(a, b)
        assert a.shape == (4, 50)
        assert np.all((a > -0.1) & (a < 0.1))


class TestParamsSerialization:
    def test_round_trip_bit_exact(self, micro_vocab, tmp_path):
        p = lexicon.init_lexicon_params(micro_vocab, d=7, hidden=5, seed=33)
        path = tmp_path / "params.json"
        lexicon.save_params(p, path)
        q = lexicon.load_params(path)
        np.testing.assert_array_equal(p.embeddings, q.embeddings)
        np.testing.assert_array_equal(p.hidden_w, q.hidden_w)
        np.testing.assert_array_equal(p.hidden_b, q.hidden_b)
        np.testing.assert_array_equal(p.score_w, q.score_w)
        assert p.score_b == q.score_b
        assert p.vocab_hash == q.vocab_hash
        # a second save is byte-identical
        path2 = tmp_path / "params2.json"
        lexicon.save_params(q, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_version_mismatch(self, micro_vocab, tmp_path):
        p = lexicon.init_lexicon_params(micro_vocab, d=3, hidden=4, seed=1)
        path = tmp_path / "params.json"
        lexicon.save_params(p, path)
        doc = json.loads(path.read_text())
        doc["version"] = "2"
        path.write_text(json.dumps(doc))
        with pytest.raises(DataError, match="version"):
            lexicon.load_params(path)

    def test_shape_mismatch(self, micro_vocab, tmp_path):
        p = lexicon.init_lexicon_params(micro_vocab, d=3, hidden=4, seed=1)
        path = tmp_path / "params.json"
        lexicon.save_params(p, path)
        doc = json.loads(path.read_text())
        doc["hidden_bias"] = doc["hidden_bias"][:-1]
        path.write_text(json.dumps(doc))
        with pytest.raises(DataError):
            lexicon.load_params(path)

    def test_declared_d_checked(self, micro_vocab, tmp_path):
        p = lexicon.init_lexicon_params(micro_vocab, d=3, hidden=4, seed=1)
        path = tmp_path / "params.json"
        lexicon.save_params(p, path)
        doc = json.loads(path.read_text())
        doc["d"] = 9
        path.write_text(json.dumps(doc))
        with pytest.raises(DataError, match="d="):
            lexicon.load_params(path)
