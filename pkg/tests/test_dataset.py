import numpy as np
import pytest

from fvcval.dataset import (
    EmbeddingSet,
    Manifest,
    RecordingMeta,
    enumerate_trials,
    load_dataset,
    load_embeddings,
    parse_manifest,
    synthesize_dataset,
    write_embeddings,
    write_manifest,
)
from fvcval.errors import DataValidationError
from fvcval.scoring import cosine_score

from helpers import paper_shaped_manifest


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestParseManifest:
    def test_paper_shaped_counts(self, tmp_path):
        manifest, _ = paper_shaped_manifest()
        path = tmp_path / "manifest.csv"
        write_manifest(manifest, path)
        parsed = parse_manifest(path)
        train = parsed.select(partition="train")
        test = parsed.select(partition="test")
        assert len(train) == 423
        assert len(parsed.speakers("train")) == 105
        assert len([r for r in train if r.condition == "questioned"]) == 191
        assert len([r for r in train if r.condition == "known"]) == 232
        assert len(test) == 223
        assert len(parsed.speakers("test")) == 61
        assert len([r for r in test if r.condition == "questioned"]) == 61
        assert len([r for r in test if r.condition == "known"]) == 162

    def test_empty_file_is_an_error(self, tmp_path):
        path = _write(tmp_path / "empty.csv", "")
        with pytest.raises(DataValidationError, match="empty"):
            parse_manifest(path)

    def test_header_only_is_an_error(self, tmp_path):
        path = _write(tmp_path / "h.csv", "recording_id,speaker_id,session,condition,partition\n")
        with pytest.raises(DataValidationError, match="no data rows"):
            parse_manifest(path)

    def test_duplicate_recording_id(self, tmp_path):
        path = _write(
            tmp_path / "dup.csv",
            "recording_id,speaker_id,session,condition,partition\n"
            "r1,a,1,questioned,test\n"
            "r1,b,1,known,test\n",
        )
        with pytest.raises(DataValidationError, match="duplicate recording_id"):
            parse_manifest(path)

    def test_malformed_row_names_line(self, tmp_path):
        path = _write(
            tmp_path / "bad.csv",
            "recording_id,speaker_id,session,condition,partition\n"
            "r1,a,1,questioned,test\n"
            "r2,a,one,questioned,test\n",
        )
        with pytest.raises(DataValidationError, match="line 3"):
            parse_manifest(path)

    def test_bad_condition_value(self, tmp_path):
        path = _write(
            tmp_path / "bad.csv",
            "recording_id,speaker_id,session,condition,partition\nr1,a,1,unknown,test\n",
        )
        with pytest.raises(DataValidationError, match="condition"):
            parse_manifest(path)

    def test_missing_embedding_named_in_error(self, tmp_path):
        mpath = _write(
            tmp_path / "m.csv",
            "recording_id,speaker_id,session,condition,partition\n"
            "r1,a,1,questioned,test\n"
            "r2,b,1,known,test\n",
        )
        epath = _write(tmp_path / "e.csv", "r1,1.0,2.0\n")
        with pytest.raises(DataValidationError, match="r2"):
            load_dataset(mpath, epath)


class TestEmbeddingIO:
    def test_text_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        embs = EmbeddingSet(["a", "b", "c"], rng.normal(size=(3, 5)))
        path = tmp_path / "e.csv"
        write_embeddings(embs, path)
        back = load_embeddings(path)
        assert back.ids == embs.ids
        assert np.array_equal(back.matrix, embs.matrix)

    def test_binary_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(4)
        matrix = rng.normal(size=(4, 6)).astype(np.float32).astype(np.float64)
        embs = EmbeddingSet(["a", "b", "c", "d"], matrix)
        path = tmp_path / "e.f32"
        write_embeddings(embs, path)
        back = load_embeddings(path)
        assert back.ids == embs.ids
        assert np.array_equal(back.matrix, embs.matrix)

    def test_zero_norm_rejected_at_load(self, tmp_path):
        path = _write(tmp_path / "e.csv", "a,1.0,2.0\nb,0.0,0.0\n")
        with pytest.raises(DataValidationError, match="b.*zero norm"):
            load_embeddings(path)

    def test_nan_rejected_at_load(self, tmp_path):
        path = _write(tmp_path / "e.csv", "a,1.0,nan\n")
        with pytest.raises(DataValidationError, match="non-finite"):
            load_embeddings(path)

    def test_inconsistent_dimension_rejected(self, tmp_path):
        path = _write(tmp_path / "e.csv", "a,1.0,2.0\nb,1.0,2.0,3.0\n")
        with pytest.raises(DataValidationError, match="dimension"):
            load_embeddings(path)

    def test_unknown_extension_rejected(self, tmp_path):
        path = _write(tmp_path / "e.dat", "a,1.0\n")
        with pytest.raises(DataValidationError, match="extension"):
            load_embeddings(path)


class TestEnumerateTrials:
    def test_paper_shaped_cross_product(self):
        manifest, _ = paper_shaped_manifest()
        trials = enumerate_trials(manifest)
        assert len(trials) == 61 * 162 == 9882

    def test_single_same_speaker_pair(self):
        manifest = Manifest(
            [
                RecordingMeta("q1", "a", 1, "questioned", "test"),
                RecordingMeta("k1", "a", 1, "known", "test"),
            ]
        )
        trials = enumerate_trials(manifest)
        assert len(trials) == 1
        assert trials[0].label == "ss"

    def test_two_by_two_labels(self):
        manifest = Manifest(
            [
                RecordingMeta("qa", "a", 1, "questioned", "test"),
                RecordingMeta("qb", "b", 1, "questioned", "test"),
                RecordingMeta("ka", "a", 1, "known", "test"),
                RecordingMeta("kb", "b", 1, "known", "test"),
            ]
        )
        trials = enumerate_trials(manifest)
        assert len(trials) == 4
        assert sum(1 for t in trials if t.label == "ss") == 2
        assert sum(1 for t in trials if t.label == "ds") == 2

    def test_deterministic_sorted_order(self):
        manifest, _ = paper_shaped_manifest()
        trials = enumerate_trials(manifest)
        keys = [(t.questioned_id, t.known_id) for t in trials]
        assert keys == sorted(keys)

    def test_ss_count_matches_per_speaker_product(self):
        manifest, _ = paper_shaped_manifest()
        trials = enumerate_trials(manifest)
        expected = 0
        for spk in manifest.speakers("test"):
            n_q = len([r for r in manifest.select(partition="test", condition="questioned") if r.speaker_id == spk])
            n_k = len([r for r in manifest.select(partition="test", condition="known") if r.speaker_id == spk])
            expected += n_q * n_k
        assert sum(1 for t in trials if t.label == "ss") == expected

    def test_empty_partition_is_an_error(self):
        manifest = Manifest(
            [
                RecordingMeta("q1", "a", 1, "questioned", "test"),
                RecordingMeta("k1", "a", 1, "known", "train"),
            ]
        )
        with pytest.raises(DataValidationError, match="known"):
            enumerate_trials(manifest)


class TestSynthesize:
    def test_same_seed_bit_identical(self):
        m1, e1 = synthesize_dataset(6, 2, 8, 0.0, 0.3, seed=7)
        m2, e2 = synthesize_dataset(6, 2, 8, 0.0, 0.3, seed=7)
        assert np.array_equal(e1.matrix, e2.matrix)
        assert [r.recording_id for r in m1.records] == [r.recording_id for r in m2.records]

    def test_different_seed_differs(self):
        _, e1 = synthesize_dataset(6, 2, 8, 0.0, 0.3, seed=7)
        _, e2 = synthesize_dataset(6, 2, 8, 0.0, 0.3, seed=8)
        assert not np.array_equal(e1.matrix, e2.matrix)

    def test_degenerate_noise_gives_unit_ss_scores(self):
        manifest, embs = synthesize_dataset(4, 2, 16, 0.0, 1e-12, seed=5)
        for t in enumerate_trials(manifest):
            if t.label == "ss":
                s = cosine_score(embs.vector(t.questioned_id), embs.vector(t.known_id))
                assert abs(s - 1.0) < 1e-9

    def test_every_test_speaker_has_ss_trials(self):
        manifest, _ = synthesize_dataset(60, 3, 8, 0.0, 0.3, seed=1)
        trials = enumerate_trials(manifest)
        ss_speakers = {manifest[t.questioned_id].speaker_id for t in trials if t.label == "ss"}
        assert ss_speakers == manifest.speakers("test")

    def test_trial_count_is_condition_product(self):
        manifest, _ = synthesize_dataset(10, 2, 8, 0.0, 0.3, seed=2)
        n_q = len(manifest.select(partition="test", condition="questioned"))
        n_k = len(manifest.select(partition="test", condition="known"))
        assert len(enumerate_trials(manifest)) == n_q * n_k

    def test_channel_offset_shifts_questioned_only(self):
        m0, e0 = synthesize_dataset(4, 1, 8, 0.0, 0.2, seed=9)
        m1, e1 = synthesize_dataset(4, 1, 8, 2.0, 0.2, seed=9)
        for rec in m0.records:
            delta = e1.vector(rec.recording_id) - e0.vector(rec.recording_id)
            if rec.condition == "questioned":
                assert np.allclose(delta, 2.0, atol=1e-5)
            else:
                assert np.allclose(delta, 0.0)

    def test_written_dataset_round_trips(self, tmp_path):
        manifest, embs = synthesize_dataset(6, 2, 8, 0.5, 0.3, seed=3)
        write_manifest(manifest, tmp_path / "m.csv")
        write_embeddings(embs, tmp_path / "e.csv")
        back_m, back_e = load_dataset(tmp_path / "m.csv", tmp_path / "e.csv")
        assert [r.recording_id for r in back_m.records] == [r.recording_id for r in manifest.records]
        assert np.array_equal(back_e.matrix, embs.matrix)
        assert back_m.embedding_dim == 8

    def test_binary_round_trip_of_synthetic(self, tmp_path):
        manifest, embs = synthesize_dataset(6, 2, 8, 0.5, 0.3, seed=3)
        write_manifest(manifest, tmp_path / "m.csv")
        write_embeddings(embs, tmp_path / "e.f32")
        _, back = load_dataset(tmp_path / "m.csv", tmp_path / "e.f32")
        assert np.array_equal(back.matrix, embs.matrix)

    def test_too_few_speakers_rejected(self):
        with pytest.raises(ValueError, match="n_speakers"):
            synthesize_dataset(1, 2, 8, 0.0, 0.3, seed=1)

    def test_trial_embeddings_share_dimension(self):
        manifest, embs = synthesize_dataset(6, 2, 8, 0.0, 0.3, seed=4)
        for t in enumerate_trials(manifest):
            assert embs.vector(t.questioned_id).shape == embs.vector(t.known_id).shape
