import numpy as np
import pytest

from deeprnn import (ConfigurationError, DataFormatError, Vocabulary,
                     iter_subsequences, load_pianoroll, load_text)
from deeprnn.data import active_pitches


class TestLoadText:
    def test_char_minimal(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text("abab")
        corpus = load_text(str(p), level="char")
        assert corpus.vocab.size == 2
        assert corpus.train.tolist() == [0, 1, 0, 1]

    def test_word_minimal_with_unknown(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text("the cat the")
        corpus = load_text(str(p), level="word")
        assert corpus.vocab.index["the"] == 0
        assert corpus.vocab.index["cat"] == 1
        assert corpus.train.tolist() == [0, 1, 0]
        # the unknown token is part of the vocabulary
        assert corpus.vocab.size == 3
        assert corpus.vocab.unknown_index == 2

    def test_word_oov_maps_to_unknown(self, tmp_path):
        (tmp_path / "train.txt").write_text("a b c")
        (tmp_path / "valid.txt").write_text("a d")
        corpus = load_text(str(tmp_path / "train.txt"), str(tmp_path / "valid.txt"),
                           level="word")
        assert corpus.valid.tolist() == [0, corpus.vocab.unknown_index]

    def test_existing_unk_token_reused(self, tmp_path):
        (tmp_path / "train.txt").write_text("a <unk> b")
        corpus = load_text(str(tmp_path / "train.txt"), level="word")
        assert corpus.vocab.size == 3
        assert corpus.vocab.unknown_index == corpus.vocab.index["<unk>"] == 1

    def test_char_oov_rejected(self, tmp_path):
        (tmp_path / "train.txt").write_text("aaa")
        (tmp_path / "valid.txt").write_text("ab")
        with pytest.raises(ConfigurationError):
            load_text(str(tmp_path / "train.txt"), str(tmp_path / "valid.txt"),
                      level="char")

    def test_vocab_round_trip(self, tmp_path):
        text = "To be, or not to be: that is the question.\n"
        p = tmp_path / "t.txt"
        p.write_text(text)
        corpus = load_text(str(p), level="char")
        assert "".join(corpus.vocab.decode(corpus.train)) == text

    def test_empty_corpus_rejected(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text("")
        with pytest.raises(ConfigurationError):
            load_text(str(p), level="char")

    def test_unreadable_file_is_io_error(self, tmp_path):
        with pytest.raises(OSError):
            load_text(str(tmp_path / "missing.txt"), level="char")


class TestLoadPianoroll:
    def test_basic_expansion(self, tmp_path):
        p = tmp_path / "songs.jsonl"
        p.write_text("[[60],[60,64]]\n")
        songs = load_pianoroll(str(p))
        assert len(songs) == 1
        roll = songs[0]
        assert roll.shape == (2, 88)
        assert roll[0].sum() == 1.0 and roll[0, 60] == 1.0
        assert roll[1].sum() == 2.0 and roll[1, 64] == 1.0

    def test_empty_song_rejected_with_line(self, tmp_path):
        p = tmp_path / "songs.jsonl"
        p.write_text("[[60]]\n[]\n")
        with pytest.raises(DataFormatError, match="line 2"):
            load_pianoroll(str(p))

    def test_malformed_json_names_line(self, tmp_path):
        p = tmp_path / "songs.jsonl"
        p.write_text("[[60]]\n[[1,2\n")
        with pytest.raises(DataFormatError, match="line 2"):
            load_pianoroll(str(p))

    def test_out_of_range_pitch(self, tmp_path):
        p = tmp_path / "songs.jsonl"
        p.write_text("[[88]]\n")
        with pytest.raises(DataFormatError, match="88"):
            load_pianoroll(str(p))

    def test_round_trip(self, tmp_path):
        source = [[[0, 50, 87], [], [12]], [[3], [4, 5]]]
        p = tmp_path / "songs.jsonl"
        p.write_text("\n".join("[" + ",".join(str(f) for f in song) + "]"
                               for song in source) + "\n")
        songs = load_pianoroll(str(p))
        assert [active_pitches(s) for s in songs] == source

    def test_silent_frames_allowed(self, tmp_path):
        p = tmp_path / "songs.jsonl"
        p.write_text("[[],[60],[]]\n")
        songs = load_pianoroll(str(p))
        assert songs[0].sum() == 1.0


class TestIterSubsequences:
    def test_split_arithmetic(self):
        song = np.arange(5, dtype=np.int64)
        chunks = list(iter_subsequences([song], 2))
        assert [c.steps for c in chunks] == [2, 2]
        assert [c.carry_state for c in chunks] == [False, True]
        assert chunks[0].inputs.tolist() == [0, 1]
        assert chunks[0].targets.tolist() == [1, 2]
        assert chunks[1].inputs.tolist() == [2, 3]
        assert chunks[1].targets.tolist() == [3, 4]

    def test_two_songs_reset_carry(self):
        songs = [np.arange(4, dtype=np.int64), np.arange(7, dtype=np.int64)]
        chunks = list(iter_subsequences(songs, 3))
        assert [c.carry_state for c in chunks] == [False, False, True]

    def test_step_count_conservation(self):
        rng = np.random.default_rng(0)
        songs = [np.arange(int(n), dtype=np.int64) for n in rng.integers(1, 40, 20)]
        for max_len in (1, 3, 7, 100):
            chunks = list(iter_subsequences(songs, max_len))
            assert sum(c.steps for c in chunks) == sum(max(len(s) - 1, 0) for s in songs)
            starts = [c for c in chunks if not c.carry_state]
            assert len(starts) == sum(1 for s in songs if len(s) >= 2)

    def test_single_frame_song_yields_nothing(self):
        assert list(iter_subsequences([np.array([5], dtype=np.int64)], 10)) == []

    def test_targets_shifted_within_song(self):
        song = np.arange(10, dtype=np.int64)
        for c in iter_subsequences([song], 4):
            assert np.array_equal(c.targets, c.inputs + 1)

    def test_invalid_max_len(self):
        with pytest.raises(ConfigurationError):
            list(iter_subsequences([np.arange(3)], 0))


class TestVocabulary:
    def test_duplicate_symbols_rejected(self):
        with pytest.raises(ConfigurationError):
            Vocabulary(["a", "a"])

    def test_encode_unknown_without_index(self):
        v = Vocabulary(["a", "b"])
        with pytest.raises(ConfigurationError):
            v.encode(["c"])
