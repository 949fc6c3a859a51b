"""Corpus loading and truncated-subsequence iteration.

Text corpora are plain UTF-8 files, one per split; the vocabulary is built
from the training split only, in order of first occurrence. Word-level
corpora get an unknown-word index that out-of-vocabulary validation/test
tokens map to; character-level corpora have no unknown symbol and reject
unseen characters.

Piano rolls come as JSON lines: one song per line, a list of frames, each
frame a list of active pitch indices in [0, 88) (88 keys, MIDI 21-108). Each
frame expands to an 88-dimensional binary vector.

Training consumes :class:`SubseqChunk` streams: consecutive cuts of at most
``max_len`` prediction steps, targets shifted one step ahead of inputs within
the underlying song. ``carry_state`` is False exactly at each song's first
chunk (a language corpus is one continuous song), which is where the trainer
resets the hidden state to zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, DataFormatError

PITCH_DIMS = 88
UNKNOWN_TOKEN = "<unk>"


class Vocabulary:
    """Bijection between symbols and dense indices [0, size)."""

    def __init__(self, symbols: Sequence[str], unknown_index: int | None = None):
        self.symbols = list(symbols)
        self.index = {s: i for i, s in enumerate(self.symbols)}
        if len(self.index) != len(self.symbols):
            raise ConfigurationError("vocabulary symbols must be unique")
        self.unknown_index = unknown_index

    @property
    def size(self) -> int:
        return len(self.symbols)

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        out = np.empty(len(tokens), dtype=np.int64)
        for i, tok in enumerate(tokens):
            j = self.index.get(tok)
            if j is None:
                if self.unknown_index is None:
                    raise ConfigurationError(
                        f"symbol {tok!r} not in vocabulary and no unknown index is defined")
                j = self.unknown_index
            out[i] = j
        return out

    def decode(self, indices: Sequence[int]) -> list[str]:
        return [self.symbols[int(i)] for i in indices]


@dataclass
class TextCorpus:
    train: np.ndarray
    valid: np.ndarray | None
    test: np.ndarray | None
    vocab: Vocabulary
    level: str


def _tokenize(text: str, level: str) -> list[str]:
    if level == "char":
        return list(text)
    if level == "word":
        return text.split()
    raise ConfigurationError(f"unknown text level {level!r}; expected 'char' or 'word'")


def load_text(train_path: str, valid_path: str | None = None,
              test_path: str | None = None, level: str = "char") -> TextCorpus:
    """Load text splits as index sequences plus the train-split vocabulary."""
    with open(train_path, encoding="utf-8") as f:
        train_tokens = _tokenize(f.read(), level)
    if not train_tokens:
        raise ConfigurationError(f"empty training corpus: {train_path}")
    symbols: list[str] = []
    seen = set()
    for tok in train_tokens:
        if tok not in seen:
            seen.add(tok)
            symbols.append(tok)
    unknown_index = None
    if level == "word":
        if UNKNOWN_TOKEN not in seen:
            symbols.append(UNKNOWN_TOKEN)
        unknown_index = symbols.index(UNKNOWN_TOKEN)
    vocab = Vocabulary(symbols, unknown_index)

    def encode_file(path: str | None) -> np.ndarray | None:
        if path is None:
            return None
        with open(path, encoding="utf-8") as f:
            return vocab.encode(_tokenize(f.read(), level))

    return TextCorpus(train=vocab.encode(train_tokens),
                      valid=encode_file(valid_path),
                      test=encode_file(test_path),
                      vocab=vocab, level=level)


def load_pianoroll(path: str) -> list[np.ndarray]:
    """Songs from a JSON-lines file, each as a (frames, 88) binary array."""
    songs: list[np.ndarray] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                frames = json.loads(line)
            except json.JSONDecodeError as err:
                raise DataFormatError(f"invalid JSON: {err.msg}", line=lineno) from None
            if not isinstance(frames, list):
                raise DataFormatError("song must be a list of frames", line=lineno)
            if not frames:
                raise DataFormatError("empty song has no predictable step", line=lineno)
            roll = np.zeros((len(frames), PITCH_DIMS))
            for t, frame in enumerate(frames):
                if not isinstance(frame, list):
                    raise DataFormatError(f"frame {t} must be a list of pitch indices",
                                          line=lineno)
                for p in frame:
                    if not isinstance(p, int) or isinstance(p, bool):
                        raise DataFormatError(f"frame {t}: pitch {p!r} is not an integer",
                                              line=lineno)
                    if not 0 <= p < PITCH_DIMS:
                        raise DataFormatError(
                            f"frame {t}: pitch {p} outside [0, {PITCH_DIMS})", line=lineno)
                    if roll[t, p] == 1.0:
                        raise DataFormatError(f"frame {t}: duplicate pitch {p}", line=lineno)
                    roll[t, p] = 1.0
            songs.append(roll)
    return songs


def active_pitches(roll: np.ndarray) -> list[list[int]]:
    """Inverse of the frame expansion: active indices per frame, ascending."""
    return [list(np.flatnonzero(frame).astype(int)) for frame in roll]


@dataclass
class SubseqChunk:
    """A training slice: aligned inputs and next-step targets.

    ``carry_state`` is False when the chunk starts a new song, i.e. the
    hidden state must be reset to zero before consuming it.
    """

    inputs: np.ndarray
    targets: np.ndarray
    carry_state: bool

    @property
    def steps(self) -> int:
        return self.inputs.shape[0]


def iter_subsequences(seqs: Sequence[np.ndarray], max_len: int) -> Iterator[SubseqChunk]:
    """Cut each sequence into consecutive chunks of at most max_len steps.

    A sequence of N frames yields N - 1 prediction steps (inputs are frames
    [0, N-1), targets frames [1, N)). Sequences shorter than 2 frames yield
    nothing. For language modeling pass a single concatenated sequence.
    """
    if max_len < 1:
        raise ConfigurationError(f"max_len must be >= 1, got {max_len}")
    for seq in seqs:
        n_steps = seq.shape[0] - 1
        for start in range(0, max(n_steps, 0), max_len):
            stop = min(start + max_len, n_steps)
            yield SubseqChunk(inputs=seq[start:stop],
                              targets=seq[start + 1:stop + 1],
                              carry_state=start > 0)
