import numpy as np

from deeprnn import Rng


def test_fixed_seed_reproduces_stream():
    a = Rng(123).normal(10_000)
    b = Rng(123).normal(10_000)
    assert np.array_equal(a, b)


def test_different_seeds_differ():
    assert not np.array_equal(Rng(1).normal(100), Rng(2).normal(100))


def test_substream_is_independent_of_draw_position():
    parent = Rng(9)
    parent.normal(57)  # consume some state
    a = parent.substream(4).normal(20)
    b = Rng(9).substream(4).normal(20)
    assert np.array_equal(a, b)


def test_substreams_differ_by_tag():
    r = Rng(9)
    assert not np.array_equal(r.substream(1).normal(50), r.substream(2).normal(50))


def test_choice_without_replacement():
    picks = Rng(3).choice_without_replacement(10, 10)
    assert sorted(picks.tolist()) == list(range(10))
    k = Rng(4).choice_without_replacement(100, 7)
    assert len(set(k.tolist())) == 7


def test_categorical_extremes():
    r = Rng(8)
    p = np.array([0.0, 1.0, 0.0])
    assert all(r.categorical(p) == 1 for _ in range(20))
