import math

import numpy as np
import pytest

from deeprnn import (ConfigurationError, Nonlinearity, Rng, affine, apply,
                     gaussian_matrix, largest_singular_value, softmax)


class TestAffine:
    def test_identity(self):
        assert np.array_equal(affine(np.eye(2), np.array([1.0, 2.0]), np.zeros(2)),
                              np.array([1.0, 2.0]))

    def test_zero_matrix_returns_bias(self):
        out = affine(np.zeros((2, 2)), np.array([5.0, -3.0]), np.array([0.5, -0.5]))
        assert np.array_equal(out, np.array([0.5, -0.5]))

    def test_matches_dot_product_oracle(self):
        rng = Rng(101)
        W = rng.normal((4, 3))
        x = rng.normal(3)
        b = rng.normal(4)
        got = affine(W, x, b)
        # exactly rounded row dot products as an independent reference
        want = [math.fsum([W[i, j] * x[j] for j in range(3)] + [b[i]]) for i in range(4)]
        assert np.max(np.abs(got - np.array(want))) < 1e-12

    def test_dimension_mismatch_reports_shapes(self):
        with pytest.raises(ConfigurationError, match="2x3"):
            affine(np.zeros((2, 3)), np.zeros(4), np.zeros(2))
        with pytest.raises(ConfigurationError):
            affine(np.zeros((2, 3)), np.zeros(3), np.zeros(5))


class TestApply:
    def test_sigmoid_at_zero(self):
        assert np.array_equal(apply(Nonlinearity.SIGMOID, np.zeros(2)), np.full(2, 0.5))

    def test_tanh_odd(self):
        assert apply(Nonlinearity.TANH, np.zeros(1))[0] == 0.0
        v = np.array([0.3, -1.7])
        assert np.allclose(apply(Nonlinearity.TANH, -v), -apply(Nonlinearity.TANH, v))

    def test_rectifier(self):
        assert np.array_equal(apply(Nonlinearity.RECTIFIER, np.array([-3.0, 2.0])),
                              np.array([0.0, 2.0]))

    def test_identity(self):
        v = np.array([1.5, -2.5])
        assert np.array_equal(apply(Nonlinearity.IDENTITY, v), v)

    def test_ranges(self):
        v = Rng(5).normal(100, 3.0)
        s = apply(Nonlinearity.SIGMOID, v)
        assert np.all((s > 0) & (s < 1))
        t = apply(Nonlinearity.TANH, v)
        assert np.all((t > -1) & (t < 1))
        r = apply(Nonlinearity.RECTIFIER, v)
        assert np.all(r >= 0)

    def test_sigmoid_derivative_matches_central_differences(self):
        # derivative identity s*(1-s) against (f(x+h)-f(x-h))/2h at 20 points
        rng = Rng(7)
        x = rng.normal(20, 2.0)
        s = apply(Nonlinearity.SIGMOID, x)
        analytic = Nonlinearity.SIGMOID.derivative_from_output(s)
        h = 1e-5
        numeric = (apply(Nonlinearity.SIGMOID, x + h) - apply(Nonlinearity.SIGMOID, x - h)) / (2 * h)
        rel = np.abs(analytic - numeric) / np.abs(numeric)
        assert np.max(rel) < 1e-7


class TestSoftmax:
    def test_equal_logits(self):
        assert np.array_equal(softmax(np.zeros(2)), np.full(2, 0.5))

    def test_constant_vector(self):
        for c in (-7.0, 0.0, 123.456):
            assert np.allclose(softmax(np.full(4, c)), 0.25, atol=1e-15)

    def test_known_value(self):
        got = softmax(np.array([1.0, 2.0, 3.0]))
        want = np.array([0.09003057, 0.24472847, 0.66524096])
        assert np.max(np.abs(got - want)) < 1e-8

    def test_sums_to_one_and_positive(self):
        rng = Rng(3)
        for _ in range(10):
            p = softmax(rng.normal(17, 5.0))
            assert abs(p.sum() - 1.0) < 1e-12
            assert np.all(p > 0)

    def test_shift_invariance(self):
        rng = Rng(4)
        v = rng.normal(9, 2.0)
        for c in (-100.0, 1e-3, 40.0):
            assert np.argmax(softmax(v + c)) == np.argmax(softmax(v))
            assert np.max(np.abs(softmax(v + c) - softmax(v))) < 1e-12


class TestLargestSingularValue:
    def test_identity(self):
        assert largest_singular_value(np.eye(3)) == pytest.approx(1.0, abs=1e-9)

    def test_diagonal(self):
        got = largest_singular_value(np.diag([3.0, 1.0]), tol=1e-9)
        assert got == pytest.approx(3.0, rel=1e-7)

    def test_matches_svd_oracle(self):
        rng = Rng(12)
        for _ in range(5):
            M = rng.normal((10, 10))
            want = np.linalg.svd(M, compute_uv=False)[0]
            got = largest_singular_value(M, tol=1e-8)
            assert abs(got - want) / want < 1e-6

    def test_rectangular(self):
        rng = Rng(13)
        M = rng.normal((8, 3))
        want = np.linalg.svd(M, compute_uv=False)[0]
        assert abs(largest_singular_value(M, tol=1e-8) - want) / want < 1e-6

    def test_scaling_property(self):
        rng = Rng(14)
        M = rng.normal((6, 6))
        tol = 1e-6
        base = largest_singular_value(M, tol=tol)
        for alpha in (-2.5, 0.125, 10.0):
            scaled = largest_singular_value(alpha * M, tol=tol)
            assert abs(scaled - abs(alpha) * base) <= 2 * tol * scaled

    def test_zero_matrix_rejected(self):
        with pytest.raises(ConfigurationError):
            largest_singular_value(np.zeros((3, 3)))


class TestGaussianMatrix:
    def test_zero_std(self):
        assert np.array_equal(gaussian_matrix(Rng(0), 2, 2, 0.0), np.zeros((2, 2)))

    def test_sample_std(self):
        M = gaussian_matrix(Rng(21), 1000, 1000, 0.1)
        assert 0.098 <= M.std() <= 0.102

    def test_same_seed_identical(self):
        a = gaussian_matrix(Rng(5), 20, 30, 0.3)
        b = gaussian_matrix(Rng(5), 20, 30, 0.3)
        assert np.array_equal(a, b)

    def test_negative_std_rejected(self):
        with pytest.raises(ConfigurationError):
            gaussian_matrix(Rng(0), 2, 2, -0.1)
