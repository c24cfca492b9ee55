"""Per-op finite-difference checks for the reverse-mode engine."""

import numpy as np
import pytest

from wavemim import autodiff as ad


def _fd_check(build, arrays, step=1e-6, tol=1e-6):
    """Central finite differences of a weighted sum of build(*tensors).

    The weighting keeps the objective non-degenerate (a plain sum of softmax
    outputs, for instance, has an exactly-zero gradient).
    """
    weights = {}

    def objective(tensors):
        out = build(*tensors)
        if out.shape not in weights:
            weights[out.shape] = np.random.default_rng(99).normal(size=out.shape)
        return float(ad.sum_all(ad.mul(out, ad.constant(weights[out.shape]))).data)

    tensors = [ad.Tensor(a, requires_grad=True) for a in arrays]
    out = build(*tensors)
    if out.shape not in weights:
        weights[out.shape] = np.random.default_rng(99).normal(size=out.shape)
    ad.sum_all(ad.mul(out, ad.constant(weights[out.shape]))).backward()
    for arr, tensor in zip(arrays, tensors):
        analytic = tensor.grad
        assert analytic is not None
        assert analytic.shape == arr.shape
        numeric = np.zeros_like(arr)
        for idx in range(arr.size):
            orig = arr.flat[idx]
            arr.flat[idx] = orig + step
            up = objective([ad.Tensor(a) for a in arrays])
            arr.flat[idx] = orig - step
            down = objective([ad.Tensor(a) for a in arrays])
            arr.flat[idx] = orig
            numeric.flat[idx] = (up - down) / (2 * step)
        err = np.max(
            np.abs(analytic - numeric)
            / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
        )
        assert err < tol, f"finite-difference mismatch: {err}"


def _rand(shape, seed):
    return np.random.default_rng(seed).normal(size=shape)


class TestElementwise:
    def test_add_broadcast(self):
        _fd_check(lambda a, b: ad.add(a, b), [_rand((3, 4), 0), _rand((4,), 1)])

    def test_sub_broadcast(self):
        _fd_check(lambda a, b: ad.sub(a, b), [_rand((2, 3, 4), 2), _rand((3, 1), 3)])

    def test_mul_broadcast(self):
        _fd_check(lambda a, b: ad.mul(a, b), [_rand((3, 4), 4), _rand((3, 1), 5)])

    def test_scale(self):
        _fd_check(lambda a: ad.scale(a, -2.5), [_rand((5,), 6)])

    def test_square(self):
        _fd_check(lambda a: ad.square(a), [_rand((3, 3), 7)])

    def test_abs(self):
        # keep entries away from the kink
        arr = _rand((4, 4), 8)
        arr[np.abs(arr) < 0.1] = 0.5
        _fd_check(lambda a: ad.abs_(a), [arr])

    def test_gelu(self):
        _fd_check(lambda a: ad.gelu(a), [_rand((3, 5), 9)])


class TestMatmul:
    def test_plain(self):
        _fd_check(lambda a, b: ad.matmul(a, b), [_rand((3, 4), 10), _rand((4, 2), 11)])

    def test_batched_times_shared(self):
        _fd_check(
            lambda a, b: ad.matmul(a, b), [_rand((2, 3, 4), 12), _rand((4, 5), 13)]
        )

    def test_batched_times_batched(self):
        _fd_check(
            lambda a, b: ad.matmul(a, b), [_rand((2, 3, 4), 14), _rand((2, 4, 3), 15)]
        )


class TestShape:
    def test_reshape(self):
        _fd_check(lambda a: ad.square(ad.reshape(a, (2, 6))), [_rand((3, 4), 16)])

    def test_transpose(self):
        _fd_check(
            lambda a: ad.square(ad.transpose(a, (2, 0, 1))), [_rand((2, 3, 4), 17)]
        )

    def test_transpose_roundtrip_identity(self):
        a = ad.Tensor(_rand((2, 3, 4), 18), requires_grad=True)
        out = ad.transpose(ad.transpose(a, (1, 2, 0)), (2, 0, 1))
        np.testing.assert_array_equal(out.data, a.data)


class TestFused:
    def test_softmax(self):
        _fd_check(lambda a: ad.softmax(a), [_rand((2, 3, 5), 19)], tol=1e-5)

    def test_softmax_rows_sum_to_one(self):
        out = ad.softmax(ad.Tensor(_rand((4, 7), 20) * 10))
        np.testing.assert_allclose(out.data.sum(axis=-1), 1.0, atol=1e-12)

    def test_layer_norm(self):
        x = _rand((2, 3, 8), 21)
        gamma = np.abs(_rand((8,), 22)) + 0.5
        beta = _rand((8,), 23)
        _fd_check(
            lambda a, g, b: ad.layer_norm(a, g, b, eps=1e-6), [x, gamma, beta], tol=1e-5
        )

    def test_layer_norm_statistics(self):
        x = ad.Tensor(_rand((5, 16), 24))
        out = ad.layer_norm(x, ad.Tensor(np.ones(16)), ad.Tensor(np.zeros(16)), 1e-6)
        np.testing.assert_allclose(out.data.mean(axis=-1), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.data.var(axis=-1), 1.0, atol=1e-4)


class TestGraph:
    def test_composite_expression(self):
        def build(a, b, c):
            h = ad.gelu(ad.add(ad.matmul(a, b), c))
            return ad.mul(ad.softmax(h), h)

        _fd_check(
            build, [_rand((3, 4), 25), _rand((4, 6), 26), _rand((6,), 27)], tol=1e-5
        )

    def test_reused_node_accumulates(self):
        a = ad.Tensor(np.array([2.0, -1.0]), requires_grad=True)
        out = ad.sum_all(ad.mul(a, a))  # d/da (a*a) = 2a via two paths
        out.backward()
        np.testing.assert_allclose(a.grad, [4.0, -2.0], atol=1e-12)

    def test_constant_gets_no_grad(self):
        a = ad.Tensor(np.ones(3), requires_grad=True)
        c = ad.constant(np.ones(3) * 2.0)
        out = ad.sum_all(ad.mul(a, c))
        out.backward()
        assert c.grad is None
        np.testing.assert_array_equal(a.grad, c.data)

    def test_gradient_linearity(self):
        arr = _rand((3, 3), 28)
        a1 = ad.Tensor(arr.copy(), requires_grad=True)
        ad.sum_all(ad.square(a1)).backward()
        a2 = ad.Tensor(arr.copy(), requires_grad=True)
        ad.scale(ad.sum_all(ad.square(a2)), 2.0).backward()
        np.testing.assert_allclose(a2.grad, 2.0 * a1.grad, atol=1e-12)
