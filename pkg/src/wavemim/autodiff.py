"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

Each op builds a :class:`Tensor` that records, for every differentiable
parent, a closure mapping the output gradient to that parent's gradient
contribution. ``backward()`` walks the graph once in reverse topological
order, accumulating into ``Tensor.grad``. Only the ops the transformer needs
exist here; every backward rule is pinned by the finite-difference tests.

Numerically heavy composites (softmax, layer norm, GELU) are fused primitives
with hand-derived backward rules to keep graphs small.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


class Tensor:
    """A node in the autodiff graph wrapping a float64 ndarray."""

    __slots__ = ("data", "grad", "requires_grad", "_links")

    def __init__(self, data, requires_grad: bool = False, _links=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._links = _links  # tuple of (parent Tensor, grad_fn)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={'set' if self.grad is not None else 'none'})"

    def item(self) -> float:
        return float(self.data)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def backward(self) -> None:
        """Accumulate gradients of this (scalar or array treated with unit
        seed) node into every reachable ``requires_grad`` tensor."""
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent, _fn in node._links:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            grad = node.grad
            if grad is None:
                continue
            for parent, fn in node._links:
                contrib = fn(grad)
                if parent.grad is None:
                    parent.grad = contrib
                else:
                    parent.grad = parent.grad + contrib


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def _coerce(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False)


def _node(data: np.ndarray, links) -> Tensor:
    links = tuple((p, fn) for p, fn in links if p.requires_grad)
    return Tensor(data, requires_grad=bool(links), _links=links)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient over the axes numpy broadcasting expanded."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(
        i for i, (have, want) in enumerate(zip(grad.shape, shape)) if want == 1 and have != 1
    )
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return np.ascontiguousarray(grad.reshape(shape))


def add(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    return _node(
        a.data + b.data,
        [
            (a, lambda g, sh=a.data.shape: _unbroadcast(g, sh)),
            (b, lambda g, sh=b.data.shape: _unbroadcast(g, sh)),
        ],
    )


def sub(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    return _node(
        a.data - b.data,
        [
            (a, lambda g, sh=a.data.shape: _unbroadcast(g, sh)),
            (b, lambda g, sh=b.data.shape: _unbroadcast(-g, sh)),
        ],
    )


def mul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    return _node(
        a.data * b.data,
        [
            (a, lambda g, o=b.data, sh=a.data.shape: _unbroadcast(g * o, sh)),
            (b, lambda g, o=a.data, sh=b.data.shape: _unbroadcast(g * o, sh)),
        ],
    )


def scale(a, factor: float) -> Tensor:
    a = _coerce(a)
    factor = float(factor)
    return _node(a.data * factor, [(a, lambda g: g * factor)])


def matmul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    return _node(
        a.data @ b.data,
        [
            (
                a,
                lambda g, o=b.data, sh=a.data.shape: _unbroadcast(
                    g @ np.swapaxes(o, -1, -2), sh
                ),
            ),
            (
                b,
                lambda g, o=a.data, sh=b.data.shape: _unbroadcast(
                    np.swapaxes(o, -1, -2) @ g, sh
                ),
            ),
        ],
    )


def reshape(a, shape) -> Tensor:
    a = _coerce(a)
    return _node(
        a.data.reshape(shape),
        [(a, lambda g, sh=a.data.shape: np.ascontiguousarray(g.reshape(sh)))],
    )


def transpose(a, axes) -> Tensor:
    a = _coerce(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _node(
        np.ascontiguousarray(a.data.transpose(axes)),
        [(a, lambda g: np.ascontiguousarray(g.transpose(inverse)))],
    )


def sum_all(a) -> Tensor:
    a = _coerce(a)
    return _node(
        np.asarray(a.data.sum()),
        [(a, lambda g, sh=a.data.shape: np.full(sh, float(g)))],
    )


def abs_(a) -> Tensor:
    # subgradient 0 at exactly zero
    a = _coerce(a)
    return _node(
        np.abs(a.data),
        [(a, lambda g, s=np.sign(a.data): g * s)],
    )


def square(a) -> Tensor:
    a = _coerce(a)
    return _node(
        a.data * a.data,
        [(a, lambda g, d=a.data: g * (2.0 * d))],
    )


def softmax(a) -> Tensor:
    """Numerically stable softmax along the last axis."""
    a = _coerce(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=-1, keepdims=True)

    def back(g, y=out):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return y * (g - dot)

    return _node(out, [(a, back)])


def gelu(a) -> Tensor:
    """Exact (erf-based) GELU."""
    a = _coerce(a)
    x = a.data
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    out = x * cdf

    def back(g, x=x, cdf=cdf):
        pdf = _INV_SQRT2PI * np.exp(-0.5 * x * x)
        return g * (cdf + x * pdf)

    return _node(out, [(a, back)])


def layer_norm(x, gamma, beta, eps: float = 1e-6) -> Tensor:
    """Normalize over the last axis, then apply the affine pair."""
    x, gamma, beta = _coerce(x), _coerce(gamma), _coerce(beta)
    dim = x.data.shape[-1]
    mean = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mean
    var = np.mean(centered * centered, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = gamma.data * xhat + beta.data

    def back_x(g, xhat=xhat, inv=inv, gd=gamma.data, dim=dim):
        gx = g * gd
        mean_gx = gx.mean(axis=-1, keepdims=True)
        mean_gx_xhat = (gx * xhat).mean(axis=-1, keepdims=True)
        return inv * (gx - mean_gx - xhat * mean_gx_xhat)

    def back_gamma(g, xhat=xhat, sh=gamma.data.shape):
        return _unbroadcast(g * xhat, sh)

    def back_beta(g, sh=beta.data.shape):
        return _unbroadcast(g, sh)

    return _node(out, [(x, back_x), (gamma, back_gamma), (beta, back_beta)])
