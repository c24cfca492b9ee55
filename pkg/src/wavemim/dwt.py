"""Multi-level separable 2D discrete wavelet transform (orthonormal Haar).

Images are ``(channels, rows, cols)`` float arrays; channels transform
independently. Level indexing uses decomposition depth ``level = 1`` for the
finest (highest-frequency) detail planes, counting up to the coarsest level
``depth``, where the approximation plane lives. A frequency-style index that
grows with frequency maps to this depth as ``freq_index = depth - level``.

Orientation convention (fixed so every value is bit-checkable): the 1D
analysis pair is applied along the column axis first, then the row axis. For
each 2x2 block ``[[a, b], [c, d]]`` the single-level outputs are

    ll = (a + b + c + d) / 2      approximation
    h  = (a - b + c - d) / 2      H: high-pass across columns
    v  = (a + b - c - d) / 2      V: high-pass across rows
    d  = (a - b - c + d) / 2      D: high-pass across both (diagonal)

which is the separable orthonormal Haar pair ``low = [1/sqrt2, 1/sqrt2]``,
``high = [1/sqrt2, -1/sqrt2]``. Coefficients carry the per-level orthonormal
filter normalization, so the transform conserves energy (Parseval) and the
multi-level recursion equals direct inner products with dilated/translated
Haar basis images (see :func:`dwt2_oracle`).

Boundary handling: none. Rows and cols must be divisible by ``2**depth``.
All functions are pure; no shared mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError, StructureError

# correctly rounded double for 1/sqrt(2)
_INV_SQRT2 = float(np.sqrt(0.5))

ORIENTATIONS = ("H", "V", "D")


@dataclass(frozen=True)
class FilterPair:
    """Orthonormal 1D analysis pair (low-pass, high-pass)."""

    low: np.ndarray
    high: np.ndarray


def haar_filters() -> FilterPair:
    """The orthonormal Haar analysis pair."""
    return FilterPair(
        low=np.array([_INV_SQRT2, _INV_SQRT2]),
        high=np.array([_INV_SQRT2, -_INV_SQRT2]),
    )


@dataclass
class WaveletPyramid:
    """Multi-level decomposition: per-level (H, V, D) detail planes plus the
    final approximation plane.

    ``details[level - 1]`` holds the three orientation planes of depth
    ``level``, each shaped ``(channels, rows / 2**level, cols / 2**level)``;
    ``approx`` is ``(channels, rows / 2**depth, cols / 2**depth)``.
    """

    depth: int
    details: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    approx: np.ndarray
    source_shape: tuple[int, int, int]

    def validate(self) -> None:
        channels, rows, cols = self.source_shape
        if self.depth < 1 or len(self.details) != self.depth:
            raise StructureError(
                f"pyramid depth {self.depth} does not match {len(self.details)} detail levels"
            )
        if rows % (1 << self.depth) or cols % (1 << self.depth):
            raise StructureError(
                f"source dims {rows}x{cols} not divisible by 2**{self.depth}"
            )
        for level, planes in enumerate(self.details, start=1):
            want = (channels, rows >> level, cols >> level)
            for name, plane in zip(ORIENTATIONS, planes):
                if plane.shape != want:
                    raise StructureError(
                        f"level {level} plane {name} has shape {plane.shape}, expected {want}"
                    )
        want = (channels, rows >> self.depth, cols >> self.depth)
        if self.approx.shape != want:
            raise StructureError(
                f"approximation plane has shape {self.approx.shape}, expected {want}"
            )

    def energy(self) -> float:
        """Sum of squared coefficients over every plane."""
        total = float(np.sum(np.square(self.approx)))
        for planes in self.details:
            for plane in planes:
                total += float(np.sum(np.square(plane)))
        return total

    def iter_planes(self):
        """Yield ``(name, array)`` pairs: ``L<level>_<H|V|D>`` then ``approx``."""
        for level, planes in enumerate(self.details, start=1):
            for name, plane in zip(ORIENTATIONS, planes):
                yield f"L{level}_{name}", plane
        yield "approx", self.approx


def _check_finite(arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise InputError("input contains non-finite values")


def validate_image(image: np.ndarray) -> np.ndarray:
    """Coerce to a float64 ``(channels, rows, cols)`` array and check invariants."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3:
        raise InputError(f"image must be (channels, rows, cols), got ndim={arr.ndim}")
    if min(arr.shape) < 1:
        raise DimensionError(f"image dims must be >= 1, got {arr.shape}")
    _check_finite(arr)
    return arr


def _split_blocks(plane: np.ndarray):
    a = plane[..., 0::2, 0::2]
    b = plane[..., 0::2, 1::2]
    c = plane[..., 1::2, 0::2]
    d = plane[..., 1::2, 1::2]
    return a, b, c, d


def _level_forward(plane: np.ndarray):
    a, b, c, d = _split_blocks(plane)
    ll = (a + b + c + d) / 2.0
    h = (a - b + c - d) / 2.0
    v = (a + b - c - d) / 2.0
    dd = (a - b - c + d) / 2.0
    return ll, h, v, dd


def _level_inverse(ll, h, v, dd):
    rows, cols = ll.shape[-2] * 2, ll.shape[-1] * 2
    out = np.empty(ll.shape[:-2] + (rows, cols), dtype=np.float64)
    out[..., 0::2, 0::2] = (ll + h + v + dd) / 2.0
    out[..., 0::2, 1::2] = (ll - h + v - dd) / 2.0
    out[..., 1::2, 0::2] = (ll + h - v - dd) / 2.0
    out[..., 1::2, 1::2] = (ll - h - v + dd) / 2.0
    return out


def dwt2_level(plane: np.ndarray):
    """Single-level 2D Haar analysis of one plane with even dims.

    Returns ``(ll, h, v, d)``, each of half the input dims, per the 2x2
    closed forms in the module docstring.
    """
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise InputError(f"dwt2_level expects a 2D plane, got ndim={arr.ndim}")
    rows, cols = arr.shape
    if rows % 2 or cols % 2:
        raise DimensionError(f"plane dims must be even, got {rows}x{cols}")
    _check_finite(arr)
    return _level_forward(arr)


def dwt2_multi(image: np.ndarray, depth: int) -> WaveletPyramid:
    """Multi-level forward transform; level ``l`` details come from the
    ``(l-1)``-fold recursed approximation.
    """
    arr = validate_image(image)
    if depth < 1:
        raise DimensionError(f"depth must be >= 1, got {depth}")
    channels, rows, cols = arr.shape
    if rows % (1 << depth) or cols % (1 << depth):
        raise DimensionError(
            f"image dims {rows}x{cols} must be divisible by 2**{depth}"
        )
    details = []
    current = arr
    for _ in range(depth):
        current, h, v, d = _level_forward(current)
        details.append((h, v, d))
    return WaveletPyramid(
        depth=depth,
        details=details,
        approx=current,
        source_shape=(channels, rows, cols),
    )


def idwt2_multi(pyramid: WaveletPyramid) -> np.ndarray:
    """Inverse transform; exact (to rounding) for any valid pyramid."""
    pyramid.validate()
    current = pyramid.approx
    for h, v, d in reversed(pyramid.details):
        current = _level_inverse(current, h, v, d)
    return current


def _scaling_vec(n: int, level: int, shift: int) -> np.ndarray:
    """Discrete dilated/translated scaling vector: constant 2**(-level/2) on
    its support of length 2**level."""
    vec = np.zeros(n, dtype=np.float64)
    start = shift << level
    vec[start : start + (1 << level)] = 2.0 ** (-level / 2.0)
    return vec


def _wavelet_vec(n: int, level: int, shift: int) -> np.ndarray:
    """Discrete dilated/translated wavelet vector: +2**(-level/2) on the first
    half of the support, negated on the second half."""
    vec = np.zeros(n, dtype=np.float64)
    start = shift << level
    half = 1 << (level - 1)
    amp = 2.0 ** (-level / 2.0)
    vec[start : start + half] = amp
    vec[start + half : start + (1 << level)] = -amp
    return vec


def dwt2_oracle(image: np.ndarray, depth: int) -> WaveletPyramid:
    """Direct-summation reference transform.

    Materializes each 2D basis image as the outer product of 1D
    dilated/translated Haar vectors (row function x column function) and takes
    the full inner product with the image for every coefficient: O(N^2) work
    per output value. Mathematically identical to :func:`dwt2_multi`; intended
    for small inputs.

    Orientation pairing matches the fast path: H = scaling along rows x
    wavelet along columns, V = wavelet x scaling, D = wavelet x wavelet.
    """
    arr = validate_image(image)
    if depth < 1:
        raise DimensionError(f"depth must be >= 1, got {depth}")
    channels, rows, cols = arr.shape
    if rows % (1 << depth) or cols % (1 << depth):
        raise DimensionError(
            f"image dims {rows}x{cols} must be divisible by 2**{depth}"
        )

    def inner(ch: int, row_vec: np.ndarray, col_vec: np.ndarray) -> float:
        basis = np.outer(row_vec, col_vec)
        return float(np.sum(arr[ch] * basis))

    details = []
    for level in range(1, depth + 1):
        out_r, out_c = rows >> level, cols >> level
        h = np.zeros((channels, out_r, out_c))
        v = np.zeros((channels, out_r, out_c))
        d = np.zeros((channels, out_r, out_c))
        for ch in range(channels):
            for m in range(out_r):
                phi_r = _scaling_vec(rows, level, m)
                psi_r = _wavelet_vec(rows, level, m)
                for n in range(out_c):
                    phi_c = _scaling_vec(cols, level, n)
                    psi_c = _wavelet_vec(cols, level, n)
                    h[ch, m, n] = inner(ch, phi_r, psi_c)
                    v[ch, m, n] = inner(ch, psi_r, phi_c)
                    d[ch, m, n] = inner(ch, psi_r, psi_c)
        details.append((h, v, d))

    out_r, out_c = rows >> depth, cols >> depth
    approx = np.zeros((channels, out_r, out_c))
    for ch in range(channels):
        for m in range(out_r):
            phi_r = _scaling_vec(rows, depth, m)
            for n in range(out_c):
                phi_c = _scaling_vec(cols, depth, n)
                approx[ch, m, n] = inner(ch, phi_r, phi_c)

    return WaveletPyramid(
        depth=depth,
        details=details,
        approx=approx,
        source_shape=(channels, rows, cols),
    )


def image_energy(image: np.ndarray) -> float:
    """Sum of squared pixel values."""
    return float(np.sum(np.square(np.asarray(image, dtype=np.float64))))
