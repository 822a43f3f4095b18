"""Discrete Fourier transforms over F_p and the convolutions built on them.

Tensors are flat int64 arrays indexed in row-major mixed radix.  Each
dimension is tagged cyclic (index sums wrap) or linear (sums that leave the
index range are dropped).  Everything is exact: no floats anywhere.

Primes are kept below 2^31 so products of two reduced values fit in int64;
matrix-style transforms split one operand into 16-bit halves to keep the
accumulated dot products in range as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modring import PrimeField

CYCLIC = "cyclic"
LINEAR = "linear"

# largest prime for which a*b with a,b < p fits comfortably in int64
MAX_NUMPY_PRIME = 1 << 31


@dataclass
class Tensor:
    """Mixed-radix tensor of F_p values.

    dims: sequence of (size, kind) with kind in {cyclic, linear}; data is the
    flat row-major array (last dimension contiguous), reduced mod p.
    """

    dims: tuple[tuple[int, str], ...]
    data: np.ndarray
    field: PrimeField

    def __post_init__(self):
        sizes = self.shape
        n = 1
        for s in sizes:
            n *= s
        if self.data.size != n:
            raise ValueError("data length does not match dimension product")
        self.data = np.asarray(self.data, dtype=np.int64).ravel() % self.field.p

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.dims)

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(k for _, k in self.dims)

    def copy(self) -> "Tensor":
        return Tensor(self.dims, self.data.copy(), self.field)

    def reshaped(self) -> np.ndarray:
        return self.data.reshape(self.shape)


def _require_numpy_safe(field: PrimeField) -> None:
    if field.p >= MAX_NUMPY_PRIME:
        raise ValueError(
            f"prime {field.p} too large for int64 kernels (limit 2^31)")


def _verify_root_order(field: PrimeField, omega: int, r: int) -> None:
    from .modring import prime_factors

    omega %= field.p
    if pow(omega, r, field.p) != 1 or any(
            pow(omega, r // q, field.p) == 1 for q in prime_factors(r)):
        raise ValueError("not a primitive root of requested order")


def matmul_mod(a: np.ndarray, w: np.ndarray, field: PrimeField) -> np.ndarray:
    """(a @ w) mod p for reduced int64 inputs, overflow-safe via 16-bit split.

    Counts one field multiplication per scalar product in the contraction.
    """
    p = field.p
    lo = w & 0xFFFF
    hi = w >> 16
    out = (a @ lo + ((a @ hi) % p) * (1 << 16)) % p
    field.ops.mul += a.shape[-1] * a[..., 0].size * w.shape[-1]
    field.ops.add += a.shape[-1] * a[..., 0].size * w.shape[-1]
    return out


def _dft_matrix(field: PrimeField, r: int, inverse: bool) -> np.ndarray:
    """r x r DFT (or scaled inverse DFT) matrix, cached on the field."""
    cache = getattr(field, "_dft_mats", None)
    if cache is None:
        cache = field._dft_mats = {}
    key = (r, inverse)
    if key not in cache:
        p = field.p
        field.root(r)
        w = field.inverse_roots[r] if inverse else field.roots[r]
        pows = np.array([pow(w, i, p) for i in range(r)], dtype=np.int64)
        idx = (np.arange(r)[:, None] * np.arange(r)[None, :]) % r
        mat = pows[idx]
        if inverse:
            mat = mat * field.inv_r[r] % p
        cache[key] = mat
    return cache[key]


def _fft_pow2_batch(block: np.ndarray, field: PrimeField, inverse: bool) -> np.ndarray:
    """Iterative radix-2 transform of each row of an (m, r) batch, r = 2^t."""
    p = field.p
    m, r = block.shape
    t = r.bit_length() - 1
    w = field.inverse_roots[r] if inverse else field.root(r)
    # bit-reversal permutation of columns
    rev = np.zeros(r, dtype=np.int64)
    for i in range(r):
        b = 0
        x = i
        for _ in range(t):
            b = (b << 1) | (x & 1)
            x >>= 1
        rev[i] = b
    a = block[:, rev].copy()
    half = 1
    while half < r:
        step = r // (2 * half)
        tw = np.array([pow(w, step * j, p) for j in range(half)], dtype=np.int64)
        a = a.reshape(m, -1, 2 * half)
        lo = a[:, :, :half]
        hi = a[:, :, half:] * tw % p
        field.ops.mul += hi.size
        a = np.concatenate([(lo + hi) % p, (lo - hi) % p], axis=2)
        field.ops.add += hi.size
        field.ops.sub += hi.size
        half *= 2
    a = a.reshape(m, r)
    if inverse:
        a = a * field.inv_r[r] % p
        field.ops.mul += a.size
    return a


def dft_axis(arr: np.ndarray, axis: int, field: PrimeField, inverse: bool) -> np.ndarray:
    """1-D transform along one axis of an ndarray of reduced values.

    Power-of-two lengths go through the radix-2 butterfly network; other
    lengths use the direct matrix evaluation (they are tiny label alphabets).
    """
    r = arr.shape[axis]
    if r == 1:
        return arr
    moved = np.moveaxis(arr, axis, -1)
    flat = np.ascontiguousarray(moved).reshape(-1, r)
    if r & (r - 1) == 0:
        out = _fft_pow2_batch(flat, field, inverse)
    else:
        out = matmul_mod(flat, _dft_matrix(field, r, inverse), field)
    return np.moveaxis(out.reshape(moved.shape), -1, axis)


def dft(seq, omega: int, field: PrimeField, inverse: bool = False) -> np.ndarray:
    """Transform of one length-r sequence using the given r-th root."""
    a = np.asarray(seq, dtype=np.int64) % field.p
    r = len(a)
    _require_numpy_safe(field)
    _verify_root_order(field, omega, r)
    # register the caller's root so the axis kernel uses exactly it
    if field.roots.get(r) != omega % field.p:
        field.roots[r] = omega % field.p
        field.inverse_roots[r] = pow(omega, field.p - 2, field.p)
        field.inv_r[r] = pow(r % field.p, field.p - 2, field.p)
        mats = getattr(field, "_dft_mats", None)
        if mats is not None:
            mats.pop((r, False), None)
            mats.pop((r, True), None)
    return dft_axis(a.reshape(1, r), 1, field, inverse).ravel()


def multidim_dft(t: Tensor, inverse: bool = False) -> Tensor:
    """Axis-by-axis transform of a fully cyclic tensor."""
    if any(k != CYCLIC for k in t.kinds):
        raise ValueError("multidim_dft requires all dimensions cyclic")
    _require_numpy_safe(t.field)
    arr = t.reshaped()
    for ax, (r, _) in enumerate(t.dims):
        if r > 1:
            t.field.root(r)
        arr = dft_axis(arr, ax, t.field, inverse)
    return Tensor(t.dims, arr.ravel(), t.field)


def _check_same_layout(a: Tensor, b: Tensor) -> None:
    if a.dims != b.dims:
        raise ValueError("tensor shape mismatch")
    if a.field is not b.field and a.field.p != b.field.p:
        raise ValueError("tensor field mismatch")


def cyclic_convolution(a: Tensor, b: Tensor) -> Tensor:
    """Wrap-around convolution via forward transforms and a pointwise product."""
    _check_same_layout(a, b)
    fa = multidim_dft(a)
    fb = multidim_dft(b)
    prod = fa.data * fb.data % a.field.p
    a.field.ops.mul += prod.size
    return multidim_dft(Tensor(a.dims, prod, a.field), inverse=True)


def next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1)).bit_length()


def combined_convolution(f: Tensor, g: Tensor) -> Tensor:
    """Convolution cyclic in the cyclic dims, overflow-dropping in the linear ones.

    Linear dimensions of size q are zero-padded to a power of two >= 2q, the
    whole thing is convolved cyclically, and the result is cut back to the
    original box; the padding prevents any wrap on the linear axes.
    """
    _check_same_layout(f, g)
    pad_dims = []
    for size, kind in f.dims:
        if kind == CYCLIC:
            pad_dims.append((size, CYCLIC))
        else:
            pad_dims.append((next_pow2(2 * size), CYCLIC))
    shape = f.shape
    pshape = tuple(s for s, _ in pad_dims)

    def padded(t: Tensor) -> Tensor:
        arr = np.zeros(pshape, dtype=np.int64)
        arr[tuple(slice(0, s) for s in shape)] = t.reshaped()
        return Tensor(tuple(pad_dims), arr.ravel(), f.field)

    conv = cyclic_convolution(padded(f), padded(g))
    out = conv.reshaped()[tuple(slice(0, s) for s in shape)]
    return Tensor(f.dims, np.ascontiguousarray(out).ravel(), f.field)


def noncyclic_convolution(f: Tensor, g: Tensor) -> Tensor:
    """combined_convolution for tensors with no cyclic dimensions."""
    if any(k != LINEAR for k in f.kinds):
        raise ValueError("noncyclic_convolution requires all dimensions linear")
    return combined_convolution(f, g)
