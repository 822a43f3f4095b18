"""Hot numeric kernels for the join pipelines.

All kernels work on contiguous int64 arrays over a prime p < 2^26, so any
product of two reduced values stays below 2^52 and short dot products below
2^56; reduction uses a float-reciprocal quotient estimate with a one-step
fixup, which is exact in that range.

numba is optional: pure-numpy fallbacks compute the same thing (set
SIGMARHO_NO_NUMBA=1 to force them).
"""

from __future__ import annotations

import os

import numpy as np

KERNEL_PRIME_LIMIT = 1 << 26

_USE_NUMBA = os.environ.get("SIGMARHO_NO_NUMBA", "") != "1"
if _USE_NUMBA:
    try:
        from numba import njit, prange
    except ImportError:  # pragma: no cover - environment without numba
        _USE_NUMBA = False

HAVE_NUMBA = _USE_NUMBA


def kernel_ok(p: int) -> bool:
    return HAVE_NUMBA and p < KERNEL_PRIME_LIMIT


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _nb_mulmod(a, b, p, invp, out):
        for i in prange(a.size):
            x = a[i] * b[i]
            q = np.int64(np.float64(x) * invp)
            r = x - q * p
            while r >= p:
                r -= p
            while r < 0:
                r += p
            out[i] = r

    @njit(cache=True, parallel=True)
    def _nb_modp(a, p, invp, out):
        for i in prange(a.size):
            x = a[i]
            q = np.int64(np.float64(x) * invp)
            r = x - q * p
            while r >= p:
                r -= p
            while r < 0:
                r += p
            out[i] = r

    @njit(cache=True, inline="always")
    def _redc(x, p, invp):
        q = np.int64(np.float64(x) * invp)
        r = x - q * p
        while r >= p:
            r -= p
        while r < 0:
            r += p
        return r

    @njit(cache=True, inline="always")
    def _line_blocks(arr, base, post, mats, starts, sizes, p, invp):
        moff = 0
        for b in range(starts.size):
            m = sizes[b]
            o = base + starts[b] * post
            if m == 2:
                x0 = arr[o]
                x1 = arr[o + post]
                arr[o] = _redc(mats[moff] * x0 + mats[moff + 1] * x1, p, invp)
                arr[o + post] = _redc(mats[moff + 2] * x0 + mats[moff + 3] * x1,
                                      p, invp)
            elif m == 3:
                x0 = arr[o]
                x1 = arr[o + post]
                x2 = arr[o + 2 * post]
                arr[o] = _redc(mats[moff] * x0 + mats[moff + 1] * x1
                               + mats[moff + 2] * x2, p, invp)
                arr[o + post] = _redc(mats[moff + 3] * x0 + mats[moff + 4] * x1
                                      + mats[moff + 5] * x2, p, invp)
                arr[o + 2 * post] = _redc(mats[moff + 6] * x0 + mats[moff + 7] * x1
                                          + mats[moff + 8] * x2, p, invp)
            else:
                buf = np.empty(m, dtype=np.int64)
                for r in range(m):
                    acc = np.int64(0)
                    for c in range(m):
                        acc += mats[moff + r * m + c] * arr[o + c * post]
                    buf[r] = _redc(acc, p, invp)
                for r in range(m):
                    arr[o + r * post] = buf[r]
            moff += m * m

    @njit(cache=True, parallel=True)
    def _nb_axis_blocks(arr, pre, s, post, mats, starts, sizes, p, invp):
        # in-place per-line block transforms; lines are independent and the
        # parallel loop runs over whichever side has more of them
        if pre >= post:
            for i in prange(pre):
                row = i * s * post
                for j in range(post):
                    _line_blocks(arr, row + j, post, mats, starts, sizes, p, invp)
        else:
            for j in prange(post):
                for i in range(pre):
                    _line_blocks(arr, i * s * post + j, post, mats, starts, sizes,
                                 p, invp)

    @njit(cache=True, parallel=True)
    def _nb_outer_mulmod(a, b, p, invp, out):
        # out[i, x, y] = a[i, x] * b[i, y] mod p
        n, K = a.shape
        L = b.shape[1]
        for i in prange(n):
            for x in range(K):
                ax = a[i, x]
                o = (i * K + x) * L
                for y in range(L):
                    out[o + y] = _redc(ax * b[i, y], p, invp)

    @njit(cache=True, parallel=True)
    def _nb_contract(data, rows, p, invp, out):
        n, L = data.shape
        for i in prange(n):
            acc = np.int64(0)
            for j in range(L):
                acc += data[i, j] * rows[i, j]
                if acc >= (np.int64(1) << 58):
                    q = np.int64(np.float64(acc) * invp)
                    acc -= q * p
            out[i] = _redc(acc, p, invp)

    @njit(cache=True, parallel=True)
    def _nb_contract_mid(data, rows, p, invp, out):
        n, K, L = data.shape
        for i in prange(n):
            for x in range(K):
                acc = np.int64(0)
                for y in range(L):
                    acc += data[i, x, y] * rows[i, y]
                    if acc >= (np.int64(1) << 58):
                        q = np.int64(np.float64(acc) * invp)
                        acc -= q * p
                out[i, x] = _redc(acc, p, invp)

    @njit(cache=True, parallel=True)
    def _nb_matmul(a, mat, p, invp, out):
        n, kin = a.shape
        kout = mat.shape[1]
        for i in prange(n):
            for r in range(kout):
                acc = np.int64(0)
                for c in range(kin):
                    acc += a[i, c] * mat[c, r]
                    if acc >= (np.int64(1) << 58):
                        q = np.int64(np.float64(acc) * invp)
                        acc -= q * p
                q = np.int64(np.float64(acc) * invp)
                rr = acc - q * p
                while rr >= p:
                    rr -= p
                while rr < 0:
                    rr += p
                out[i, r] = rr


def mulmod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Elementwise a*b mod p for reduced inputs (equal shapes)."""
    if kernel_ok(p):
        a = np.ascontiguousarray(a)
        b = np.ascontiguousarray(b)
        out = np.empty_like(a)
        _nb_mulmod(a.ravel(), b.ravel(), p, 1.0 / p, out.ravel())
        return out
    return a * b % p


def modp(a: np.ndarray, p: int) -> np.ndarray:
    """a mod p for |a| < 2^52."""
    if kernel_ok(p):
        a = np.ascontiguousarray(a)
        out = np.empty_like(a)
        _nb_modp(a.ravel(), p, 1.0 / p, out.ravel())
        return out
    return a % p


def block_dft_axis(arr: np.ndarray, axis: int, blocks_mats, p: int,
                   inplace: bool = False) -> np.ndarray:
    """Apply small per-block matrices along one axis of a contiguous tensor.

    blocks_mats: sequence of (start_slot, matrix); slots outside any block
    pass through unchanged.  With inplace=True the caller guarantees arr is
    a private contiguous buffer; the kernel mutates it line by line.
    """
    shape = arr.shape
    s = shape[axis]
    pre = int(np.prod(shape[:axis], dtype=np.int64)) if axis else 1
    post = int(np.prod(shape[axis + 1:], dtype=np.int64)) if axis + 1 < len(shape) else 1
    if kernel_ok(p):
        out = arr if (inplace and arr.flags.c_contiguous) else \
            np.ascontiguousarray(arr).copy()
        mats = np.concatenate([np.ascontiguousarray(m).ravel()
                               for _, m in blocks_mats])
        starts = np.array([st for st, _ in blocks_mats], dtype=np.int64)
        sizes = np.array([m.shape[0] for _, m in blocks_mats], dtype=np.int64)
        _nb_axis_blocks(out.ravel(), pre, s, post, mats, starts, sizes, p, 1.0 / p)
        return out.reshape(shape)
    out = arr.copy()
    view_in = arr.reshape(pre, s, post)
    view_out = out.reshape(pre, s, post)
    for start, mat in blocks_mats:
        m = mat.shape[0]
        sub = view_in[:, start:start + m, :]
        if m * p * p < (1 << 62):
            mixed = np.einsum("rc,icj->irj", mat, sub)
        else:
            mixed = np.zeros((pre, m, post), dtype=np.int64)
            for r in range(m):
                for c in range(m):
                    mixed[:, r, :] = (mixed[:, r, :] + mat[r, c] * sub[:, c, :]) % p
        view_out[:, start:start + m, :] = mixed % p
    return out


def outer_mulmod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """out[i, x, y] = a[i, x] * b[i, y] mod p."""
    if kernel_ok(p):
        a = np.ascontiguousarray(a)
        b = np.ascontiguousarray(b)
        out = np.empty(a.shape + (b.shape[1],), dtype=np.int64)
        _nb_outer_mulmod(a, b, p, 1.0 / p, out.ravel())
        return out
    return a[:, :, None] * b[:, None, :] % p


def contract_last(data: np.ndarray, rows: np.ndarray, p: int) -> np.ndarray:
    """sum_j data[i, j] * rows[i, j] mod p."""
    if kernel_ok(p):
        data = np.ascontiguousarray(data)
        rows = np.ascontiguousarray(rows)
        out = np.empty(data.shape[0], dtype=np.int64)
        _nb_contract(data, rows, p, 1.0 / p, out)
        return out
    lo = rows & 0xFFFF
    hi = rows >> 16
    return ((data * lo).sum(axis=1) % p
            + (data * hi).sum(axis=1) % p * (1 << 16)) % p


def contract_mid(data: np.ndarray, rows: np.ndarray, p: int) -> np.ndarray:
    """sum_y data[i, x, y] * rows[i, y] mod p."""
    if kernel_ok(p):
        data = np.ascontiguousarray(data)
        rows = np.ascontiguousarray(rows)
        out = np.empty(data.shape[:2], dtype=np.int64)
        _nb_contract_mid(data, rows, p, 1.0 / p, out)
        return out
    lo = rows[:, None, :] & 0xFFFF
    hi = rows[:, None, :] >> 16
    return ((data * lo).sum(axis=2) % p
            + (data * hi).sum(axis=2) % p * (1 << 16)) % p


def matmul_mod_small(a: np.ndarray, mat: np.ndarray, p: int) -> np.ndarray:
    """(a @ mat) mod p for reduced inputs, mat small."""
    if kernel_ok(p):
        a = np.ascontiguousarray(a)
        out = np.empty((a.shape[0], mat.shape[1]), dtype=np.int64)
        _nb_matmul(a, np.ascontiguousarray(mat), p, 1.0 / p, out)
        return out
    lo = mat & 0xFFFF
    hi = mat >> 16
    return (a @ lo + (a @ hi) % p * (1 << 16)) % p
