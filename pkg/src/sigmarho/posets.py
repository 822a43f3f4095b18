"""Fast zeta/Moebius transforms on products of small partial orders.

Three concrete orders cover everything the solver needs:

  chain(r)    -- the total order 0 < 1 < ... < r-1 per coordinate; zeta is a
                 running prefix sum, Moebius the adjacent difference.
  flat orders -- every label incomparable except that the "saturated" label
                 of a side sits above all other labels of the same side; zeta
                 adds the whole group into the saturated slot.
  tds_pairs   -- the 4-label instance of a flat order with two groups of two
                 (the total-domination label set).

covering_product evaluates sum over y1 v y2 = x of f(y1) g(y2) as
mobius(zeta(f) * zeta(g)); cover_convolution extends it with non-cyclic
convolution over trailing linear dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .transforms import LINEAR, Tensor, noncyclic_convolution

ZETA = "zeta"
MOBIUS = "mobius"


@dataclass(frozen=True)
class CoordOrder:
    """A base partial order P on one coordinate, given by its zeta rule.

    kind is one of chain / sigma_rho_flat / tds_pairs.  For the flat kinds,
    groups lists (saturated_slot, member_slots) per side that saturates;
    chains carry no groups.  Every downward-closed set of each kind is a
    join-semilattice, which is what the covering product needs.
    """

    kind: str
    size: int
    groups: tuple[tuple[int, tuple[int, ...]], ...] = ()

    @staticmethod
    def chain(r: int) -> "CoordOrder":
        return CoordOrder("chain", r)

    @staticmethod
    def flat(size: int, groups) -> "CoordOrder":
        groups = tuple((int(g), tuple(m)) for g, m in groups)
        return CoordOrder("sigma_rho_flat", size, groups)

    @staticmethod
    def tds_pairs() -> "CoordOrder":
        # labels ordered (|0|s, |>=1|s, |0|r, |>=1|r)
        return CoordOrder("tds_pairs", 4, ((1, (0,)), (3, (2,))))


def _axis_view(arr: np.ndarray, shape: tuple[int, ...], axis: int) -> np.ndarray:
    pre = int(np.prod(shape[:axis], dtype=np.int64)) if axis else 1
    post = int(np.prod(shape[axis + 1:], dtype=np.int64)) if axis + 1 < len(shape) else 1
    return arr.reshape(pre, shape[axis], post)


def _apply_chain_axis(view: np.ndarray, p: int, direction: str, ops) -> None:
    r = view.shape[1]
    if direction == ZETA:
        np.cumsum(view, axis=1, out=view)
        view %= p
        ops.add += view[:, 0, :].size * (r - 1)
    else:
        view[:, 1:, :] = (view[:, 1:, :] - view[:, :-1, :]) % p
        ops.sub += view[:, 0, :].size * (r - 1)


def _apply_flat_axis(view: np.ndarray, groups, p: int, direction: str, ops) -> None:
    for ge, members in groups:
        if not members:
            continue
        block = view[:, list(members), :].sum(axis=1)
        ops.add += view[:, 0, :].size * len(members)
        if direction == ZETA:
            view[:, ge, :] = (view[:, ge, :] + block) % p
        else:
            view[:, ge, :] = (view[:, ge, :] - block) % p


def zeta_chain(t: Tensor, direction: str = ZETA) -> Tensor:
    """Prefix sums (or their inverse) per axis over the natural total order."""
    if direction not in (ZETA, MOBIUS):
        raise ValueError("direction must be zeta or mobius")
    out = t.copy()
    shape = out.shape
    for axis in range(len(shape)):
        if shape[axis] > 1:
            view = _axis_view(out.data, shape, axis)
            _apply_chain_axis(view, t.field.p, direction, t.field.ops)
    return out


def zeta_product_order(t: Tensor, order: CoordOrder, direction: str = ZETA) -> Tensor:
    """Coordinate-wise zeta/Moebius sweep for any of the built-in orders."""
    if direction not in (ZETA, MOBIUS):
        raise ValueError("direction must be zeta or mobius")
    if any(s != order.size for s in t.shape):
        raise ValueError("dimension size does not match the base order")
    if order.kind == "chain":
        return zeta_chain(t, direction)
    out = t.copy()
    shape = out.shape
    for axis in range(len(shape)):
        view = _axis_view(out.data, shape, axis)
        _apply_flat_axis(view, order.groups, t.field.p, direction, t.field.ops)
    return out


def covering_product(f: Tensor, g: Tensor, order: CoordOrder) -> Tensor:
    """h(x) = sum over y1 v y2 = x of f(y1) g(y2), via mobius(zeta(f)*zeta(g))."""
    if f.dims != g.dims:
        raise ValueError("tensor shape mismatch")
    zf = zeta_product_order(f, order, ZETA)
    zg = zeta_product_order(g, order, ZETA)
    prod = zf.data * zg.data % f.field.p
    f.field.ops.mul += prod.size
    return zeta_product_order(Tensor(f.dims, prod, f.field), order, MOBIUS)


def cover_convolution(f: Tensor, g: Tensor, order: CoordOrder, order_rank: int) -> Tensor:
    """Covering product over the first order_rank dims, non-cyclic convolution
    over the remaining linear dims.

    Three sweeps: zeta along the order axes for every fixed linear index, a
    non-cyclic convolution along the linear axes for every fixed order index,
    and a Moebius sweep back.
    """
    if f.dims != g.dims:
        raise ValueError("tensor shape mismatch")
    if f.field.p != g.field.p:
        raise ValueError("field mismatch")
    kdims = f.dims[:order_rank]
    ldims = f.dims[order_rank:]
    if any(s != order.size for s, _ in kdims):
        raise ValueError("order dims must have size |P|")
    if any(kind != LINEAR for _, kind in ldims):
        raise ValueError("trailing dims must be linear")
    if order_rank == 0:
        return noncyclic_convolution(f, g)

    def zeta_part(t: Tensor, direction: str) -> np.ndarray:
        arr = t.data.copy()
        shape = t.shape
        for axis in range(order_rank):
            view = _axis_view(arr, shape, axis)
            if order.kind == "chain":
                _apply_chain_axis(view, t.field.p, direction, t.field.ops)
            else:
                _apply_flat_axis(view, order.groups, t.field.p, direction, t.field.ops)
        return arr

    zf = zeta_part(f, ZETA)
    zg = zeta_part(g, ZETA)
    if not ldims:
        prod = zf * zg % f.field.p
        f.field.ops.mul += prod.size
        out = Tensor(f.dims, prod, f.field)
        arr = zeta_part(out, MOBIUS)
        return Tensor(f.dims, arr, f.field)

    # non-cyclic convolution along the linear axes for every fixed order
    # index, batched: pad each linear axis to a power of two >= twice its
    # size, transform, multiply pointwise, transform back, crop
    from .transforms import dft_axis, next_pow2

    field = f.field
    ksize = int(np.prod([s for s, _ in kdims], dtype=np.int64))
    lshape = tuple(s for s, _ in ldims)
    pads = tuple(next_pow2(2 * q) for q in lshape)
    for q in pads:
        field.root(q)

    def padded(arr: np.ndarray) -> np.ndarray:
        out = np.zeros((ksize,) + pads, dtype=np.int64)
        out[(slice(None),) + tuple(slice(0, q) for q in lshape)] = \
            arr.reshape((ksize,) + lshape)
        return out

    FA = padded(zf)
    FB = padded(zg)
    for ax in range(1, FA.ndim):
        FA = dft_axis(FA, ax, field, inverse=False)
        FB = dft_axis(FB, ax, field, inverse=False)
    prod = FA * FB % field.p
    field.ops.mul += prod.size
    for ax in range(1, prod.ndim):
        prod = dft_axis(prod, ax, field, inverse=True)
    cropped = prod[(slice(None),) + tuple(slice(0, q) for q in lshape)]
    out = Tensor(f.dims, np.ascontiguousarray(cropped).ravel(), f.field)
    arr = zeta_part(out, MOBIUS)
    return Tensor(f.dims, arr, f.field)
