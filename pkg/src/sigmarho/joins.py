"""Join-node algorithms: naive pairing, the dominating-set fast path, and the
general transform-based join.

The general join evaluates, for every pair of child colourings that combine
under saturating label addition, the merged pair value.  Pipeline:

  1. attach the partial-solution size as an extra index (indicator or count
     rows, one per colouring),
  2. zeta sweep per vertex axis, folding each side's sub-threshold labels
     into its saturated label,
  3. attach the label-count sum as a second extra index *after* the zeta
     sweep, each colouring keying its own sum (saturated labels count zero),
  4. per-axis DFTs (block-diagonal on vertex axes, one cyclic block per label
     group; dense on the two extra axes), pointwise product, inverse DFTs,
  5. read the label-sum axis at each colouring's own sum, which cancels every
     modular wrap, then the Moebius sweep back.

Step 4 computes in one shot what enumerating all bag partitions into
saturated / low-count / unselected blocks and convolving each compatible
slice would: block-diagonal transforms never mix labels across blocks.  A
literal partition-by-partition reference is kept alongside and cross-checked
by the tests.

Step 3 deliberately runs after step 2: a colouring's label sum is not
invariant under the zeta sweep, so expanding first loses every pair that
hides a positive sub-threshold count underneath a saturated coordinate
(observable whenever a cofinite side has threshold >= 2).

Optimisation variants store sizes shifted by the table optimum, so the
extraction is always "smallest index with a nonzero combination count"; for
maximisation the shift mirrors values, making small indices large sizes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dpengine import INF, NEG, MemoTable, SigmaRhoSpec, Variant
from .modring import PrimeField
from .posets import CoordOrder, cover_convolution, covering_product
from .transforms import CYCLIC, LINEAR, Tensor, combined_convolution, next_pow2


@dataclass
class JoinContext:
    spec: SigmaRhoSpec
    variant: Variant
    field: PrimeField | None
    size_fields: list
    strategy: str
    windowed: bool
    n: int
    recorder: object = None


# -- label-axis layout ---------------------------------------------------------


def _side_blocks(spec: SigmaRhoSpec, sigma: bool):
    """(cyclic_block, saturated_slot) of one side; either may be None.

    cyclic_block is (first_slot, modulus): plain labels convolve cyclically
    with modulus = threshold (cofinite side) or max count + 1 (finite side).
    """
    labels = spec.sigma_labels if sigma else spec.rho_labels
    base = 0 if sigma else len(spec.sigma_labels)
    if not labels:
        return None, None
    if labels[-1].at_least:
        ge = base + len(labels) - 1
        low = len(labels) - 1
        return ((base, low) if low else None), ge
    return (base, len(labels)), None


def block_layout(spec: SigmaRhoSpec):
    """(cyclic blocks, zeta groups) of the per-vertex label axis."""
    blocks = []
    groups = []
    for sigma in (True, False):
        blk, ge = _side_blocks(spec, sigma)
        if blk is not None:
            blocks.append(blk)
        if ge is not None:
            labels = spec.sigma_labels if sigma else spec.rho_labels
            base = ge - (len(labels) - 1)
            groups.append((ge, tuple(range(base, ge))))
    return tuple(blocks), tuple(groups)


def block_moduli(spec: SigmaRhoSpec) -> list[int]:
    return [m for _, m in block_layout(spec)[0]]


def flat_order(spec: SigmaRhoSpec) -> CoordOrder:
    """The saturation partial order on the full label alphabet."""
    return CoordOrder.flat(spec.s, block_layout(spec)[1])


def is_dominating_shape(spec: SigmaRhoSpec) -> bool:
    """One selected label; unselected labels exactly |0| and |>=1|."""
    return (len(spec.sigma_labels) == 1
            and len(spec.rho_labels) == 2
            and not spec.rho_labels[0].at_least
            and spec.rho_labels[1].at_least
            and spec.rho_labels[1].count == 1)


def max_label_count(spec: SigmaRhoSpec) -> int:
    return max(spec.pi) if spec.pi else 0


def needed_orders(spec: SigmaRhoSpec, kmax: int, n: int, windowed: bool) -> list[int]:
    """Root-of-unity orders any join in a run may request.

    Every transform length is a power of two except the tiny per-block
    moduli, so the lcm passed to the prime search stays small.
    """
    lmax = max_label_count(spec)
    top = next_pow2(8 * max(n + 2, lmax * kmax + 2, kmax + 2))
    orders = {1, 2}
    orders.update(m for m in block_moduli(spec) if m >= 1)
    t = 2
    while t <= top:
        orders.add(t)
        t *= 2
    return sorted(orders)


# -- cached index plans ----------------------------------------------------------

_PLANS: dict = {}


def _mixed_radix(digit_lists, s: int) -> np.ndarray:
    idx = np.zeros(1, dtype=np.int64)
    for digs in digit_lists:
        idx = (idx[:, None] * s + np.asarray(digs, dtype=np.int64)[None, :]).ravel()
    return idx


def sigma_sums(spec: SigmaRhoSpec, k: int) -> np.ndarray:
    """Sum of plain label counts per colouring index (saturated labels: 0)."""
    key = ("S", spec.key, k)
    if key not in _PLANS:
        S = np.zeros(1, dtype=np.int64)
        pi = np.asarray(spec.pi, dtype=np.int64)
        for _ in range(k):
            S = (S[:, None] + pi[None, :]).ravel()
        _PLANS[key] = S
    return _PLANS[key]


def _coord_triples(spec: SigmaRhoSpec):
    key = ("ct", spec.key)
    if key not in _PLANS:
        tl, tr, tt = [], [], []
        for a in range(spec.s):
            for b in range(spec.s):
                t = spec.combine_digits(a, b)
                if t is not None:
                    tl.append(a)
                    tr.append(b)
                    tt.append(t)
        _PLANS[key] = (np.array(tl, dtype=np.int64),
                       np.array(tr, dtype=np.int64),
                       np.array(tt, dtype=np.int64))
    return _PLANS[key]


def naive_pair_triples(spec: SigmaRhoSpec, k: int):
    """(left, right, target) colouring-index arrays of all combinable pairs."""
    key = ("triples", spec.key, k)
    if key not in _PLANS:
        tl, tr, tt = _coord_triples(spec)
        il = ir = it = np.zeros(1, dtype=np.int64)
        for _ in range(k):
            il = (il[:, None] * spec.s + tl[None, :]).ravel()
            ir = (ir[:, None] * spec.s + tr[None, :]).ravel()
            it = (it[:, None] * spec.s + tt[None, :]).ravel()
        _PLANS[key] = (il, ir, it)
    return _PLANS[key]


def _naive_chunks(spec: SigmaRhoSpec, k: int, cache_k: int = 8):
    """Triple chunks; large bags split on leading coordinates to bound memory."""
    if k <= cache_k:
        yield naive_pair_triples(spec, k)
        return
    tl, tr, tt = _coord_triples(spec)
    suff = naive_pair_triples(spec, cache_k)
    lead = k - cache_k
    shift = spec.s ** cache_k
    for combo in itertools.product(range(len(tl)), repeat=lead):
        pl = pr = pt = 0
        for c in combo:
            pl = pl * spec.s + int(tl[c])
            pr = pr * spec.s + int(tr[c])
            pt = pt * spec.s + int(tt[c])
        yield pl * shift + suff[0], pr * shift + suff[1], pt * shift + suff[2]


# -- naive join -------------------------------------------------------------------


def naive_join(left: MemoTable, right: MemoTable, spec: SigmaRhoSpec,
               variant: Variant, field: PrimeField | None) -> MemoTable:
    """Pairwise join over every combinable pair of child colourings.

    One field multiplication per pair in the counting variants; optimisation
    variants add sizes and keep the best per target class.
    """
    if left.bag != right.bag:
        raise ValueError("bag mismatch at join")
    k = left.k
    size = spec.s ** k
    p = field.p if field is not None else None

    if variant is Variant.EXISTENCE:
        out = np.zeros(size, dtype=np.int64)
        for il, ir, it in _naive_chunks(spec, k):
            np.bitwise_or.at(out, it, left.val[il] & right.val[ir])
        return MemoTable(left.bag, variant, out)

    if variant is Variant.COUNT:
        out = np.zeros(size, dtype=np.int64)
        for il, ir, it in _naive_chunks(spec, k):
            prod = left.val[il] * right.val[ir] % p
            field.ops.mul += prod.size
            np.add.at(out, it, prod)
        return MemoTable(left.bag, variant, out % p)

    maximizing = variant.maximizing
    best = np.full(size, NEG if maximizing else INF, dtype=np.int64)
    for il, ir, it in _naive_chunks(spec, k):
        a, b = left.val[il], right.val[ir]
        if maximizing:
            sums = np.where((a <= NEG) | (b <= NEG), NEG, a + b)
            np.maximum.at(best, it, sums)
        else:
            sums = np.where((a >= INF) | (b >= INF), INF, a + b)
            np.minimum.at(best, it, sums)
    if not variant.is_counting:
        return MemoTable(left.bag, variant, best)

    cnt = np.zeros(size, dtype=np.int64)
    for il, ir, it in _naive_chunks(spec, k):
        a, b = left.val[il], right.val[ir]
        feas = (a > NEG) & (b > NEG) if maximizing else (a < INF) & (b < INF)
        hit = feas & (a + b == best[it])
        prod = left.cnt[il] * right.cnt[ir] % p
        field.ops.mul += prod.size
        np.add.at(cnt, it[hit], prod[hit])
    return MemoTable(left.bag, variant, best, cnt % p)


# -- shared pieces of the fast joins ------------------------------------------------


def _axis_zeta(arr: np.ndarray, axis: int, groups, p: int, ops, inverse: bool) -> None:
    for ge, members in groups:
        if not members:
            continue
        idx = [slice(None)] * arr.ndim
        idx[axis] = ge
        total = arr.take(members, axis=axis).sum(axis=axis) % p
        ops.add += total.size * len(members)
        if inverse:
            arr[tuple(idx)] = (arr[tuple(idx)] - total) % p
        else:
            arr[tuple(idx)] = (arr[tuple(idx)] + total) % p


def _axis_block_dft(arr: np.ndarray, axis: int, blocks, field: PrimeField,
                    inverse: bool, inplace: bool = False) -> np.ndarray:
    from . import _kernels
    from .transforms import _dft_matrix

    mats = [(start, _dft_matrix(field, m, inverse))
            for start, m in blocks if m >= 2]
    if not mats:
        return arr
    pre_cells = arr.size // arr.shape[axis]
    field.ops.mul += sum(m.shape[0] ** 2 for _, m in mats) * pre_cells
    return _kernels.block_dft_axis(arr, axis, mats, field.p, inplace=inplace)


def _omega_matrix(field: PrimeField, L: int, inverse: bool) -> np.ndarray:
    from .transforms import _dft_matrix

    if L == 1:
        return np.ones((1, 1), dtype=np.int64)
    field.root(L)
    return _dft_matrix(field, L, inverse)


def _contract_rows(data: np.ndarray, rows: np.ndarray, field: PrimeField) -> np.ndarray:
    """sum_j data[..., j] * rows[..., j] mod p."""
    from . import _kernels

    shape = data.shape[:-1]
    L = data.shape[-1]
    field.ops.mul += data.size
    out = _kernels.contract_last(data.reshape(-1, L), rows.reshape(-1, L), field.p)
    return out.reshape(shape)


def _opt_inputs(tab: MemoTable, variant: Variant, windowed: bool, k: int):
    """Shifted size index, inclusion indicator, shift, and index range.

    Sizes are shifted by the table optimum (mirrored for maximisation) so
    that the join always extracts the smallest index; windowing keeps only
    shifts up to the bag size.
    """
    val = tab.val
    if variant.maximizing:
        feasible = val > NEG
        if not feasible.any():
            return None
        xi = int(val[feasible].max())
        shifted = np.where(feasible, xi - val, INF)
    else:
        feasible = val < INF
        if not feasible.any():
            return None
        xi = int(val[feasible].min())
        shifted = np.where(feasible, val - xi, INF)
    if windowed:
        inside = feasible & (shifted <= k)
        kap = np.where(inside, shifted, INF)
        return kap, inside.astype(np.int64), xi, k + 1
    hi = int(shifted[feasible].max())
    return shifted, feasible.astype(np.int64), xi, hi + 1


def _extract_best(masks, limit: int):
    """Smallest index with a nonzero entry in any mask, INF where none."""
    mask = masks[0]
    for m in masks[1:]:
        mask = mask | m
    mask = mask[:, :limit]
    any_hit = mask.any(axis=1)
    raw = np.argmax(mask, axis=1)
    return np.where(any_hit, raw, INF).astype(np.int64)


def _assemble_opt(kstar, xi_l, xi_r, variant: Variant):
    off = xi_l + xi_r
    if variant.maximizing:
        return np.where(kstar < INF, off - kstar, NEG).astype(np.int64)
    return np.where(kstar < INF, kstar + off, INF).astype(np.int64)


def _empty_opt_table(bag, variant: Variant, cells: int) -> MemoTable:
    val = np.full(cells, NEG if variant.maximizing else INF, dtype=np.int64)
    cnt = np.zeros(cells, dtype=np.int64) if variant.is_counting else None
    return MemoTable(bag, variant, val, cnt)


# -- the fused general fast join -----------------------------------------------------


def _fused_convolve(spec: SigmaRhoSpec, k: int, field: PrimeField,
                    v_l: np.ndarray, v_r: np.ndarray,
                    kap_l: np.ndarray | None, kap_r: np.ndarray | None,
                    kappa_in: int, read_kappa: np.ndarray | None):
    """One field's worth of the general join.

    Returns (cells, K) when a size index is used and read_kappa is None,
    the (cells,) readout at read_kappa when given, else (cells,).
    """
    p = field.p
    cells = spec.s ** k
    blocks, groups = block_layout(spec)
    S = sigma_sums(spec, k)
    iota_max = int(S.max()) if k else 0
    L = next_pow2(2 * iota_max + 1) if iota_max else 1
    use_kappa = kap_l is not None
    K = next_pow2(2 * kappa_in) if use_kappa else 1

    def forward(v, kap):
        if use_kappa:
            omK = _omega_matrix(field, K, inverse=False)
            safe = np.where(kap < kappa_in, kap, 0)
            ok = (kap < kappa_in).astype(np.int64)
            W = _kernels.modp((v % p * ok)[:, None] * omK[safe], p)
            field.ops.mul += W.size
        else:
            W = np.ascontiguousarray((v % p)[:, None])
        W = W.reshape((spec.s,) * k + (W.shape[-1],))
        for ax in range(k):
            _axis_zeta(W, ax, groups, p, field.ops, inverse=False)
        if L > 1:
            omL = _omega_matrix(field, L, inverse=False)
            W = _kernels.outer_mulmod(W.reshape(-1, W.shape[-1]), omL[S], p)
            field.ops.mul += W.size
            W = W.reshape((spec.s,) * k + (K, L))
        else:
            W = W[..., None]
        for ax in range(k):
            # W is a private buffer by construction: transform in place
            W = _axis_block_dft(W, ax, blocks, field, inverse=False, inplace=True)
        return W

    FL = forward(v_l, kap_l)
    FR = forward(v_r, kap_r)
    prod = _kernels.mulmod(FL, FR, p)
    field.ops.mul += prod.size
    del FL, FR

    for ax in range(k):
        prod = _axis_block_dft(prod, ax, blocks, field, inverse=True, inplace=True)
    if L > 1:
        invL = _omega_matrix(field, L, inverse=True)
        field.ops.mul += prod.size
        flat = _kernels.contract_mid(prod.reshape(-1, K, L), invL[S], field.p)
        flat = flat.reshape((spec.s,) * k + (K,))
    else:
        flat = np.ascontiguousarray(prod[..., 0])

    if use_kappa and read_kappa is not None:
        # Moebius first: it mixes colourings, and each colouring reads its
        # own size index; the readout is an inverse-DFT row contraction and
        # commutes with the Moebius sweep, which never touches the size axis
        for ax in range(k):
            _axis_zeta(flat, ax, groups, p, field.ops, inverse=True)
        invK = _omega_matrix(field, K, inverse=True)
        rows = invK[np.where(read_kappa < K, read_kappa, 0)]
        flat = _contract_rows(flat, rows.reshape((spec.s,) * k + (K,)), field)
        return flat.reshape(cells)
    if use_kappa:
        invK = _omega_matrix(field, K, inverse=True)
        field.ops.mul += flat.size * K
        flat = _kernels.matmul_mod_small(flat.reshape(-1, K), invK, p)
        flat = flat.reshape((spec.s,) * k + (K,))
    for ax in range(k):
        _axis_zeta(flat, ax, groups, p, field.ops, inverse=True)
    return flat.reshape(cells, K) if use_kappa else flat.reshape(cells)


def fast_join_general(left: MemoTable, right: MemoTable, spec: SigmaRhoSpec,
                      variant: Variant, field: PrimeField | None,
                      size_fields=None, use_replacement: bool = False) -> MemoTable:
    """Transform-based join for any finite/cofinite label pattern."""
    if left.bag != right.bag:
        raise ValueError("bag mismatch at join")
    k = left.k
    cells = spec.s ** k

    if variant is Variant.COUNT:
        out = _fused_convolve(spec, k, field, left.val, right.val, None, None, 0, None)
        return MemoTable(left.bag, variant, out % field.p)

    if variant is Variant.EXISTENCE:
        # counting pipeline on the 0/1 bits; the size fields jointly exceed
        # the pair-count bound, so the nonzero test is exact
        mask = None
        for F in size_fields or [field]:
            hit = _fused_convolve(spec, k, F, left.val, right.val,
                                  None, None, 0, None) % F.p != 0
            mask = hit if mask is None else (mask | hit)
        return MemoTable(left.bag, variant, mask.astype(np.int64))

    if not size_fields:
        raise ValueError("optimisation fast join requires size fields")
    li = _opt_inputs(left, variant, use_replacement, k)
    ri = _opt_inputs(right, variant, use_replacement, k)
    if li is None or ri is None:
        return _empty_opt_table(left.bag, variant, cells)
    kap_l, ind_l, xi_l, kin_l = li
    kap_r, ind_r, xi_r, kin_r = ri
    kappa_in = max(kin_l, kin_r)
    masks = [
        _fused_convolve(spec, k, sf, ind_l, ind_r, kap_l, kap_r, kappa_in, None) != 0
        for sf in size_fields]
    limit = (k + 1) if use_replacement else (kin_l + kin_r - 1)
    kstar = _extract_best(masks, limit)
    val = _assemble_opt(kstar, xi_l, xi_r, variant)
    if not variant.is_counting:
        return MemoTable(left.bag, variant, val)

    cl = np.where(kap_l < INF, left.cnt, 0) % field.p
    cr = np.where(kap_r < INF, right.cnt, 0) % field.p
    cnt = _fused_convolve(spec, k, field, cl, cr, kap_l, kap_r, kappa_in,
                          np.where(kstar < INF, kstar, 0).astype(np.int64))
    cnt = np.where(kstar < INF, cnt % field.p, 0).astype(np.int64)
    return MemoTable(left.bag, variant, val, cnt)


# -- literal partition-by-partition reference ----------------------------------------


@dataclass(frozen=True)
class JoinPartition:
    """Per-coordinate assignment to a saturated slot or a cyclic block.

    For a cofinite-sigma / finite-rho spec this is exactly the 3-way bag
    partition (saturated-sigma, low-sigma, rho); other cofiniteness patterns
    get their 2- or 4-way analogues.
    """

    choices: tuple[tuple[str, int, int], ...]  # (kind, slot/start, modulus)

    def blocks_of(self, kind: str):
        return tuple(i for i, c in enumerate(self.choices) if c[0] == kind)


def enumerate_partitions(spec: SigmaRhoSpec, k: int):
    blocks, groups = block_layout(spec)
    per_coord = [("fixed", ge, 1) for ge, _ in groups]
    per_coord += [("block", start, m) for start, m in blocks]
    return (JoinPartition(c) for c in itertools.product(per_coord, repeat=k))


def fast_join_general_by_partitions(left: MemoTable, right: MemoTable,
                                    spec: SigmaRhoSpec, variant: Variant,
                                    field: PrimeField | None, size_fields=None,
                                    use_replacement: bool = False,
                                    iota_mutation: str = "keep") -> MemoTable:
    """Step-literal general join: zeta, one combined convolution per bag
    partition over its compatible colouring slice, readout, Moebius.

    Executable specification for the fused path; exponential partition loop,
    so only sensible for small bags.  iota_mutation "zero" clears every
    convolution entry off the per-colouring label-sum diagonal before the
    readout; outputs must not change.
    """
    if left.bag != right.bag:
        raise ValueError("bag mismatch at join")
    k = left.k
    cells = spec.s ** k
    pi = np.asarray(spec.pi, dtype=np.int64)
    _, groups = block_layout(spec)

    def run_field(F: PrimeField, v_l, v_r, kap_l, kap_r, kappa_in):
        p = F.p
        use_kappa = kap_l is not None
        K = next_pow2(2 * kappa_in) if use_kappa else 1
        if use_kappa:
            ZL = np.zeros((cells, K), dtype=np.int64)
            ZR = np.zeros((cells, K), dtype=np.int64)
            okl = kap_l < kappa_in
            okr = kap_r < kappa_in
            ZL[np.flatnonzero(okl), kap_l[okl]] = v_l[okl] % p
            ZR[np.flatnonzero(okr), kap_r[okr]] = v_r[okr] % p
        else:
            ZL = (v_l % p)[:, None].copy()
            ZR = (v_r % p)[:, None].copy()
        ZL = ZL.reshape((spec.s,) * k + (-1,))
        ZR = ZR.reshape((spec.s,) * k + (-1,))
        for ax in range(k):
            _axis_zeta(ZL, ax, groups, p, F.ops, inverse=False)
            _axis_zeta(ZR, ax, groups, p, F.ops, inverse=False)
        out = np.zeros(ZL.shape, dtype=np.int64)

        for part in enumerate_partitions(spec, k):
            slot_lists = [[a] if kind == "fixed" else list(range(a, a + m))
                          for kind, a, m in part.choices]
            sel = np.ix_(*[np.asarray(sl) for sl in slot_lists]) if k else ()
            sub_l = ZL[sel] if k else ZL
            sub_r = ZR[sel] if k else ZR
            iota_max = sum(int(pi[a + m - 1]) for kind, a, m in part.choices
                           if kind == "block")
            conv_dims = tuple((m if kind == "block" else 1, CYCLIC)
                              for kind, a, m in part.choices)
            dims = conv_dims + (((K, LINEAR),) if use_kappa else ())
            dims = dims + ((iota_max + 1, LINEAR),)
            # within-slice label sums, in slice order
            Ssl = np.zeros(1, dtype=np.int64)
            for kind, a, m in part.choices:
                add = pi[a:a + m] if kind == "block" else np.zeros(1, dtype=np.int64)
                Ssl = (Ssl[:, None] + add[None, :]).ravel()
            ncell = Ssl.size

            def expand(sub):
                body = sub.reshape(ncell, -1)
                ex = np.zeros((ncell, body.shape[1], iota_max + 1), dtype=np.int64)
                ex[np.arange(ncell), :, Ssl] = body
                return Tensor(dims, ex.ravel(), F)

            conv = combined_convolution(expand(sub_l), expand(sub_r))
            res = conv.data.reshape(ncell, -1, iota_max + 1)
            if iota_mutation == "zero":
                kept = np.zeros_like(res)
                kept[np.arange(ncell), :, Ssl] = res[np.arange(ncell), :, Ssl]
                res = kept
            picked = res[np.arange(ncell), :, Ssl]
            target = sel + (slice(None),) if k else (slice(None),)
            out[target] = picked.reshape(
                tuple(len(sl) for sl in slot_lists) + (-1,))
        for ax in range(k):
            _axis_zeta(out, ax, groups, p, F.ops, inverse=True)
        return out.reshape(cells, -1)

    if variant is Variant.COUNT:
        res = run_field(field, left.val, right.val, None, None, 0)
        return MemoTable(left.bag, variant, res[:, 0] % field.p)

    if variant is Variant.EXISTENCE:
        mask = None
        for F in size_fields or [field]:
            hit = run_field(F, left.val, right.val, None, None, 0)[:, 0] % F.p != 0
            mask = hit if mask is None else (mask | hit)
        return MemoTable(left.bag, variant, mask.astype(np.int64))

    li = _opt_inputs(left, variant, use_replacement, k)
    ri = _opt_inputs(right, variant, use_replacement, k)
    if li is None or ri is None:
        return _empty_opt_table(left.bag, variant, cells)
    kap_l, ind_l, xi_l, kin_l = li
    kap_r, ind_r, xi_r, kin_r = ri
    kappa_in = max(kin_l, kin_r)
    masks = [run_field(sf, ind_l, ind_r, kap_l, kap_r, kappa_in) != 0
             for sf in (size_fields or [])]
    limit = (k + 1) if use_replacement else (kin_l + kin_r - 1)
    kstar = _extract_best(masks, limit)
    val = _assemble_opt(kstar, xi_l, xi_r, variant)
    if not variant.is_counting:
        return MemoTable(left.bag, variant, val)
    cl = np.where(kap_l < INF, left.cnt, 0)
    cr = np.where(kap_r < INF, right.cnt, 0)
    res = run_field(field, cl, cr, kap_l, kap_r, kappa_in)
    safe = np.where(kstar < INF, kstar, 0).astype(np.int64)
    cnt = res[np.arange(cells), safe]
    cnt = np.where(kstar < INF, cnt % field.p, 0).astype(np.int64)
    return MemoTable(left.bag, variant, val, cnt)


# -- dominating-set fast path ----------------------------------------------------------


def _ds_slice_indices(spec: SigmaRhoSpec, k: int):
    """Per selected-subset: flat indices of the 0/>=1 remainder block."""
    key = ("ds", spec.key, k)
    if key not in _PLANS:
        sd = spec.sigma_digits[0]
        r0, r1 = spec.rho_digits
        out = []
        for mask in range(1 << k):
            digit_lists = [[sd] if (mask >> (k - 1 - i)) & 1 else [r0, r1]
                           for i in range(k)]
            out.append(_mixed_radix(digit_lists, spec.s))
        _PLANS[key] = out
    return _PLANS[key]


def fast_join_dominating(left: MemoTable, right: MemoTable, spec: SigmaRhoSpec,
                         variant: Variant, field: PrimeField | None,
                         size_fields=None, use_replacement: bool = False) -> MemoTable:
    """Subset-fixing join for the dominating-set label shape.

    Fixes the selected vertices (2^k subsets) and runs a covering product
    over the 0/>=1 chain on the remainder; optimisation variants go through
    the size-extended cover convolution, taking the best size with a nonzero
    combination count.
    """
    if not is_dominating_shape(spec):
        raise ValueError("fast_dominating requires the dominating-set label shape")
    if left.bag != right.bag:
        raise ValueError("bag mismatch at join")
    k = left.k
    slices = _ds_slice_indices(spec, k)
    order = CoordOrder.chain(2)
    cells = spec.s ** k

    def per_slice(idx, F, v_l, v_r, kap_l, kap_r, kappa_in):
        kk = idx.size.bit_length() - 1
        if kap_l is None:
            if kk == 0:
                F.ops.mul += 1
                return v_l[idx] * v_r[idx] % F.p
            dims = ((2, LINEAR),) * kk
            return covering_product(Tensor(dims, v_l[idx], F),
                                    Tensor(dims, v_r[idx], F), order).data
        K = 2 * kappa_in - 1
        arr_l = np.zeros((idx.size, K), dtype=np.int64)
        arr_r = np.zeros((idx.size, K), dtype=np.int64)
        okl = kap_l[idx] < kappa_in
        okr = kap_r[idx] < kappa_in
        arr_l[np.flatnonzero(okl), kap_l[idx][okl]] = v_l[idx][okl] % F.p
        arr_r[np.flatnonzero(okr), kap_r[idx][okr]] = v_r[idx][okr] % F.p
        dims = ((2, LINEAR),) * kk + ((K, LINEAR),)
        conv = cover_convolution(Tensor(dims, arr_l.ravel(), F),
                                 Tensor(dims, arr_r.ravel(), F), order, kk)
        return conv.data.reshape(idx.size, K)

    if variant is Variant.COUNT:
        out = np.zeros(cells, dtype=np.int64)
        for idx in slices:
            out[idx] = per_slice(idx, field, left.val, right.val, None, None, 0)
        return MemoTable(left.bag, variant, out % field.p)

    if variant is Variant.EXISTENCE:
        mask = None
        for F in size_fields or [field]:
            out = np.zeros(cells, dtype=np.int64)
            for idx in slices:
                out[idx] = per_slice(idx, F, left.val, right.val, None, None, 0)
            hit = out % F.p != 0
            mask = hit if mask is None else (mask | hit)
        return MemoTable(left.bag, variant, mask.astype(np.int64))

    li = _opt_inputs(left, variant, use_replacement, k)
    ri = _opt_inputs(right, variant, use_replacement, k)
    if li is None or ri is None:
        return _empty_opt_table(left.bag, variant, cells)
    kap_l, ind_l, xi_l, kin_l = li
    kap_r, ind_r, xi_r, kin_r = ri
    kappa_in = max(kin_l, kin_r)
    masks = []
    for sf in size_fields or []:
        res = np.zeros((cells, 2 * kappa_in - 1), dtype=np.int64)
        for idx in slices:
            res[idx] = per_slice(idx, sf, ind_l, ind_r, kap_l, kap_r, kappa_in)
        masks.append(res != 0)
    limit = (k + 1) if use_replacement else (kin_l + kin_r - 1)
    kstar = _extract_best(masks, limit)
    val = _assemble_opt(kstar, xi_l, xi_r, variant)
    if not variant.is_counting:
        return MemoTable(left.bag, variant, val)
    cl = np.where(kap_l < INF, left.cnt, 0) % field.p
    cr = np.where(kap_r < INF, right.cnt, 0) % field.p
    res = np.zeros((cells, 2 * kappa_in - 1), dtype=np.int64)
    for idx in slices:
        res[idx] = per_slice(idx, field, cl, cr, kap_l, kap_r, kappa_in)
    safe = np.where(kstar < INF, kstar, 0).astype(np.int64)
    cnt = res[np.arange(cells), safe]
    cnt = np.where(kstar < INF, cnt % field.p, 0).astype(np.int64)
    return MemoTable(left.bag, variant, val, cnt)


# -- dispatch -----------------------------------------------------------------------


def pick_strategy(spec: SigmaRhoSpec, kmax: int, n: int) -> str:
    """Coarse work estimate: pair count of the naive join against the
    transform pipeline's cell count; fast joins lose below a size threshold."""
    if kmax <= 1:
        return "naive"
    tl, _, _ = _coord_triples(spec)
    naive_cost = float(len(tl)) ** kmax
    fast_cost = float(spec.s) ** kmax * (kmax * spec.s + 16) * 4
    return "fast_general" if fast_cost < naive_cost else "naive"


def dispatch_join(left: MemoTable, right: MemoTable, ctx: JoinContext) -> MemoTable:
    if ctx.recorder is not None:
        ctx.recorder(left.copy(), right.copy())
    if ctx.strategy == "naive":
        return naive_join(left, right, ctx.spec, ctx.variant, ctx.field)
    if ctx.strategy == "fast_dominating":
        return fast_join_dominating(left, right, ctx.spec, ctx.variant, ctx.field,
                                    ctx.size_fields, ctx.windowed)
    if ctx.strategy == "fast_general":
        return fast_join_general(left, right, ctx.spec, ctx.variant, ctx.field,
                                 ctx.size_fields, ctx.windowed)
    raise ValueError(f"unknown join strategy {ctx.strategy!r}")
