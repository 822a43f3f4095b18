"""Independent brute-force ground truth.

Nothing here shares table or transform code with the solver: the subset
check walks the problem definition literally, counts are plain Python
integers, and the join oracle re-derives label addition from the label
objects and merges by sorting instead of scatter updates.
"""

from __future__ import annotations

import itertools

import numpy as np

from .dpengine import INF, NEG, Label, MemoTable, SigmaRhoSpec, Variant
from .graphio import Graph
from .modring import PrimeField

MAX_BRUTE_N = 24


def brute_force_all(g: Graph, spec: SigmaRhoSpec) -> dict:
    """All six variant answers of one subset sweep."""
    if g.n > MAX_BRUTE_N:
        raise ValueError(f"brute force limited to n <= {MAX_BRUTE_N}")
    n = g.n
    nb = [0] * n
    for v in range(n):
        for u in g.adjacency[v]:
            nb[v] |= 1 << u
    best_min = None
    best_max = None
    count = 0
    count_min = 0
    count_max = 0
    for D in range(1 << n):
        ok = True
        for v in range(n):
            deg = (nb[v] & D).bit_count()
            if (D >> v) & 1:
                if not spec.sigma.contains(deg):
                    ok = False
                    break
            elif not spec.rho.contains(deg):
                ok = False
                break
        if not ok:
            continue
        sz = D.bit_count()
        count += 1
        if best_min is None or sz < best_min:
            best_min, count_min = sz, 1
        elif sz == best_min:
            count_min += 1
        if best_max is None or sz > best_max:
            best_max, count_max = sz, 1
        elif sz == best_max:
            count_max += 1
    return {
        Variant.EXISTENCE: count > 0,
        Variant.MIN: best_min,
        Variant.MAX: best_max,
        Variant.COUNT: count,
        Variant.COUNT_MIN: None if best_min is None else (best_min, count_min),
        Variant.COUNT_MAX: None if best_max is None else (best_max, count_max),
    }


def brute_force_solve(g: Graph, spec: SigmaRhoSpec, variant: Variant):
    """Enumerate all vertex subsets and check the membership conditions."""
    return brute_force_all(g, spec)[variant]


# -- join oracle -----------------------------------------------------------------


def _combine_labels(spec: SigmaRhoSpec, la: Label, lb: Label) -> Label | None:
    """Label addition re-derived from the label semantics."""
    if la.sigma != lb.sigma:
        return None
    labels = spec.sigma_labels if la.sigma else spec.rho_labels
    top = labels[-1]
    total = la.count + lb.count
    if top.at_least:
        if la.at_least or lb.at_least or total >= top.count:
            return top
        return labels[total]
    if total > top.count:
        return None
    return labels[total]


_ORACLE_PLANS: dict = {}


def _oracle_triples(spec: SigmaRhoSpec, k: int):
    """All (left, right, target) index triples from explicit label pairs.

    Per-coordinate combinable label pairs come straight from the label
    semantics; the k-fold expansion walks their product with plain Python
    index accumulation.
    """
    key = (spec.key, k)
    if key in _ORACLE_PLANS:
        return _ORACLE_PLANS[key]
    digit_of = {lab: i for i, lab in enumerate(spec.labels)}
    coord_pairs = []
    for a in spec.labels:
        for b in spec.labels:
            t = _combine_labels(spec, a, b)
            if t is not None:
                coord_pairs.append((digit_of[a], digit_of[b], digit_of[t]))

    il, ir, it = [], [], []
    for combo in itertools.product(coord_pairs, repeat=k):
        xl = xr = xt = 0
        for a, b, t in combo:
            xl = xl * spec.s + a
            xr = xr * spec.s + b
            xt = xt * spec.s + t
        il.append(xl)
        ir.append(xr)
        it.append(xt)
    plan = (np.array(il, dtype=np.int64), np.array(ir, dtype=np.int64),
            np.array(it, dtype=np.int64))
    _ORACLE_PLANS[key] = plan
    return plan


def naive_table_join_oracle(left: MemoTable, right: MemoTable, spec: SigmaRhoSpec,
                            variant: Variant, field: PrimeField | None) -> MemoTable:
    """Reference join: group the pair list by target and fold each group."""
    if left.bag != right.bag:
        raise ValueError("bag mismatch")
    k = left.k
    if k > 8:
        raise ValueError("join oracle limited to k <= 8")
    il, ir, it = _oracle_triples(spec, k)
    size = spec.s ** k
    p = field.p if field is not None else None

    order = np.argsort(it, kind="stable")
    il, ir, it = il[order], ir[order], it[order]
    starts = np.flatnonzero(np.r_[True, it[1:] != it[:-1]])
    targets = it[starts]

    def grouped(values, reducer):
        out_full = np.full(size, fill, dtype=np.int64)
        out_full[targets] = reducer(values, starts)
        return out_full

    if variant is Variant.EXISTENCE:
        fill = 0
        vals = left.val[il] & right.val[ir]
        return MemoTable(left.bag, variant, grouped(vals, np.maximum.reduceat))

    if variant is Variant.COUNT:
        fill = 0
        vals = left.val[il] * right.val[ir] % p
        out = grouped(vals, np.add.reduceat) % p
        return MemoTable(left.bag, variant, out)

    maximizing = variant.maximizing
    a, b = left.val[il], right.val[ir]
    if maximizing:
        fill = NEG
        sums = np.where((a <= NEG) | (b <= NEG), NEG, a + b)
        best = grouped(sums, np.maximum.reduceat)
    else:
        fill = INF
        sums = np.where((a >= INF) | (b >= INF), INF, a + b)
        best = grouped(sums, np.minimum.reduceat)
    if not variant.is_counting:
        return MemoTable(left.bag, variant, best)
    feas = (sums > NEG) if maximizing else (sums < INF)
    prods = left.cnt[il] * right.cnt[ir] % p
    hit = np.where(feas & (sums == best[it]), prods, 0)
    fill = 0
    cnt = grouped(hit, np.add.reduceat) % p
    return MemoTable(left.bag, variant, best, cnt)
