"""Generalized-domination problem specs and the table DP over nice decompositions.

A problem is a pair of integer sets (sigma, rho), each finite or cofinite.
Partial solutions are classified per bag vertex by a label: which side the
vertex is on (selected / unselected) and how many selected neighbours it has,
saturating at the side's threshold when the side is cofinite.  Tables map
label colourings (mixed-radix indices, base s) to values whose meaning
depends on the problem variant.

Stored optimisation values count only vertices already forgotten; a vertex's
own membership is charged when it is forgotten.  Joins therefore add child
values without any double-counting correction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import graphio
from .graphio import FORGET, INTRODUCE, JOIN, LEAF, Graph, NiceTreeDecomposition, TreeDecomposition
from .modring import PrimeField, ResidueValue, choose_prime, crt_reconstruct

INF = np.int64(1) << 40
NEG = -INF


class Variant(enum.Enum):
    EXISTENCE = "existence"
    MIN = "min"
    MAX = "max"
    COUNT = "count"
    COUNT_MIN = "count_min"
    COUNT_MAX = "count_max"

    @property
    def is_counting(self) -> bool:
        return self in (Variant.COUNT, Variant.COUNT_MIN, Variant.COUNT_MAX)

    @property
    def is_opt(self) -> bool:
        return self in (Variant.MIN, Variant.MAX, Variant.COUNT_MIN, Variant.COUNT_MAX)

    @property
    def maximizing(self) -> bool:
        return self in (Variant.MAX, Variant.COUNT_MAX)


@dataclass(frozen=True)
class SideSet:
    """Finite or cofinite subset of the naturals.

    values is the set itself when finite, or the (finite) complement when
    cofinite; cofinite with empty complement is all of N.
    """

    cofinite: bool
    values: frozenset[int]

    @staticmethod
    def finite(vals) -> "SideSet":
        return SideSet(False, frozenset(int(v) for v in vals))

    @staticmethod
    def cofinite_from_complement(vals) -> "SideSet":
        return SideSet(True, frozenset(int(v) for v in vals))

    @staticmethod
    def all_naturals() -> "SideSet":
        return SideSet(True, frozenset())

    def contains(self, x: int) -> bool:
        return (x not in self.values) if self.cofinite else (x in self.values)

    def describe(self) -> str:
        vals = ",".join(str(v) for v in sorted(self.values))
        return f"cofinite:{vals}" if self.cofinite else ("{" + vals + "}")


@dataclass(frozen=True)
class Label:
    """One vertex label: side, selected-neighbour count, saturation flag."""

    sigma: bool
    count: int
    at_least: bool

    def __str__(self) -> str:
        side = "s" if self.sigma else "r"
        return f"|>={self.count}|{side}" if self.at_least else f"|{self.count}|{side}"


def _side_labels(side: SideSet, sigma: bool) -> tuple[list[Label], int]:
    """Label list and threshold for one side, per the finite/cofinite cases."""
    if not side.cofinite:
        if not side.values:
            return [], -1
        ell = max(side.values)
        return [Label(sigma, c, False) for c in range(ell + 1)], ell
    if not side.values:
        return [Label(sigma, 0, True)], 0
    ell = max(side.values) + 1
    labels = [Label(sigma, c, False) for c in range(ell)]
    labels.append(Label(sigma, ell, True))
    return labels, ell


class SigmaRhoSpec:
    """A [sigma,rho] problem with its derived label alphabet."""

    def __init__(self, sigma: SideSet, rho: SideSet, name: str | None = None):
        self.sigma = sigma
        self.rho = rho
        self.name = name
        s_labels, self.ell_sigma = _side_labels(sigma, True)
        r_labels, self.ell_rho = _side_labels(rho, False)
        if not s_labels and not r_labels:
            raise ValueError("label alphabet is empty")
        self.sigma_labels = tuple(s_labels)
        self.rho_labels = tuple(r_labels)
        self.labels: tuple[Label, ...] = tuple(s_labels + r_labels)
        self.s = len(self.labels)
        self.key = (sigma.cofinite, tuple(sorted(sigma.values)),
                    rho.cofinite, tuple(sorted(rho.values)))
        # digit helpers
        self.sigma_digits = tuple(range(len(s_labels)))
        self.rho_digits = tuple(range(len(s_labels), self.s))
        self.intro_digits = tuple(i for i, lab in enumerate(self.labels)
                                  if lab.count == 0)
        self.valid_digits = tuple(
            i for i, lab in enumerate(self.labels)
            if lab.at_least or (self.sigma if lab.sigma else self.rho).contains(lab.count))
        # label projection pi: count for plain labels, 0 for saturated ones
        self.pi = tuple(0 if lab.at_least else lab.count for lab in self.labels)

    def __repr__(self) -> str:
        return f"SigmaRhoSpec(sigma={self.sigma.describe()}, rho={self.rho.describe()})"

    def __eq__(self, other) -> bool:
        return isinstance(other, SigmaRhoSpec) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def digit(self, label: Label) -> int:
        return self.labels.index(label)

    def combine_digits(self, a: int, b: int) -> int | None:
        """Label addition for joins: counts add, saturating sides clamp.

        Returns None when the pair disagrees on sides or leaves a finite
        label set.
        """
        la, lb = self.labels[a], self.labels[b]
        if la.sigma != lb.sigma:
            return None
        labs = self.sigma_labels if la.sigma else self.rho_labels
        base = 0 if la.sigma else len(self.sigma_labels)
        total = la.count + lb.count
        top = labs[-1]
        if top.at_least and (la.at_least or lb.at_least or total >= top.count):
            return base + len(labs) - 1
        if total >= len(labs) or labs[total].at_least:
            # finite side overflow (or only the saturated label remains)
            if top.at_least:
                return base + len(labs) - 1
            return None
        return base + total


def build_label_set(sigma: SideSet, rho: SideSet, name: str | None = None) -> SigmaRhoSpec:
    return SigmaRhoSpec(sigma, rho, name)


# -- presets (classic problem table) -----------------------------------------

def _preset_table() -> dict[str, tuple[SideSet, SideSet]]:
    N = SideSet.all_naturals()
    co = SideSet.cofinite_from_complement
    fin = SideSet.finite
    return {
        "independent_set": (fin([0]), N),
        "dominating_set": (N, co([0])),
        "strong_stable_set": (fin([0]), fin([0, 1])),
        "perfect_code": (fin([0]), fin([1])),
        "independent_dominating_set": (fin([0]), co([0])),
        "perfect_dominating_set": (N, fin([1])),
        "total_dominating_set": (co([0]), co([0])),
        "total_perfect_dominating_set": (fin([1]), fin([1])),
        "nearly_perfect_set": (N, fin([0, 1])),
        "total_nearly_perfect_set": (fin([0, 1]), fin([0, 1])),
        "weakly_perfect_dominating_set": (fin([0, 1]), fin([1])),
    }


PRESET_NAMES = tuple(_preset_table().keys()) + (
    "induced_bounded_degree", "p_dominating_set", "induced_p_regular")


def presets(name: str, p: int | None = None) -> SigmaRhoSpec:
    """Named problem spec; the three parameterized families require p."""
    table = _preset_table()
    if name in table:
        sigma, rho = table[name]
        return SigmaRhoSpec(sigma, rho, name)
    if name == "induced_bounded_degree":
        if p is None:
            raise ValueError("induced_bounded_degree requires a degree bound")
        return SigmaRhoSpec(SideSet.finite(range(p + 1)), SideSet.all_naturals(),
                            f"{name}({p})")
    if name == "p_dominating_set":
        if p is None:
            raise ValueError("p_dominating_set requires p")
        return SigmaRhoSpec(SideSet.all_naturals(),
                            SideSet.cofinite_from_complement(range(p)), f"{name}({p})")
    if name == "induced_p_regular":
        if p is None:
            raise ValueError("induced_p_regular requires p")
        return SigmaRhoSpec(SideSet.finite([p]), SideSet.all_naturals(), f"{name}({p})")
    raise ValueError(f"unknown preset {name!r}")


# -- state colourings ---------------------------------------------------------

@dataclass(frozen=True)
class StateColouring:
    """Sequence of labels in bag order and its base-s index (row-major)."""

    labels: tuple[Label, ...]
    index: int

    @staticmethod
    def from_labels(spec: SigmaRhoSpec, labels) -> "StateColouring":
        labels = tuple(labels)
        idx = 0
        for lab in labels:
            idx = idx * spec.s + spec.digit(lab)
        return StateColouring(labels, idx)

    @staticmethod
    def from_index(spec: SigmaRhoSpec, index: int, k: int) -> "StateColouring":
        digs = []
        x = index
        for _ in range(k):
            digs.append(x % spec.s)
            x //= spec.s
        labels = tuple(spec.labels[d] for d in reversed(digs))
        return StateColouring(labels, index)


def digits_of(index: int, s: int, k: int) -> tuple[int, ...]:
    out = []
    for _ in range(k):
        out.append(index % s)
        index //= s
    return tuple(reversed(out))


# -- memo tables ---------------------------------------------------------------

@dataclass
class MemoTable:
    """Per-node DP table over the s^k colouring space.

    val carries the variant payload: 0/1 bits (existence), sizes with an
    INF/NEG sentinel (optimisation), or residues (counting).  Counting
    optimisation additionally carries cnt, the residue of the number of
    optimal partial solutions per colouring.
    """

    bag: tuple[int, ...]
    variant: Variant
    val: np.ndarray
    cnt: np.ndarray | None = None

    @property
    def k(self) -> int:
        return len(self.bag)

    def copy(self) -> "MemoTable":
        return MemoTable(self.bag, self.variant, self.val.copy(),
                         None if self.cnt is None else self.cnt.copy())


def _empty_payload(variant: Variant, size: int, p: int | None):
    if variant is Variant.EXISTENCE:
        return np.zeros(size, dtype=np.int64), None
    if variant in (Variant.MIN, Variant.COUNT_MIN):
        val = np.full(size, INF, dtype=np.int64)
    elif variant in (Variant.MAX, Variant.COUNT_MAX):
        val = np.full(size, NEG, dtype=np.int64)
    else:
        val = np.zeros(size, dtype=np.int64)
    cnt = np.zeros(size, dtype=np.int64) if variant.is_opt and variant.is_counting else None
    return val, cnt


def _infeasible(variant: Variant):
    if variant is Variant.EXISTENCE:
        return 0
    if variant is Variant.COUNT:
        return 0
    return NEG if variant.maximizing else INF


def leaf_table(spec: SigmaRhoSpec, variant: Variant, field: PrimeField | None) -> MemoTable:
    """Single empty-colouring entry: size 0, existence true, count 1."""
    if variant in (Variant.EXISTENCE, Variant.COUNT):
        return MemoTable((), variant, np.ones(1, dtype=np.int64))
    val = np.zeros(1, dtype=np.int64)
    cnt = np.ones(1, dtype=np.int64) if variant.is_counting else None
    return MemoTable((), variant, val, cnt)


def introduce_table(tab: MemoTable, v: int, spec: SigmaRhoSpec, variant: Variant) -> MemoTable:
    """Insert an isolated vertex: count-0 labels copy the child, others die."""
    if v in tab.bag:
        raise ValueError("vertex already in bag")
    bag = tuple(sorted(tab.bag + (v,)))
    pos = bag.index(v)
    k = len(tab.bag)
    child = tab.val.reshape((spec.s,) * k)
    new = np.full((spec.s,) * (k + 1), _infeasible(variant), dtype=np.int64)
    sel = [slice(None)] * (k + 1)
    for d in spec.intro_digits:
        sel[pos] = d
        new[tuple(sel)] = child
    cnt = None
    if tab.cnt is not None:
        ccnt = tab.cnt.reshape((spec.s,) * k)
        cnt = np.zeros((spec.s,) * (k + 1), dtype=np.int64)
        for d in spec.intro_digits:
            sel[pos] = d
            cnt[tuple(sel)] = ccnt
        cnt = cnt.ravel()
    return MemoTable(bag, variant, new.ravel(), cnt)


def _merge_two(variant: Variant, a_val, b_val, a_cnt, b_cnt, p: int | None):
    """Merge two payload slices that fall into the same class."""
    if variant is Variant.EXISTENCE:
        return a_val | b_val, None
    if variant is Variant.COUNT:
        return (a_val + b_val) % p, None
    if not variant.is_counting:
        merged = np.maximum(a_val, b_val) if variant.maximizing else np.minimum(a_val, b_val)
        return merged, None
    best = np.maximum(a_val, b_val) if variant.maximizing else np.minimum(a_val, b_val)
    cnt = (np.where(a_val == best, a_cnt, 0) + np.where(b_val == best, b_cnt, 0)) % p
    return best, cnt


def _shift_plan(spec: SigmaRhoSpec):
    """Per-digit neighbour-count shift: gather source per target digit,
    merge pairs for the saturated labels, dead targets for count zero.

    Plain labels move up by one (count 0 becomes infeasible), a saturated
    label absorbs the threshold-1 class and itself, and a finite side's top
    count falls off the end.
    """
    src = list(range(spec.s))
    dead = []
    merges = []
    for side_labels, base in ((spec.sigma_labels, 0),
                              (spec.rho_labels, len(spec.sigma_labels))):
        for i, lab in enumerate(side_labels):
            d = base + i
            if lab.at_least:
                if lab.count >= 1:
                    merges.append((d, base + i - 1))
            elif lab.count > 0:
                src[d] = base + i - 1
            else:
                dead.append(d)
    return np.array(src, dtype=np.int64), tuple(dead), tuple(merges)


def _shift_along(vv, cc, axis, spec, variant, p):
    """Shifted copy of a table view along one label axis."""
    key = ("shift", spec.key)
    plan = _SHIFT_PLANS.get(key)
    if plan is None:
        plan = _SHIFT_PLANS[key] = _shift_plan(spec)
    src, dead, merges = plan
    sv = np.take(vv, src, axis=axis)
    sc = np.take(cc, src, axis=axis) if cc is not None else None
    sel = [slice(None)] * vv.ndim
    for d, below in merges:
        sel[axis] = d
        tgt = tuple(sel)
        sel[axis] = below
        blw = tuple(sel)
        mv, mc = _merge_two(variant, vv[blw], vv[tgt],
                            None if cc is None else cc[blw],
                            None if cc is None else cc[tgt], p)
        sel[axis] = d
        sv[tuple(sel)] = mv
        if sc is not None:
            sc[tuple(sel)] = mc
    for d in dead:
        sel[axis] = d
        sv[tuple(sel)] = _infeasible(variant)
        if sc is not None:
            sc[tuple(sel)] = 0
    return sv, sc


_SHIFT_PLANS: dict = {}


def _apply_edge(val, cnt, bag, u, v, spec, variant, p):
    """Forget-node edge update for edge {u,v}: shift u's counts where v is
    selected, then v's counts where u is selected (the two halves commute).

    Selected-side digits are the leading contiguous block of the label
    axis, so each half touches one basic slice of the table.
    """
    k = len(bag)
    s = spec.s
    pu, pv = bag.index(u), bag.index(v)
    nsig = len(spec.sigma_labels)
    shp = (s,) * k

    def half_update(val, cnt, shift_pos, cond_pos):
        vv = val.reshape(shp)
        cc = cnt.reshape(shp) if cnt is not None else None
        out_v = vv.copy()
        out_c = cc.copy() if cc is not None else None
        sel = [slice(None)] * k
        sel[cond_pos] = slice(0, nsig)
        win = tuple(sel)
        sv, sc = _shift_along(vv[win], None if cc is None else cc[win],
                              shift_pos, spec, variant, p)
        out_v[win] = sv
        if out_c is not None:
            out_c[win] = sc
        return out_v.ravel(), None if out_c is None else out_c.ravel()

    val, cnt = half_update(val, cnt, pu, pv)
    val, cnt = half_update(val, cnt, pv, pu)
    return val, cnt


def forget_table(tab: MemoTable, v: int, incident_edges, spec: SigmaRhoSpec,
                 variant: Variant, field: PrimeField | None) -> MemoTable:
    """Apply this node's edges, then project v out over its valid labels.

    Optimisation variants charge +1 here when v is selected, keeping stored
    values equal to the partial-solution size outside the bag.
    """
    if v not in tab.bag:
        raise ValueError("vertex not in bag")
    p = field.p if field is not None else None
    val, cnt = tab.val, tab.cnt
    for (a, b) in incident_edges:
        u = a if b == v else b
        if u == v or u not in tab.bag:
            raise ValueError(f"edge {(a, b)} not applicable at forget({v})")
        val, cnt = _apply_edge(val, cnt, tab.bag, u, v, spec, variant, p)

    k = len(tab.bag)
    pos = tab.bag.index(v)
    bag = tuple(x for x in tab.bag if x != v)
    shape = (spec.s,) * k
    vv = val.reshape(shape)
    cc = cnt.reshape(shape) if cnt is not None else None
    out_v = None
    out_c = None
    sel = [slice(None)] * k
    for d in spec.valid_digits:
        sel[pos] = d
        bonus = 1 if (variant.is_opt and d in set(spec.sigma_digits)) else 0
        piece = vv[tuple(sel)]
        if bonus:
            piece = np.where(piece >= INF, INF, np.where(piece <= NEG, NEG, piece + 1))
        piece_c = cc[tuple(sel)] if cc is not None else None
        if out_v is None:
            out_v = piece.copy()
            out_c = piece_c.copy() if piece_c is not None else None
        else:
            out_v, out_c = _merge_two(variant, out_v, piece, out_c, piece_c, p)
    if out_v is None:
        size = spec.s ** (k - 1)
        out_v = np.full(size, _infeasible(variant), dtype=np.int64)
        out_c = np.zeros(size, dtype=np.int64) if cnt is not None else None
    if variant is Variant.COUNT and p is not None:
        out_v = out_v % p
    return MemoTable(bag, variant, np.asarray(out_v).ravel(),
                     None if out_c is None else np.asarray(out_c).ravel())


# -- solve orchestration -------------------------------------------------------

@dataclass
class SolveReport:
    answer: object = None
    width: int = 0
    nice_nodes: int = 0
    join_nodes: int = 0
    primes: tuple[int, ...] = ()
    ops: dict | None = None
    strategy: str = ""


def _needed_orders(spec: SigmaRhoSpec, kmax: int, n: int, windowed: bool) -> list[int]:
    from . import joins

    return joins.needed_orders(spec, kmax, n, windowed)


def _count_primes(n: int) -> int:
    # primes sit just above 2^24 so the numeric kernels stay exact; their
    # product must exceed the 2^n counting bound
    return max(1, math.ceil(n / 24)) + 1


_FIELD_CACHE: dict = {}


def _cached_prime(orders: tuple[int, ...], floor: int) -> PrimeField:
    """Fields are expensive to derive (prime scan, root search) and safe to
    share; the operation counter keeps aggregating across uses."""
    key = (orders, floor)
    if key not in _FIELD_CACHE:
        _FIELD_CACHE[key] = choose_prime(orders, floor)
    return _FIELD_CACHE[key]


def solve(g: Graph, spec: SigmaRhoSpec, variant: Variant,
          td: TreeDecomposition | None = None,
          join_strategy: str = "auto",
          use_replacement: str = "auto",
          join_recorder=None,
          report: SolveReport | None = None):
    """Answer of the DP over a nice decomposition of g.

    join_strategy is naive | fast_general | fast_dominating | auto; counting
    variants run once per CRT prime and recombine at the (empty) root bag.
    """
    from . import joins

    if td is None:
        td = graphio.min_fill_heuristic(g)
    bad = graphio.validate_td(g, td)
    if bad is not None:
        raise graphio.TdError(str(bad))
    nice = graphio.make_nice(td, g)
    if join_strategy == "fast_dominating" and not joins.is_dominating_shape(spec):
        raise ValueError("fast_dominating requires the dominating-set label shape")

    kmax = max((len(nd.bag) for nd in nice.nodes if nd.kind == JOIN), default=0)
    windowed = _replacement_enabled(use_replacement, spec, variant)
    strategy = join_strategy
    if strategy == "auto":
        strategy = joins.pick_strategy(spec, kmax, g.n)

    if report is not None:
        report.width = nice.width
        report.nice_nodes = len(nice.nodes)
        report.join_nodes = nice.join_count()
        report.strategy = strategy

    orders = _needed_orders(spec, kmax, g.n, windowed)
    used_fields: dict[int, tuple[PrimeField, dict]] = {}

    def register(f: PrimeField) -> PrimeField:
        if id(f) not in used_fields:
            used_fields[id(f)] = (f, f.ops.snapshot())
        return f

    def run(field: PrimeField | None, size_fields) -> object:
        ctx = joins.JoinContext(spec=spec, variant=variant, field=field,
                                size_fields=size_fields, strategy=strategy,
                                windowed=windowed, n=g.n,
                                recorder=join_recorder)
        tables: dict[int, MemoTable] = {}
        for i, nd in enumerate(nice.nodes):
            if nd.kind == LEAF:
                tables[i] = leaf_table(spec, variant, field)
            elif nd.kind == INTRODUCE:
                tables[i] = introduce_table(tables.pop(nd.children[0]), nd.vertex,
                                            spec, variant)
            elif nd.kind == FORGET:
                tables[i] = forget_table(tables.pop(nd.children[0]), nd.vertex,
                                         nd.edges, spec, variant, field)
            else:
                left = tables.pop(nd.children[0])
                right = tables.pop(nd.children[1])
                tables[i] = joins.dispatch_join(left, right, ctx)
        root = tables[nice.root]
        return root

    orders_key = tuple(orders)

    def opt_size_fields() -> list[PrimeField]:
        # exact nonzero detection for indicator pipelines: each convolution
        # entry is at most (sum of left entries) * (sum of right entries),
        # so primes whose product exceeds s^2k make zero tests exact
        bound = spec.s ** (2 * kmax) if kmax else 4
        fields = []
        floor = 1 << 24
        prod = 1
        while prod <= bound:
            f = register(_cached_prime(orders_key, floor))
            fields.append(f)
            prod *= f.p
            floor = f.p
        return fields

    needs_field = variant.is_counting or variant is Variant.EXISTENCE
    uses_fast = strategy in ("fast_general", "fast_dominating")

    if variant in (Variant.MIN, Variant.MAX):
        sfields = opt_size_fields() if uses_fast else []
        root = run(None, sfields)
        ans = int(root.val[0])
        if report is not None:
            report.primes = tuple(f.p for f in sfields)
            report.ops = _ops_diff(used_fields)
        return None if (ans >= INF or ans <= NEG) else ans

    if variant is Variant.EXISTENCE:
        if strategy == "naive":
            root = run(None, [])
            return bool(root.val[0])
        # fast joins run the counting pipeline on the 0/1 tables; the size
        # fields jointly exceed the pair-count bound, so zero tests are exact
        sfields = opt_size_fields()
        root = run(None, sfields)
        if report is not None:
            report.primes = tuple(f.p for f in sfields)
            report.ops = _ops_diff(used_fields)
        return bool(root.val[0])

    # counting variants: one full run per CRT prime
    fields = []
    floor = 1 << 24
    for _ in range(_count_primes(g.n)):
        f = register(_cached_prime(orders_key, floor))
        fields.append(f)
        floor = f.p
    sfields = opt_size_fields() if (uses_fast and variant.is_opt) else []
    residues = []
    sizes = []
    for f in fields:
        root = run(f, sfields)
        if variant is Variant.COUNT:
            residues.append(int(root.val[0]) % f.p)
        else:
            sizes.append(int(root.val[0]))
            residues.append(int(root.cnt[0]) % f.p)
    if report is not None:
        report.primes = tuple(f.p for f in fields) + tuple(f.p for f in sfields)
        report.ops = _ops_diff(used_fields)
    count = crt_reconstruct(ResidueValue(tuple(residues)), fields)
    if variant is Variant.COUNT:
        return count
    size = sizes[0]
    if any(s != size for s in sizes):
        raise AssertionError("size disagreement across CRT runs")
    if size >= INF or size <= NEG:
        return None
    return (int(size), count)


def _replacement_enabled(flag: str, spec: SigmaRhoSpec, variant: Variant) -> bool:
    if flag == "on":
        return True
    if flag == "off":
        return False
    # documented to satisfy the replacement property: dominating set and
    # total dominating set
    return variant.is_opt and spec.name in ("dominating_set", "total_dominating_set")


def _ops_diff(used_fields) -> dict:
    tot: dict[str, int] = {"add": 0, "sub": 0, "mul": 0, "pow": 0, "inv": 0}
    for f, before in used_fields.values():
        now = f.ops.snapshot()
        for k in tot:
            tot[k] += now[k] - before[k]
    return tot
