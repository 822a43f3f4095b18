"""Graphs, tree decompositions, PACE-2017 file formats, and nice-form conversion.

Vertices are 0-based in memory and 1-based on disk (PACE convention).  The
nice decomposition attaches every graph edge to exactly one forget node: the
lowest forget of an endpoint whose child bag still contains the other
endpoint.  Dynamic programming applies an edge exactly where it is attached,
so bag-internal edges are invisible until one endpoint leaves the bag.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class GraphParseError(Exception):
    pass


class TdError(Exception):
    pass


class Graph:
    """Simple undirected graph: no self-loops, no parallel edges."""

    def __init__(self, n: int, edges):
        self.n = n
        seen = set()
        adj = [[] for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise GraphParseError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphParseError(f"vertex id out of range in edge {(u, v)}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphParseError(f"duplicate edge {key}")
            seen.add(key)
            adj[u].append(v)
            adj[v].append(u)
        self.adjacency = tuple(tuple(sorted(a)) for a in adj)
        self.edges = tuple(sorted(seen))
        self.m = len(self.edges)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]


@dataclass
class TreeDecomposition:
    bags: list[frozenset[int]]
    tree_edges: list[tuple[int, int]]

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=1) - 1

    def node_count(self) -> int:
        return len(self.bags)


@dataclass(frozen=True)
class Violation:
    kind: str  # coverage | edge-coverage | connectivity | not-a-tree
    witness: object

    def __str__(self) -> str:
        return f"{self.kind} violated (witness: {self.witness})"


def validate_td(g: Graph, td: TreeDecomposition) -> Violation | None:
    """First violated tree-decomposition property, or None when valid."""
    nn = len(td.bags)
    if nn == 0:
        return Violation("not-a-tree", "no nodes")
    adj = [[] for _ in range(nn)]
    if len(td.tree_edges) != nn - 1:
        return Violation("not-a-tree", f"{len(td.tree_edges)} edges on {nn} nodes")
    for a, b in td.tree_edges:
        if not (0 <= a < nn and 0 <= b < nn) or a == b:
            return Violation("not-a-tree", (a, b))
        adj[a].append(b)
        adj[b].append(a)
    seen = [False] * nn
    stack = [0]
    seen[0] = True
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if not seen[y]:
                seen[y] = True
                stack.append(y)
    if not all(seen):
        return Violation("not-a-tree", f"node {seen.index(False)} unreachable")

    covered = set().union(*td.bags) if td.bags else set()
    for v in range(g.n):
        if v not in covered:
            return Violation("coverage", v)
    for u, v in g.edges:
        if not any(u in b and v in b for b in td.bags):
            return Violation("edge-coverage", (u, v))
    for v in range(g.n):
        holding = [i for i in range(nn) if v in td.bags[i]]
        seen_v = {holding[0]}
        stack = [holding[0]]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen_v and v in td.bags[y]:
                    seen_v.add(y)
                    stack.append(y)
        if len(seen_v) != len(holding):
            return Violation("connectivity", v)
    return None


# -- PACE 2017 formats -------------------------------------------------------

def parse_graph(text: str) -> Graph:
    """Parse PACE `.gr` text: `p tw <n> <m>` then m 1-based edge lines."""
    n = m = None
    edges = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if n is not None:
                raise GraphParseError(f"line {ln}: duplicate header")
            if len(parts) != 4 or parts[1] != "tw":
                raise GraphParseError(f"line {ln}: malformed header {line!r}")
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphParseError(f"line {ln}: non-integer header fields")
            if n < 0 or m < 0:
                raise GraphParseError(f"line {ln}: negative header fields")
            continue
        if n is None:
            raise GraphParseError(f"line {ln}: edge before header")
        if len(parts) != 2:
            raise GraphParseError(f"line {ln}: malformed edge line {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"line {ln}: non-integer edge {line!r}")
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphParseError(f"line {ln}: id out of range in {line!r}")
        edges.append((u - 1, v - 1))
    if n is None:
        raise GraphParseError("missing `p tw` header")
    if len(edges) != m:
        raise GraphParseError(f"edge-count mismatch: header says {m}, found {len(edges)}")
    try:
        return Graph(n, edges)
    except GraphParseError as exc:
        raise GraphParseError(str(exc))


def parse_td(text: str, g: Graph) -> TreeDecomposition:
    """Parse PACE `.td` text and validate it against g."""
    header = None
    bags: dict[int, frozenset[int]] = {}
    tedges = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "s":
            if header is not None:
                raise TdError(f"line {ln}: duplicate solution line")
            if len(parts) != 5 or parts[1] != "td":
                raise TdError(f"line {ln}: malformed `s td` line")
            header = tuple(int(x) for x in parts[2:])
            continue
        if header is None:
            raise TdError(f"line {ln}: content before `s td` line")
        if parts[0] == "b":
            try:
                bid = int(parts[1])
                verts = [int(x) for x in parts[2:]]
            except (ValueError, IndexError):
                raise TdError(f"line {ln}: malformed bag line")
            if bid in bags:
                raise TdError(f"line {ln}: duplicate bag id {bid}")
            if not (1 <= bid <= header[0]):
                raise TdError(f"line {ln}: bag id {bid} out of range")
            if any(not (1 <= v <= g.n) for v in verts):
                raise TdError(f"line {ln}: vertex id out of range")
            bags[bid] = frozenset(v - 1 for v in verts)
            continue
        if len(parts) != 2:
            raise TdError(f"line {ln}: malformed tree edge {line!r}")
        a, b = int(parts[0]), int(parts[1])
        if not (1 <= a <= header[0] and 1 <= b <= header[0]):
            raise TdError(f"line {ln}: tree-edge id out of range")
        tedges.append((a - 1, b - 1))
    if header is None:
        raise TdError("missing `s td` line")
    nb = header[0]
    td = TreeDecomposition([bags.get(i + 1, frozenset()) for i in range(nb)],
                           tedges)
    bad = validate_td(g, td)
    if bad is not None:
        raise TdError(str(bad))
    return td


# -- nice form ---------------------------------------------------------------

LEAF = "leaf"
INTRODUCE = "introduce"
FORGET = "forget"
JOIN = "join"


@dataclass
class NiceNode:
    kind: str
    bag: tuple[int, ...]
    vertex: int | None = None          # introduce/forget subject
    children: tuple[int, ...] = ()
    edges: tuple[tuple[int, int], ...] = ()  # forget nodes: edges applied here


@dataclass
class NiceTreeDecomposition:
    """Rooted nice decomposition; nodes are listed bottom-up (children first)."""

    nodes: list[NiceNode]
    root: int
    width: int

    def join_count(self) -> int:
        return sum(1 for nd in self.nodes if nd.kind == JOIN)

    def max_bag(self) -> int:
        return max((len(nd.bag) for nd in self.nodes), default=0)


def make_nice(td: TreeDecomposition, g: Graph) -> NiceTreeDecomposition:
    """Standard nice-form conversion preserving width, plus edge placement.

    Root at node 0, binarize multi-child nodes with join chains left to
    right, interpolate bag differences with forget/introduce chains, grow
    leaf chains from empty bags and forget everything above the root.
    """
    nodes: list[NiceNode] = []

    def emit(kind, bag, vertex=None, children=()) -> int:
        nodes.append(NiceNode(kind, tuple(sorted(bag)), vertex, tuple(children)))
        return len(nodes) - 1

    def chain_from_empty(bag) -> int:
        cur = emit(LEAF, ())
        have = []
        for v in sorted(bag):
            have.append(v)
            cur = emit(INTRODUCE, have, v, (cur,))
        return cur

    def interpolate(child_id: int, target: frozenset[int]) -> int:
        cur = child_id
        bag = set(nodes[cur].bag)
        for v in sorted(bag - target):
            bag.discard(v)
            cur = emit(FORGET, bag, v, (cur,))
        for v in sorted(target - bag):
            bag.add(v)
            cur = emit(INTRODUCE, bag, v, (cur,))
        return cur

    if not td.bags:
        td = TreeDecomposition([frozenset()], [])
    nn = len(td.bags)
    adj = [[] for _ in range(nn)]
    for a, b in td.tree_edges:
        adj[a].append(b)
        adj[b].append(a)

    # iterative post-order over the rooted original tree
    root = 0
    order = []
    stack = [(root, -1)]
    while stack:
        x, parent = stack.pop()
        order.append((x, parent))
        for y in sorted(adj[x]):
            if y != parent:
                stack.append((y, x))
    top_of: dict[int, int] = {}
    for x, parent in reversed(order):
        kids = [y for y in sorted(adj[x]) if y != parent]
        bag = td.bags[x]
        if not kids:
            top_of[x] = chain_from_empty(bag)
            continue
        branches = [interpolate(top_of[y], bag) for y in kids]
        cur = branches[0]
        for nxt in branches[1:]:
            cur = emit(JOIN, bag, None, (cur, nxt))
        top_of[x] = cur

    top = top_of[root]
    bag = set(nodes[top].bag)
    for v in sorted(bag):
        bag.discard(v)
        top = emit(FORGET, bag, v, (top,))

    # attach each graph edge to its lowest qualifying forget node
    assigned = set()
    for nd in nodes:
        if nd.kind != FORGET:
            continue
        v = nd.vertex
        child_bag = nodes[nd.children[0]].bag
        got = []
        for u in g.adjacency[v]:
            e = (min(u, v), max(u, v))
            if u in child_bag and u != v and e not in assigned:
                assigned.add(e)
                got.append(e)
        nd.edges = tuple(sorted(got))
    if len(assigned) != g.m:
        missing = set(g.edges) - assigned
        raise TdError(f"internal: edges not realized at any forget node: {missing}")

    width = max(len(nd.bag) for nd in nodes) - 1
    return NiceTreeDecomposition(nodes, top, width)


def validate_nice(nice: NiceTreeDecomposition, g: Graph) -> None:
    """Assert the structural invariants of the nice form (for tests)."""
    nodes = nice.nodes
    assert nodes[nice.root].bag == ()
    seen_forget: set[int] = set()
    for i, nd in enumerate(nodes):
        if nd.kind == LEAF:
            assert nd.bag == () and not nd.children
        elif nd.kind == INTRODUCE:
            (c,) = nd.children
            assert c < i
            assert nd.vertex not in nodes[c].bag
            assert set(nd.bag) == set(nodes[c].bag) | {nd.vertex}
        elif nd.kind == FORGET:
            (c,) = nd.children
            assert c < i
            assert nd.vertex in nodes[c].bag
            assert set(nd.bag) == set(nodes[c].bag) - {nd.vertex}
            assert nd.vertex not in seen_forget
            seen_forget.add(nd.vertex)
        elif nd.kind == JOIN:
            l, r = nd.children
            assert l < i and r < i
            assert nodes[l].bag == nodes[r].bag == nd.bag
        else:
            raise AssertionError(nd.kind)
    all_edges = [e for nd in nodes for e in nd.edges]
    assert sorted(all_edges) == sorted(g.edges)
    assert len(all_edges) == len(set(all_edges))


def min_fill_heuristic(g: Graph) -> TreeDecomposition:
    """Tree decomposition from a min-fill elimination ordering (no width bound)."""
    if g.n == 0:
        return TreeDecomposition([frozenset()], [])
    live: dict[int, set[int]] = {v: set(g.adjacency[v]) for v in range(g.n)}
    position: dict[int, int] = {}
    bags: list[frozenset[int]] = []
    bag_neighbors: list[list[int]] = []

    def fill_cost(v: int) -> int:
        nb = list(live[v])
        return sum(1 for i in range(len(nb)) for j in range(i + 1, len(nb))
                   if nb[j] not in live[nb[i]])

    step = 0
    while live:
        v = min(live, key=lambda u: (fill_cost(u), u))
        nb = sorted(live[v])
        bags.append(frozenset([v] + nb))
        bag_neighbors.append(nb)
        position[v] = step
        for a in nb:
            for b in nb:
                if a != b and b not in live[a]:
                    live[a].add(b)
        for a in nb:
            live[a].discard(v)
        del live[v]
        step += 1

    tree_edges = []
    for i, nb in enumerate(bag_neighbors):
        if nb:
            parent_vertex = min(nb, key=lambda u: position[u])
            tree_edges.append((i, position[parent_vertex]))
        elif i + 1 < len(bags):
            tree_edges.append((i, i + 1))
    return TreeDecomposition(bags, tree_edges)
