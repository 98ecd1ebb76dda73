"""Directed graphs on up to 64 labeled nodes, stored as bitset adjacency rows.

A node set is a single machine word (Python int used as a 64-bit mask), so
relational composition of two graphs is a word-parallel OR loop. All values
are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

MAX_NODES = 64


def full_mask(n: int) -> int:
    return (1 << n) - 1


def bits(mask: int) -> Iterator[int]:
    """Yield the indices of the set bits of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


@dataclass(frozen=True)
class Graph:
    """Immutable digraph: ``out_rows[x]`` is the bitmask of out-neighbors of x.

    ``in_rows`` is the exact transpose, kept so in-neighborhood queries are
    O(1) row lookups. Construct via :func:`make_graph` or
    :func:`graph_from_rows`; both guarantee the transpose invariant and that
    no bit at index >= n is set.
    """

    n: int
    out_rows: tuple[int, ...]
    in_rows: tuple[int, ...]

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.out_rows[u] >> v & 1)

    def out_set(self, x: int) -> set[int]:
        return set(bits(self.out_rows[x]))

    def in_set(self, x: int) -> set[int]:
        return set(bits(self.in_rows[x]))

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            for v in bits(self.out_rows[u]):
                yield (u, v)

    def edge_count(self) -> int:
        return sum(row.bit_count() for row in self.out_rows)

    def has_all_self_loops(self) -> bool:
        return all(row >> x & 1 for x, row in enumerate(self.out_rows))

    def __repr__(self) -> str:  # compact, for test failure output
        es = ",".join(f"{u}->{v}" for u, v in self.edges() if u != v)
        loops = sum(row >> x & 1 for x, row in enumerate(self.out_rows))
        return f"Graph(n={self.n}, edges=[{es}], loops={loops})"


def _transpose(n: int, rows: tuple[int, ...]) -> tuple[int, ...]:
    cols = [0] * n
    for u in range(n):
        for v in bits(rows[u]):
            cols[v] |= 1 << u
    return tuple(cols)


def graph_from_rows(n: int, out_rows: Iterable[int]) -> Graph:
    """Build a Graph from out-adjacency masks, deriving the in-rows."""
    if not 1 <= n <= MAX_NODES:
        raise ValueError(f"node count must be in [1, {MAX_NODES}], got {n}")
    rows = tuple(out_rows)
    if len(rows) != n:
        raise ValueError(f"expected {n} rows, got {len(rows)}")
    fm = full_mask(n)
    for x, row in enumerate(rows):
        if row & ~fm:
            raise ValueError(f"row {x} has bits beyond node {n - 1}")
    return Graph(n, rows, _transpose(n, rows))


def make_graph(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Graph with exactly the given edges; duplicates collapse."""
    if not 1 <= n <= MAX_NODES:
        raise ValueError(f"node count must be in [1, {MAX_NODES}], got {n}")
    rows = [0] * n
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
        rows[u] |= 1 << v
    return graph_from_rows(n, rows)


def identity(n: int) -> Graph:
    """The graph with a self-loop at every node and no other edges."""
    return graph_from_rows(n, (1 << x for x in range(n)))


def add_self_loops(g: Graph) -> Graph:
    if g.has_all_self_loops():
        return g
    return graph_from_rows(g.n, (row | (1 << x) for x, row in enumerate(g.out_rows)))


def product(a: Graph, b: Graph) -> Graph:
    """Relational composition: (x, y) is an edge iff some z has (x, z) in
    ``a`` and (z, y) in ``b``."""
    if a.n != b.n:
        raise ValueError(f"node count mismatch: {a.n} != {b.n}")
    brows = b.out_rows
    out = []
    for x in range(a.n):
        acc = 0
        m = a.out_rows[x]
        while m:
            low = m & -m
            acc |= brows[low.bit_length() - 1]
            m ^= low
        out.append(acc)
    return graph_from_rows(a.n, out)


def compose_rows(rows: tuple[int, ...], b: Graph) -> tuple[int, ...]:
    """Out-rows of (rows graph) o b, without building a Graph. Hot path of
    the simulator and the state-space search."""
    brows = b.out_rows
    out = []
    for m in rows:
        acc = 0
        while m:
            low = m & -m
            acc |= brows[low.bit_length() - 1]
            m ^= low
        out.append(acc)
    return tuple(out)


class ProductTrace:
    """A round sequence together with its cumulative products.

    ``rounds[t-1]`` is the round-t communication graph with self-loops
    already added (rounds are 1-based throughout). ``prefix_products[t]`` is
    the product of rounds 1..t; index 0 is the identity (every process knows
    only itself before round 1).
    """

    __slots__ = ("n", "rounds", "prefix_products")

    def __init__(self, n: int, rounds: list[Graph]):
        for g in rounds:
            if g.n != n:
                raise ValueError("round graph node count mismatch")
            if not g.has_all_self_loops():
                raise ValueError("trace rounds must carry all self-loops")
        self.n = n
        self.rounds = list(rounds)
        prefixes = [identity(n)]
        for g in rounds:
            prefixes.append(product(prefixes[-1], g))
        self.prefix_products = prefixes

    @classmethod
    def from_raw_rounds(cls, n: int, raw_rounds: Iterable[Graph]) -> "ProductTrace":
        """Build a trace from adversary graphs, adding the self-loops."""
        return cls(n, [add_self_loops(g) for g in raw_rounds])

    def __len__(self) -> int:
        return len(self.rounds)

    def product_at(self, t: int) -> Graph:
        """Cumulative product after round t (t=0 gives the identity)."""
        return self.prefix_products[t]

    def _check_query(self, t: int, t2: int, x: int) -> None:
        if not 0 <= x < self.n:
            raise ValueError(f"node {x} out of range for n={self.n}")
        if not (0 <= t <= len(self.rounds) + 1 and -1 <= t2 <= len(self.rounds)):
            raise ValueError(
                f"round interval [{t}, {t2}] outside trace of length {len(self.rounds)}"
            )

    def in_mask(self, t: int, t2: int, x: int) -> int:
        """Bitmask form of :func:`in_set`."""
        self._check_query(t, t2, x)
        if t > t2 + 1:
            return 0
        if t == t2 + 1:
            return 1 << x
        # In-neighborhood of x in G_t o ... o G_t2, computed by composing
        # backwards: in_{A o B}(x) = union of in_A(z) over z in in_B(x).
        # Round 0 does not exist; the interval [0, t2] means [1, t2] with an
        # identity prepended, which changes nothing.
        m = 1 << x
        for tau in range(t2, max(t, 1) - 1, -1):
            rows = self.rounds[tau - 1].in_rows
            acc = 0
            while m:
                low = m & -m
                acc |= rows[low.bit_length() - 1]
                m ^= low
            m = acc
        return m

    def out_mask(self, t: int, t2: int, x: int) -> int:
        """Bitmask form of :func:`out_set`."""
        self._check_query(t, t2, x)
        if t > t2 + 1:
            return 0
        if t == t2 + 1:
            return 1 << x
        m = 1 << x
        for tau in range(max(t, 1), t2 + 1):
            rows = self.rounds[tau - 1].out_rows
            acc = 0
            while m:
                low = m & -m
                acc |= rows[low.bit_length() - 1]
                m ^= low
            m = acc
        return m


def in_set(trace: ProductTrace, t: int, t2: int, x: int) -> set[int]:
    """Nodes with a path to x through rounds t..t2 (1-based, inclusive).

    Degenerate intervals follow the usual conventions: {x} when t == t2+1,
    empty when t > t2+1.
    """
    return set(bits(trace.in_mask(t, t2, x)))


def out_set(trace: ProductTrace, t: int, t2: int, x: int) -> set[int]:
    """Nodes reachable from x through rounds t..t2; conventions as in
    :func:`in_set`."""
    return set(bits(trace.out_mask(t, t2, x)))


def to_dot(g: Graph, name: str = "G", include_self_loops: bool = False) -> str:
    """DOT rendering of a graph; self-loops suppressed unless requested."""
    lines = [f"digraph {name} {{"]
    for x in range(g.n):
        lines.append(f"  {x};")
    for u, v in g.edges():
        if u == v and not include_self_loops:
            continue
        lines.append(f"  {u} -> {v};")
    lines.append("}")
    return "\n".join(lines)
