"""The three adversary graph families: rooted trees, k-forests, k-rooted
digraphs. Validators operate on raw adversary graphs (no self-loops); the
simulation engine adds the loops afterwards."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional

from .graphs import MAX_NODES, Graph, full_mask, graph_from_rows, make_graph

ENUM_GUARD = 8  # rooted-tree enumeration is n^(n-1); keep it desk-scale


class Model(Enum):
    TREES = "tree"
    K_FORESTS = "forest"
    K_ROOTED = "digraph"


@dataclass(frozen=True)
class ModelSpec:
    model: Model
    n: int
    k: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_NODES:
            raise ValueError(f"n must be in [1, {MAX_NODES}], got {self.n}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k must be in [1, n], got k={self.k}, n={self.n}")
        if self.model is Model.TREES and self.k != 1:
            raise ValueError("tree model has no k parameter (k must be 1)")


def _forest_shape(g: Graph) -> Optional[list[int]]:
    """Roots of g if every node has in-degree <= 1, there are no cycles and
    no self-loops; None otherwise. A tree is the 1-root case."""
    n = g.n
    parents = [-1] * n
    for v in range(n):
        row = g.in_rows[v]
        if row >> v & 1:
            return None  # self-loop
        deg = row.bit_count()
        if deg > 1:
            return None
        if deg == 1:
            parents[v] = row.bit_length() - 1
    # climb parent chains; any cycle revisits a node before reaching a root
    state = [0] * n  # 0 unseen, 1 on current path, 2 done
    for start in range(n):
        if state[start]:
            continue
        path = []
        v = start
        while v != -1 and state[v] == 0:
            state[v] = 1
            path.append(v)
            v = parents[v]
        if v != -1 and state[v] == 1:
            return None  # cycle
        for u in path:
            state[u] = 2
    return [v for v in range(n) if parents[v] == -1]


def is_rooted_tree(g: Graph) -> tuple[bool, Optional[int]]:
    """True plus the root if g is a tree directed away from a single root."""
    roots = _forest_shape(g)
    if roots is None or len(roots) != 1:
        return (False, None)
    return (True, roots[0])


def is_k_forest(g: Graph, k: int) -> tuple[bool, Optional[list[int]]]:
    """True plus the sorted tree roots if g is exactly k node-disjoint
    rooted trees spanning all nodes."""
    roots = _forest_shape(g)
    if roots is None or len(roots) != k:
        return (False, None)
    return (True, roots)


def reach_mask(g: Graph, x: int) -> int:
    """Bitmask of nodes reachable from x (including x), self-loops ignored."""
    seen = 1 << x
    frontier = seen
    rows = g.out_rows
    while frontier:
        new = 0
        m = frontier
        while m:
            low = m & -m
            new |= rows[low.bit_length() - 1]
            m ^= low
        frontier = new & ~seen
        seen |= new
    return seen


def roots_reaching_all(g: Graph) -> set[int]:
    """Nodes whose forward-reachable set is all of [n]."""
    fm = full_mask(g.n)
    return {x for x in range(g.n) if reach_mask(g, x) == fm}


def is_k_rooted(g: Graph, k: int) -> bool:
    """At least k nodes reach every node. Counts lazily and stops at k."""
    fm = full_mask(g.n)
    found = 0
    for x in range(g.n):
        if reach_mask(g, x) == fm:
            found += 1
            if found >= k:
                return True
    return False


def validate_member(spec: ModelSpec, g: Graph) -> bool:
    if g.n != spec.n:
        return False
    if spec.model is Model.TREES:
        return is_rooted_tree(g)[0]
    if spec.model is Model.K_FORESTS:
        return is_k_forest(g, spec.k)[0]
    return is_k_rooted(g, spec.k)


def _prufer_decode(n: int, seq: tuple[int, ...]) -> list[tuple[int, int]]:
    """Undirected labeled tree on [n] from its length n-2 code."""
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    edges = []
    # smallest-leaf elimination, done with a pointer + "back edges" trick
    ptr = 0
    leaf = -1
    for v in seq:
        if leaf < 0:
            while degree[ptr] != 1:
                ptr += 1
            leaf = ptr
        edges.append((leaf, v))
        degree[leaf] -= 1
        degree[v] -= 1
        if degree[v] == 1 and v < ptr:
            leaf = v
        else:
            leaf = -1
    if leaf < 0:
        while degree[ptr] != 1:
            ptr += 1
        leaf = ptr
    edges.append((leaf, n - 1))
    return edges


def _orient_from_root(n: int, und_edges: list[tuple[int, int]], root: int) -> Graph:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in und_edges:
        adj[u].append(v)
        adj[v].append(u)
    rows = [0] * n
    seen = [False] * n
    seen[root] = True
    stack = [root]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                rows[u] |= 1 << v
                stack.append(v)
    return graph_from_rows(n, rows)


def enumerate_rooted_trees(n: int, root: Optional[int] = None) -> Iterator[Graph]:
    """All labeled rooted trees on [n], edges directed away from the root.

    Yields each of the n^(n-1) trees exactly once (n^(n-2) codes times n
    roots). Pass ``root`` to restrict to one root id, e.g. to split an
    enumeration across workers.
    """
    if not 1 <= n <= ENUM_GUARD:
        raise ValueError(f"enumeration guarded to n <= {ENUM_GUARD}, got {n}")
    roots = range(n) if root is None else (root,)
    if n == 1:
        if 0 in roots:
            yield make_graph(1, [])
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        und = _prufer_decode(n, seq)
        for r in roots:
            yield _orient_from_root(n, und, r)


def _random_rooted_tree(n: int, root: int, rnd: random.Random) -> Graph:
    if n == 1:
        return make_graph(1, [])
    seq = tuple(rnd.randrange(n) for _ in range(n - 2))
    return _orient_from_root(n, _prufer_decode(n, seq), root)


def _random_k_forest(n: int, k: int, rnd: random.Random) -> Graph:
    """Uniform forest of k rooted trees, via the code of a tree on n+1 nodes
    in which a virtual node has degree exactly k."""
    if k == n:
        return make_graph(n, [])
    # Tree on {0..n} where node 0 is virtual: its code has length n-1 and
    # contains 0 exactly k-1 times; the k neighbors of 0 become the roots.
    positions = set(rnd.sample(range(n - 1), k - 1))
    seq = tuple(
        0 if i in positions else rnd.randrange(1, n + 1) for i in range(n - 1)
    )
    und = _prufer_decode(n + 1, seq)
    adj: list[list[int]] = [[] for _ in range(n + 1)]
    for u, v in und:
        adj[u].append(v)
        adj[v].append(u)
    rows = [0] * n
    seen = [False] * (n + 1)
    seen[0] = True
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                if u != 0:
                    rows[u - 1] |= 1 << (v - 1)
                stack.append(v)
    return graph_from_rows(n, rows)


def random_graph(
    spec: ModelSpec, seed: int, extra_edge_density: float = 0.1
) -> Graph:
    """Deterministic-per-seed random family member.

    Trees and k-forests are uniform over their families. K-rooted graphs are
    built as k overlaid random spanning trees from k distinct roots plus
    extra edges at ``extra_edge_density``; membership is guaranteed, the
    distribution is not uniform.
    """
    rnd = random.Random(seed)
    n, k = spec.n, spec.k
    if spec.model is Model.TREES:
        return _random_rooted_tree(n, rnd.randrange(n), rnd)
    if spec.model is Model.K_FORESTS:
        return _random_k_forest(n, k, rnd)
    roots = rnd.sample(range(n), k)
    rows = [0] * n
    for r in roots:
        t = _random_rooted_tree(n, r, rnd)
        for x in range(n):
            rows[x] |= t.out_rows[x]
    if extra_edge_density > 0:
        for u in range(n):
            for v in range(n):
                if u != v and rnd.random() < extra_edge_density:
                    rows[u] |= 1 << v
    return graph_from_rows(n, rows)


def forest_roots(g: Graph) -> list[int]:
    """Tree roots of a forest round, tolerant of added self-loops: the nodes
    whose only in-edge (if any) is their own loop."""
    return [v for v in range(g.n) if g.in_rows[v] & ~(1 << v) == 0]
