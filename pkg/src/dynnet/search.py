"""Exact worst-case objective times by memoized maximization over the
monotone product-graph state space, plus greedy adversary heuristics."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from itertools import product as iproduct
from typing import Iterable, Iterator, Optional

import numpy as np

from .dissemination import Objective, RoundSequence, cover_achieved
from .families import Model, ModelSpec, enumerate_rooted_trees, random_graph
from .graphs import Graph, add_self_loops, compose_rows, full_mask, graph_from_rows, identity, make_graph

TREE_SEARCH_GUARD = 6
OTHER_SEARCH_GUARD = 5
DEFAULT_MEM_CAP = 2 << 30  # bytes


class MemoryBudgetExceeded(RuntimeError):
    pass


@dataclass
class SearchResult:
    value: int
    optimal_sequence: RoundSequence
    states_visited: int
    memo_hits: int


def _set_partitions(items: list[int], k: int) -> Iterator[list[list[int]]]:
    """All partitions of items into exactly k nonempty blocks."""
    if k == 1:
        yield [list(items)]
        return
    if len(items) == k:
        yield [[x] for x in items]
        return
    if len(items) < k:
        return
    first, rest = items[0], items[1:]
    # first joins an existing block of a (k)-partition of the rest
    for part in _set_partitions(rest, k):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
    # or forms its own block
    for part in _set_partitions(rest, k - 1):
        yield [[first]] + part


def _relabeled_trees(block: list[int]) -> list[Graph]:
    """Rooted trees on the node set ``block`` as edge lists over [n] labels."""
    m = len(block)
    out = []
    for t in enumerate_rooted_trees(m):
        out.append([(block[u], block[v]) for u, v in t.edges()])
    return out


def family_moves(spec: ModelSpec) -> list[Graph]:
    """Every adversary move considered by the exact search, sorted by
    serialized adjacency so tie-breaking is stable.

    Trees and k-forests are enumerated exhaustively. For k-rooted networks
    only the minimal members are generated (unions of k spanning trees with
    distinct roots): extra edges only help dissemination, so they never
    increase the worst-case time.
    """
    n, k = spec.n, spec.k
    if spec.model is Model.TREES:
        moves = list(enumerate_rooted_trees(n))
    elif spec.model is Model.K_FORESTS:
        moves = []
        for part in _set_partitions(list(range(n)), k):
            per_block = [_relabeled_trees(block) for block in part]
            for combo in iproduct(*per_block):
                moves.append(make_graph(n, [e for tree in combo for e in tree]))
    else:
        seen: set[tuple[int, ...]] = set()
        moves = []
        trees_by_root = [list(enumerate_rooted_trees(n, root=r)) for r in range(n)]
        for roots in combinations(range(n), k):
            for combo in iproduct(*(trees_by_root[r] for r in roots)):
                rows = [0] * n
                for t in combo:
                    for x in range(n):
                        rows[x] |= t.out_rows[x]
                key = tuple(rows)
                if key not in seen:
                    seen.add(key)
                    moves.append(graph_from_rows(n, rows))
    moves.sort(key=lambda g: g.out_rows)
    return moves


def _objective_holds(rows: tuple[int, ...], n: int, objective: Objective) -> bool:
    fm = full_mask(n)
    if objective.kind == "broadcast":
        return any(r == fm for r in rows)
    if objective.kind == "kbroadcast":
        return sum(r == fm for r in rows) >= objective.k
    return cover_achieved(graph_from_rows(n, rows), objective.k) is not None


def _move_table(moves: list[Graph], n: int) -> np.ndarray:
    """table[j, mask] = OR of move j's loop-added out-rows over ``mask``."""
    rows = np.array(
        [[add_self_loops(g).out_rows[i] for i in range(n)] for g in moves],
        dtype=np.uint64,
    )
    table = np.zeros((len(moves), 1 << n), dtype=np.uint64)
    for mask in range(1, 1 << n):
        low = mask & -mask
        table[:, mask] = table[:, mask ^ low] | rows[:, low.bit_length() - 1]
    return table


class _Search:
    """States are product graphs packed into one int: row x occupies bits
    [x*n, (x+1)*n). Packing keeps the memo key hashing cheap; n <= 6 fits
    into a word with room to spare."""

    def __init__(self, spec: ModelSpec, objective: Objective, mem_cap_bytes: int):
        self.n = spec.n
        self.objective = objective
        self.moves = family_moves(spec)
        self.table = _move_table(self.moves, spec.n)
        self.row_shift = np.uint64(spec.n)
        self.weights = (np.uint64(1) << (np.arange(spec.n, dtype=np.uint64) * self.row_shift))
        self.memo: dict[int, int] = {}
        self.memo_hits = 0
        # ~100 bytes per entry: two boxed ints plus the dict slot
        self.max_entries = max(1, mem_cap_bytes // 100)

    def pack(self, rows: tuple[int, ...]) -> int:
        key = 0
        for i, r in enumerate(rows):
            key |= r << (i * self.n)
        return key

    def unpack(self, key: int) -> list[int]:
        fm = full_mask(self.n)
        return [(key >> (i * self.n)) & fm for i in range(self.n)]

    def children(self, key: int) -> set[int]:
        succ = self.table[:, self.unpack(key)]
        packed = (succ * self.weights).sum(axis=1, dtype=np.uint64)
        return set(packed.tolist())

    def value(self, key: int) -> int:
        cached = self.memo.get(key)
        if cached is not None:
            self.memo_hits += 1
            return cached
        if _objective_holds(tuple(self.unpack(key)), self.n, self.objective):
            self.memo[key] = 0
            return 0
        best = 0
        memo_get = self.memo.get
        for child in self.children(key):
            if child == key:
                raise RuntimeError(
                    "adversary move without progress; family is not rooted enough"
                )
            v = memo_get(child)
            if v is None:
                v = self.value(child)
            else:
                self.memo_hits += 1
            if v > best:
                best = v
        if len(self.memo) >= self.max_entries:
            raise MemoryBudgetExceeded(
                f"memo exceeded the configured budget ({self.max_entries} states)"
            )
        self.memo[key] = best + 1
        return best + 1


def exact_worst_case(
    spec: ModelSpec,
    objective: Objective,
    *,
    allow_large: bool = False,
    mem_cap_bytes: int = DEFAULT_MEM_CAP,
    threads: int = 1,
) -> SearchResult:
    """Exact max-over-adversaries objective time, from the identity state.

    value = f(G(0)) where f(G) is 0 once the objective holds and otherwise
    1 + max over family members H of f(G o H). Memoized on the product
    adjacency; terminates because every move adds at least one product edge
    while the objective is unmet.
    """
    guard = TREE_SEARCH_GUARD if spec.model is Model.TREES else OTHER_SEARCH_GUARD
    if spec.n > guard and not allow_large:
        raise ValueError(
            f"exact search guarded to n <= {guard} for {spec.model.value}; "
            "pass allow_large=True at your own risk"
        )
    if objective.k > spec.n:
        raise ValueError("objective k exceeds n")
    search = _Search(spec, objective, mem_cap_bytes)
    start = search.pack(identity(spec.n).out_rows)

    if threads > 1 and not _objective_holds(identity(spec.n).out_rows, spec.n, objective):
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(search.value, sorted(search.children(start))))
    value = search.value(start)

    seq_rounds = _reconstruct(search, start)
    seq = RoundSequence(spec, seq_rounds)
    return SearchResult(value, seq, len(search.memo), search.memo_hits)


def _reconstruct(search: _Search, start: int) -> list[Graph]:
    """One maximizing play: at each state pick the first (smallest
    serialized) move whose child still needs value-1 rounds."""
    out: list[Graph] = []
    key = start
    remaining = search.memo[key]
    while remaining > 0:
        masks = search.unpack(key)
        for j, mv in enumerate(search.moves):
            child = 0
            for i, m in enumerate(masks):
                child |= int(search.table[j, m]) << (i * search.n)
            if search.memo.get(child) == remaining - 1:
                out.append(mv)
                key = child
                remaining -= 1
                break
        else:  # pragma: no cover
            raise AssertionError("memoized values are inconsistent")
    return out


def worst_case_reference(spec: ModelSpec, objective: Objective) -> int:
    """Memo-free recursive maximization; only sane for n <= 3."""
    if spec.n > 3:
        raise ValueError("reference search is for n <= 3")
    moves = [add_self_loops(g) for g in family_moves(spec)]

    def f(rows: tuple[int, ...]) -> int:
        if _objective_holds(rows, spec.n, objective):
            return 0
        best = 0
        for mv in moves:
            child = compose_rows(rows, mv)
            if child == rows:
                raise RuntimeError("adversary move without progress")
            best = max(best, f(child))
        return best + 1

    return f(identity(spec.n).out_rows)


class Policy(Enum):
    MIN_NEW_EDGES = "min-new-edges"
    MIN_MAX_OUT_ROW = "min-max-out-row"


@dataclass
class GreedyResult:
    sequence: RoundSequence
    metrics: list[int]
    policy: Policy


_GREEDY_ENUM_GUARD = {Model.TREES: 6, Model.K_FORESTS: 5, Model.K_ROOTED: 4}


def greedy_adversary(
    spec: ModelSpec,
    objective: Objective,
    horizon: int,
    policy: Policy,
    *,
    samples: int = 200,
    seed: int = 0,
) -> GreedyResult:
    """Heuristic lower-bound probe: at each round pick the family member
    minimizing the policy metric on the resulting product, ties broken by
    smallest serialized graph. Enumerates the family when small, otherwise
    draws ``samples`` seeded random members per round."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    enumerable = spec.n <= _GREEDY_ENUM_GUARD[spec.model]
    all_moves = family_moves(spec) if enumerable else None
    rows = identity(spec.n).out_rows
    chosen: list[Graph] = []
    metrics: list[int] = []
    for t in range(horizon):
        if all_moves is not None:
            candidates: Iterable[Graph] = all_moves
        else:
            candidates = (
                random_graph(spec, seed * 1_000_003 + t * 1_009 + i)
                for i in range(samples)
            )
        best: Optional[tuple[int, tuple[int, ...], Graph, tuple[int, ...]]] = None
        base_edges = sum(r.bit_count() for r in rows)
        for mv in candidates:
            child = compose_rows(rows, add_self_loops(mv))
            if policy is Policy.MIN_NEW_EDGES:
                metric = sum(r.bit_count() for r in child) - base_edges
            else:
                metric = max(r.bit_count() for r in child)
            key = (metric, mv.out_rows)
            if best is None or key < best[:2]:
                best = (metric, mv.out_rows, mv, child)
        assert best is not None
        metrics.append(best[0])
        chosen.append(best[2])
        rows = best[3]
    return GreedyResult(RoundSequence(spec, chosen), metrics, policy)
