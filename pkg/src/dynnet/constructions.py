"""Adversary schedules that realize the worst-case lower bounds.

The rooted-tree schedule has three phases on nodes 0..n-1, with
q = floor((n-2)/2) and p = n-2-q:

  phase 1 (p rounds)  the path 0 -> 1 -> ... -> n-1. Afterwards the id of
                      node j is known exactly by the window [j, j+p].

  phase 2 (q rounds)  re-root at 0: node n-1-q ("the pocket") hangs below a
                      chain through the q freshest nodes n-1 -> ... -> n-q,
                      everything else is parked as a leaf under 0. The only
                      ids the pocket ever hears are tail ids whose spread is
                      already frozen near the pocket; the root's own id
                      creeps down the chain and arrives one round too late.

  phase 3 (repeat)    a path rooted at the pocket, ordered so that every id
                      the pocket knows still has one contiguous uncovered
                      stretch of length n-p-1.

No id completes before round p + q + (n-p-1) = floor(3n/2) - 2, and the
weakest candidate completes exactly then. The k-forest and k-rooted
schedules reuse this skeleton (isolated singletons, clique expansion).
"""

from __future__ import annotations

from dataclasses import dataclass

from .analysis import bounds_for
from .dissemination import RoundSequence
from .families import Model, ModelSpec
from .graphs import Graph, make_graph


def _ceil_div(num: int, den: int) -> int:
    return -(-num // den)


@dataclass(frozen=True)
class ConstructionOutput:
    seq: RoundSequence
    # the two fields put the ceiling around the whole expression vs around
    # the fraction alone; integer offsets commute with ceilings, so they
    # agree, and both are reported
    claimed_time: int
    claimed_time_main: int


def _tree_phase_graphs(n: int) -> tuple[list[Graph], list[int]]:
    """The distinct phase graphs and their repeat counts for the rooted-tree
    schedule on n >= 3 nodes."""
    path = make_graph(n, [(i, i + 1) for i in range(n - 1)])
    if n == 3:
        # Degenerate: the plain path already meets ceil((3n-1)/2) - 2 = n - 1.
        return [path], [n - 1]
    q = (n - 2) // 2
    p = n - 2 - q
    pocket = n - 1 - q
    parking = [(0, j) for j in range(1, pocket)]
    chain = [(0, n - 1)] + [(i, i - 1) for i in range(n - 1, pocket, -1)]
    regroup = make_graph(n, parking + chain)
    order = [pocket] + list(range(pocket + 1, n)) + list(range(pocket))
    final = make_graph(n, list(zip(order, order[1:])))
    return [path, regroup, final], [p, q, n - p - 1]


def trees_lower_bound(n: int) -> ConstructionOutput:
    """Rooted-tree schedule with broadcast time >= ceil((3n-1)/2 - 2)."""
    if n < 3:
        raise ValueError("tree lower-bound schedule needs n >= 3")
    spec = ModelSpec(Model.TREES, n)
    graphs, reps = _tree_phase_graphs(n)
    rounds: list[Graph] = []
    for g, r in zip(graphs, reps):
        rounds.extend([g] * r)
    # pad with the final phase up to the broadcast guarantee
    horizon = bounds_for(spec).upper_int
    while len(rounds) < horizon:
        rounds.append(graphs[-1])
    claimed = _ceil_div(3 * n - 1 - 4, 2)          # ceil((3n-1)/2 - 2)
    claimed_main = _ceil_div(3 * n - 1, 2) - 2     # ceil((3n-1)/2) - 2
    return ConstructionOutput(RoundSequence(spec, rounds), claimed, claimed_main)


def cover_lower_bound(n: int, k: int) -> ConstructionOutput:
    """k-forest schedule with cover time >= ceil((3n-3k)/2 - 1): k-1 nodes
    stay isolated in every round, the tree schedule runs on the rest."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k + 2:
        raise ValueError("k-forest lower-bound schedule needs n >= k + 2")
    i = n - k + 1
    inner = trees_lower_bound(i)
    spec = ModelSpec(Model.K_FORESTS, n, k)
    horizon = bounds_for(spec).upper_int
    rebuilt: dict[int, Graph] = {}

    def widen(g: Graph) -> Graph:
        if id(g) not in rebuilt:
            rebuilt[id(g)] = make_graph(n, list(g.edges()))
        return rebuilt[id(g)]

    rounds = [widen(g) for g in inner.seq.rounds]
    while len(rounds) < horizon:
        rounds.append(rounds[-1])
    claimed = _ceil_div(3 * n - 3 * k - 2, 2)          # ceil((3n-3k)/2 - 1)
    claimed_main = _ceil_div(3 * (n - k), 2) - 1
    return ConstructionOutput(RoundSequence(spec, rounds), claimed, claimed_main)


def kroot_lower_bound(n: int, k: int) -> ConstructionOutput:
    """k-rooted schedule with k-broadcast time >= ceil((3n-9k)/2 + 2).

    Runs the tree schedule on i = n - 3k + 3 virtual vertices, expanding the
    three schedule-critical vertices (both phase roots and the chain head)
    into k fully connected vertices each; group-to-group edges replace the
    virtual edges, so the virtual dynamics replay with k roots per round.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < 3 * k + 3:
        raise ValueError("k-rooted lower-bound schedule needs n >= 3k + 3")
    i = n - 3 * k + 3
    q = (i - 2) // 2
    expanded = {0, i - 1 - q, i - 1}  # phase-1/2 root, phase-3 root, chain head
    group: list[list[int]] = []
    next_id = 0
    for v in range(i):
        size = k if v in expanded else 1
        group.append(list(range(next_id, next_id + size)))
        next_id += size
    assert next_id == n

    inner = trees_lower_bound(i)
    spec = ModelSpec(Model.K_ROOTED, n, k)
    horizon = bounds_for(spec).upper_int
    rebuilt: dict[int, Graph] = {}

    def expand(g: Graph) -> Graph:
        if id(g) in rebuilt:
            return rebuilt[id(g)]
        edges = []
        for v in expanded:
            edges.extend(
                (x, y) for x in group[v] for y in group[v] if x != y
            )
        for a, b in g.edges():
            edges.extend((x, y) for x in group[a] for y in group[b])
        rebuilt[id(g)] = make_graph(n, edges)
        return rebuilt[id(g)]

    rounds = [expand(g) for g in inner.seq.rounds]
    while len(rounds) < horizon:
        rounds.append(rounds[-1])
    claimed = _ceil_div(3 * n - 9 * k + 4, 2)          # ceil((3n-9k)/2 + 2)
    claimed_main = _ceil_div(3 * (n - 3 * k), 2) + 2
    return ConstructionOutput(RoundSequence(spec, rounds), claimed, claimed_main)


def build(model: Model, n: int, k: int = 1) -> ConstructionOutput:
    if model is Model.TREES:
        return trees_lower_bound(n)
    if model is Model.K_FORESTS:
        return cover_lower_bound(n, k)
    return kroot_lower_bound(n, k)
