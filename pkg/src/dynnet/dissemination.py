"""Run a round sequence, maintain the cumulative product, and decide the
three objectives: broadcast, cover of size k, k-broadcast."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

from .families import Model, ModelSpec, validate_member
from .graphs import Graph, ProductTrace, add_self_loops, bits, compose_rows, full_mask, graph_from_rows, identity


@dataclass(frozen=True)
class Objective:
    kind: str  # "broadcast" | "cover" | "kbroadcast"
    k: int = 1

    @classmethod
    def broadcast(cls) -> "Objective":
        return cls("broadcast", 1)

    @classmethod
    def cover(cls, k: int) -> "Objective":
        return cls("cover", k)

    @classmethod
    def k_broadcast(cls, k: int) -> "Objective":
        return cls("kbroadcast", k)

    def __post_init__(self) -> None:
        if self.kind not in ("broadcast", "cover", "kbroadcast"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("objective k must be >= 1")
        if self.kind == "broadcast" and self.k != 1:
            raise ValueError("broadcast has no k parameter")


class ObjectiveNotReached(Exception):
    """Sequence exhausted before the objective held; carries the final
    cumulative product for diagnosis."""

    def __init__(self, objective: Objective, rounds_used: int, final_product: Graph):
        super().__init__(
            f"{objective.kind} (k={objective.k}) not reached after {rounds_used} rounds"
        )
        self.objective = objective
        self.rounds_used = rounds_used
        self.final_product = final_product


def broadcast_achieved(g: Graph) -> set[int]:
    """All nodes whose out-row covers every node (the broadcasters)."""
    fm = full_mask(g.n)
    return {x for x in range(g.n) if g.out_rows[x] == fm}


def _cover_exists(rows: list[int], uncovered: int, budget: int) -> bool:
    """Exact decision: can ``uncovered`` be covered by <= budget of rows.

    Branches on the uncovered element with the fewest candidate rows, which
    makes infeasibility proofs cheap; rows are pre-reduced by the caller.
    """
    if uncovered == 0:
        return True
    if budget <= 0:
        return False
    best = max(rows, key=lambda r: (r & uncovered).bit_count(), default=0)
    if (best & uncovered).bit_count() * budget < uncovered.bit_count():
        return False  # even perfectly disjoint best rows fall short
    # rarest uncovered element
    pick, pick_cands = -1, None
    for e in bits(uncovered):
        cands = [r for r in rows if r >> e & 1]
        if pick_cands is None or len(cands) < len(pick_cands):
            pick, pick_cands = e, cands
            if len(cands) <= 1:
                break
    if not pick_cands:
        return False
    for r in sorted(pick_cands, key=lambda r: -(r & uncovered).bit_count()):
        if _cover_exists([q for q in rows if q != r], uncovered & ~r, budget - 1):
            return True
    return False


def _reduced_rows(rows: tuple[int, ...]) -> list[int]:
    """Drop dominated rows (contained in another); keep one copy of equals."""
    distinct = sorted(set(rows), key=lambda r: -r.bit_count())
    kept: list[int] = []
    for r in distinct:
        if not any(r | q == q for q in kept):
            kept.append(r)
    return kept


def cover_achieved(g: Graph, k: int) -> Optional[list[int]]:
    """A set I of at most k nodes whose out-rows jointly cover [n], if one
    exists; None otherwise. The decision is exact (branch and bound over
    dominance-reduced rows); the reported witness is the lexicographically
    smallest minimum-size cover of the original rows."""
    if k < 1:
        raise ValueError("cover size must be >= 1")
    n = g.n
    fm = full_mask(n)
    rows = g.out_rows
    if max(r.bit_count() for r in rows) * k < n:
        return None  # k rows cannot reach n elements yet
    reduced = _reduced_rows(rows)
    size = None
    for budget in range(1, min(k, n) + 1):
        if _cover_exists(reduced, fm, budget):
            size = budget
            break
    if size is None:
        return None
    # lex-smallest witness of minimum size, over the original rows
    witness: list[int] = []
    uncovered = fm
    lo = 0
    while len(witness) < size:
        for i in range(lo, n):
            rest = [rows[j] for j in range(i + 1, n)]
            if _cover_exists(_reduced_rows(tuple(rest)), uncovered & ~rows[i],
                             size - len(witness) - 1):
                witness.append(i)
                uncovered &= ~rows[i]
                lo = i + 1
                break
        else:  # pragma: no cover - size was proven feasible
            raise AssertionError("witness reconstruction failed")
    return witness


def k_broadcast_achieved(g: Graph, k: int) -> Optional[list[int]]:
    """The k smallest broadcaster ids if at least k nodes have full
    out-rows; None otherwise."""
    if k < 1:
        raise ValueError("k must be >= 1")
    fm = full_mask(g.n)
    out = []
    for x in range(g.n):
        if g.out_rows[x] == fm:
            out.append(x)
            if len(out) == k:
                return out
    return None


class RoundSequence:
    """A validated sequence of raw adversary graphs under one model."""

    __slots__ = ("spec", "rounds")

    def __init__(self, spec: ModelSpec, rounds: list[Graph], validate: bool = True):
        if validate:
            checked: set[int] = set()
            for t, g in enumerate(rounds):
                if id(g) in checked:
                    continue  # repeated phase graphs validate once
                if not validate_member(spec, g):
                    raise ValueError(
                        f"round {t + 1} is not a valid {spec.model.value} member"
                    )
                checked.add(id(g))
        self.spec = spec
        self.rounds = list(rounds)

    def __len__(self) -> int:
        return len(self.rounds)

    def trace(self) -> ProductTrace:
        return ProductTrace.from_raw_rounds(self.spec.n, self.rounds)


@dataclass(frozen=True)
class RunResult:
    objective: Objective
    time: int
    witness: tuple[int, ...]
    final_product: Graph

    def to_json_dict(self) -> dict:
        return {
            "objective": self.objective.kind,
            "k": self.objective.k,
            "time": self.time,
            "witness": list(self.witness),
        }


_CANONICAL = {
    Model.TREES: "broadcast",
    Model.K_FORESTS: "cover",
    Model.K_ROOTED: "kbroadcast",
}


def _check_objective(rows: tuple[int, ...], n: int, objective: Objective) -> Optional[tuple[int, ...]]:
    fm = full_mask(n)
    if objective.kind in ("broadcast", "kbroadcast"):
        need = 1 if objective.kind == "broadcast" else objective.k
        found = []
        for x in range(n):
            if rows[x] == fm:
                found.append(x)
                if len(found) == need:
                    return tuple(found)
        return None
    w = cover_achieved(graph_from_rows(n, rows), objective.k)
    return tuple(w) if w is not None else None


def run(seq: RoundSequence, objective: Objective) -> RunResult:
    """Smallest t at which the objective holds on the cumulative product
    G(t); t = 0 is legal (e.g. a cover of size n holds before any round).

    Raises ObjectiveNotReached when the sequence is exhausted first. Running
    an objective against a non-matching model is allowed but warned about.
    """
    n = seq.spec.n
    if objective.k > n:
        raise ValueError(f"objective k={objective.k} exceeds n={n}")
    if objective.kind != _CANONICAL[seq.spec.model]:
        warnings.warn(
            f"objective {objective.kind!r} evaluated on a "
            f"{seq.spec.model.value} sequence",
            stacklevel=2,
        )
    elif objective.kind != "broadcast" and objective.k > seq.spec.k:
        warnings.warn(
            f"objective k={objective.k} exceeds the model parameter k={seq.spec.k}",
            stacklevel=2,
        )
    rows = identity(n).out_rows
    witness = _check_objective(rows, n, objective)
    t = 0
    if witness is None:
        for t, raw in enumerate(seq.rounds, start=1):
            rows = compose_rows(rows, add_self_loops(raw))
            witness = _check_objective(rows, n, objective)
            if witness is not None:
                break
        else:
            raise ObjectiveNotReached(objective, len(seq.rounds), graph_from_rows(n, rows))
    return RunResult(objective, t, witness, graph_from_rows(n, rows))
