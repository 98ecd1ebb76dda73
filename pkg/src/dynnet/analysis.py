"""Bound formulas and the two proof certificates computed on concrete runs:
the rounds graph (broadcast / k-broadcast) and the backward strict-sets
construction with its strict rounds graph (cover)."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterator, Optional

from mpmath import iv

from .families import Model, ModelSpec, forest_roots, roots_reaching_all
from .graphs import Graph, ProductTrace, bits, full_mask

iv.dps = 60

BETA = (math.pi ** 2 + 6) / 6  # float view; exact comparisons go through iv


def _exact_ceil(x) -> int:
    """Ceiling of an interval that provably does not straddle an integer."""
    lo, hi = iv.mpf(x).a, iv.mpf(x).b
    clo, chi = int(math.ceil(lo)), int(math.ceil(hi))
    if clo != chi:  # pragma: no cover - dps=60 leaves no room for this
        raise ArithmeticError(f"interval {x} straddles an integer")
    return clo


_SQRT2 = iv.sqrt(2)
_BETA_IV = (iv.pi ** 2 + 6) / 6


def ceil_sqrt2(n: int) -> int:
    """ceil(sqrt(2) * n), exactly."""
    return _exact_ceil(_SQRT2 * n)


def ceil_one_plus_sqrt2(n: int) -> int:
    """ceil((1 + sqrt(2)) * n), exactly."""
    return _exact_ceil((1 + _SQRT2) * n)


def ceil_beta(n: int) -> int:
    """ceil((pi^2 + 6) / 6 * n), exactly."""
    return _exact_ceil(_BETA_IV * n)


def _ceil_div(num: int, den: int) -> int:
    return -(-num // den)


@dataclass(frozen=True)
class Bounds:
    model: Model
    n: int
    k: int
    lower: int
    upper_real: float
    upper_int: int


def bounds_values(model: Model, n: int, k: int = 1) -> Bounds:
    """Worst-case time brackets: integer lower bound and the real upper
    bound with its exact ceiling. Pure formula evaluation, so n may exceed
    the simulator's 64-node cap."""
    if n < 1 or not 1 <= k <= n:
        raise ValueError(f"bad bounds parameters n={n}, k={k}")
    if model is Model.TREES:
        lower = _ceil_div(3 * n - 1, 2) - 2
        upper = (1 + _SQRT2) * n
        upper_int = ceil_one_plus_sqrt2(n)
    elif model is Model.K_FORESTS:
        lower = _ceil_div(3 * (n - k), 2) - 1
        upper = _BETA_IV * n + 1
        upper_int = _exact_ceil(upper)
    else:
        lower = _ceil_div(3 * (n - 3 * k), 2) + 2
        upper = (1 + _SQRT2) * n + (k - 1)
        upper_int = ceil_one_plus_sqrt2(n) + k - 1
    return Bounds(model, n, k, lower, float(iv.mpf(upper).mid), upper_int)


def bounds_for(spec: ModelSpec) -> Bounds:
    return bounds_values(spec.model, spec.n, spec.k)


def alpha(s: int, k: int) -> int:
    """Weighted out-degree constant of vertex s in the strict rounds graph."""
    if s <= k:
        raise ValueError(f"alpha needs s >= k + 1, got s={s}, k={k}")
    m = s - k
    if m % 2 == 1:
        return ((m + 1) // 2) ** 2
    return (m // 2) ** 2 + m // 2


def extremal_deltas(k: int, n: int) -> list[float]:
    """The weight assignment n / alpha_s that meets the volume constraints
    with equality; indexed s = k+1 .. n."""
    return [n / alpha(s, k) for s in range(k + 1, n + 1)]


def verify_littledeltas_bound(k: int, n: int, deltas: list[float]) -> bool:
    """Check the weighted-volume implication on a vertex weight vector
    (indexed s = k+1 .. n): if every prefix satisfies
    sum_{s<=u} delta_s * alpha_s <= (u - k) * n, then the total weight is at
    most beta * n. Returns the truth of the implication on this instance."""
    if len(deltas) != n - k:
        raise ValueError(f"expected {n - k} weights, got {len(deltas)}")
    eps = 1e-9 * max(1.0, n)
    acc = 0.0
    hypothesis = True
    for idx, s in enumerate(range(k + 1, n + 1)):
        acc += deltas[idx] * alpha(s, k)
        if acc > (s - k) * n + eps:
            hypothesis = False
            break
    conclusion = math.fsum(deltas) <= BETA * n + eps
    return (not hypothesis) or conclusion


# ---------------------------------------------------------------------------
# Rounds graph (broadcast / k-broadcast certificate)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundsGraphWitness:
    kind: str      # "process" | "round"
    node: int      # process id, or 1-based round index
    degree: int
    process: int   # the witness mapped to a process (itself or the round's root)


@dataclass
class RoundsGraph:
    """Bipartite-ish certificate over process nodes and round nodes.

    Round t gets an in-edge from every non-avoided process that the round's
    chosen root has heard of before t; early rounds additionally point at
    later rounds whose roots heard them. Overloading some out-degree to n is
    what witnesses a broadcaster.
    """

    n: int
    avoid: frozenset[int]
    round_count: int
    threshold: int                      # round -> round edges only from t < threshold
    roots: tuple[int, ...]              # roots[t-1] is the chosen root of round t
    process_edges: tuple[tuple[int, int], ...]  # (process, round)
    round_edges: tuple[tuple[int, int], ...]    # (round, later round)

    def node_count(self) -> int:
        return self.n + self.round_count

    def process_out_degrees(self) -> list[int]:
        deg = [0] * self.n
        for p, _ in self.process_edges:
            deg[p] += 1
        return deg

    def round_out_degrees(self) -> list[int]:
        deg = [0] * (self.round_count + 1)
        for t, _ in self.round_edges:
            deg[t] += 1
        return deg

    def round_in_degrees(self) -> list[int]:
        deg = [0] * (self.round_count + 1)
        for _, t in self.process_edges:
            deg[t] += 1
        for _, t2 in self.round_edges:
            deg[t2] += 1
        return deg

    def to_dot(self) -> str:
        lines = ["digraph rounds_graph {"]
        for p in range(self.n):
            shape = "doublecircle" if p in self.avoid else "circle"
            lines.append(f'  p{p} [label="p{p}", shape={shape}];')
        for t in range(1, self.round_count + 1):
            lines.append(f'  t{t} [label="r{t}={self.roots[t - 1]}", shape=box];')
        for p, t in self.process_edges:
            lines.append(f"  p{p} -> t{t};")
        for t, t2 in self.round_edges:
            lines.append(f"  t{t} -> t{t2};")
        lines.append("}")
        return "\n".join(lines)


def build_rounds_graph(trace: ProductTrace, avoid: frozenset[int] = frozenset()) -> RoundsGraph:
    """Construct the certificate from a trace of rooted rounds; the trace
    must be at least ceil((1+sqrt2) n) + |avoid| rounds long. The chosen
    root of each round is the smallest root outside the avoided set."""
    n = trace.n
    round_count = ceil_one_plus_sqrt2(n) + len(avoid)
    threshold = ceil_sqrt2(n) + len(avoid)
    if len(trace) < round_count:
        raise ValueError(
            f"trace too short: {len(trace)} rounds, need {round_count}"
        )
    roots = []
    for t in range(1, round_count + 1):
        candidates = roots_reaching_all(trace.rounds[t - 1]) - avoid
        if not candidates:
            raise ValueError(f"round {t} has no root outside the avoided set")
        roots.append(min(candidates))
    process_edges = []
    for t in range(1, round_count + 1):
        heard = trace.prefix_products[t - 1].in_rows[roots[t - 1]]
        for p in bits(heard):
            if p not in avoid:
                process_edges.append((p, t))
    round_edges = []
    for t in range(1, min(threshold, round_count + 1)):
        rt = roots[t - 1]
        for t2 in range(t + 1, round_count + 1):
            if trace.prefix_products[t2 - 1].in_rows[roots[t2 - 1]] >> rt & 1:
                round_edges.append((t, t2))
    return RoundsGraph(
        n, frozenset(avoid), round_count, threshold, tuple(roots),
        tuple(process_edges), tuple(round_edges),
    )


def max_out_degree_witness(rg: RoundsGraph) -> RoundsGraphWitness:
    """The maximizing out-edge-bearing node outside the avoided set, mapped
    to the process it stands for. The pigeonhole argument guarantees degree
    at least n on full-length traces."""
    best: Optional[RoundsGraphWitness] = None
    for p, d in enumerate(rg.process_out_degrees()):
        if p in rg.avoid:
            continue
        if best is None or d > best.degree:
            best = RoundsGraphWitness("process", p, d, p)
    for t, d in enumerate(rg.round_out_degrees()):
        if t == 0:
            continue
        if best is None or d > best.degree:
            best = RoundsGraphWitness("round", t, d, rg.roots[t - 1])
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# Strict sets (cover certificate)
# ---------------------------------------------------------------------------


Pair = tuple[int, int]  # (process, round)


@dataclass
class StrictSetsTrace:
    """The backward cover construction: sets A_s of (process, round) pairs
    shrinking from |A_n| = n down to |A_k| = k, with the rounds t^(s) at
    which strictness first fails and the gaps Delta_s between them."""

    k: int
    n: int
    t_prime: int
    complete: bool
    sets: dict[int, tuple[Pair, ...]]   # s -> sorted pairs
    t_marks: dict[int, int]             # s -> t^(s)
    pivots: dict[int, int]              # s -> pivot process p_s
    trace: ProductTrace = field(repr=False)

    @property
    def deltas(self) -> dict[int, int]:
        return {
            s: self.t_marks[s] - self.t_marks[s - 1]
            for s in range(self.k + 1, self.n + 1)
            if s in self.t_marks and s - 1 in self.t_marks
        }


def _expand_in(mask: int, g: Graph) -> int:
    rows = g.in_rows
    acc = 0
    while mask:
        low = mask & -mask
        acc |= rows[low.bit_length() - 1]
        mask ^= low
    return acc


def build_strict_sets(trace: ProductTrace, k: int, t_prime: int) -> StrictSetsTrace:
    """Run the backward construction on a k-forest trace.

    Scanning downward from min(t_i) + 1, the pairwise-disjointness of the
    in-sets is re-checked after one backward composition per round; the
    largest failing round becomes t^(s), the smallest process seen by two
    members becomes the pivot. If some A_{s+1} is still strict at round 1
    the run was too short and the result is flagged incomplete.
    """
    n = trace.n
    if not 1 <= k <= n:
        raise ValueError("k out of range")
    if not 1 <= t_prime <= len(trace):
        raise ValueError(f"t_prime {t_prime} outside trace of length {len(trace)}")
    # kept sorted so the pivot's (i, j) choice is canonical, not an
    # artifact of earlier removals
    pairs: list[Pair] = sorted((i, t_prime) for i in range(n))
    sets = {n: tuple(pairs)}
    t_marks = {n: t_prime}
    pivots: dict[int, int] = {}
    complete = True
    for s in range(n - 1, k - 1, -1):
        t_scan = min(t for _, t in pairs) + 1
        masks = [trace.in_mask(t_scan, t_i, a_i) for a_i, t_i in pairs]
        found = None
        t = t_scan
        while t >= 1:
            run = dup = 0
            for m in masks:
                dup |= run & m
                run |= m
            if dup:
                found = (t, dup)
                break
            t -= 1
            if t >= 1:
                g = trace.rounds[t - 1]
                masks = [_expand_in(m, g) for m in masks]
        if found is None:
            complete = False
            break
        t_mark, dup = found
        pivot = (dup & -dup).bit_length() - 1
        hit = [i for i, m in enumerate(masks) if m >> pivot & 1]
        i, j = hit[0], hit[1]
        pivot_pair = (pivot, t_mark - 1)
        new_pairs = list(pairs)
        if pivot_pair in pairs:
            # drop one of the two intersecting members, never the pivot pair
            drop = pairs[i] if pairs[i] != pivot_pair else pairs[j]
            new_pairs.remove(drop)
        else:
            new_pairs.remove(pairs[i])
            new_pairs.remove(pairs[j])
            new_pairs.append(pivot_pair)
        pairs = sorted(new_pairs)
        sets[s] = tuple(pairs)
        t_marks[s] = t_mark
        pivots[s] = pivot
    return StrictSetsTrace(k, n, t_prime, complete, sets, t_marks, pivots, trace)


@dataclass(frozen=True)
class StrictRoundsGraph:
    """Weighted digraph on vertices k+1..n with vertex weights Delta_s and
    an edge (u, s) of weight 2s-k-u whenever s <= u <= min(2s-k-1, n)."""

    k: int
    n: int
    weights: tuple[int, ...]  # Delta_s for s = k+1 .. n

    @classmethod
    def from_trace(cls, tr: StrictSetsTrace) -> "StrictRoundsGraph":
        deltas = tr.deltas
        return cls(tr.k, tr.n, tuple(deltas[s] for s in range(tr.k + 1, tr.n + 1)))

    def weight(self, s: int) -> int:
        return self.weights[s - self.k - 1]

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """Yield (u, s, weight) triples."""
        for s in range(self.k + 1, self.n + 1):
            for u in range(s, min(2 * s - self.k - 1, self.n) + 1):
                yield (u, s, 2 * s - self.k - u)

    def weighted_out_degree(self, u: int) -> int:
        return sum(w for uu, _, w in self.edges() if uu == u)

    def to_dot(self) -> str:
        lines = ["digraph strict_rounds {"]
        for s in range(self.k + 1, self.n + 1):
            lines.append(f'  v{s} [label="s={s}, w={self.weight(s)}"];')
        for u, s, w in self.edges():
            lines.append(f'  v{u} -> v{s} [label="{w}"];')
        lines.append("}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Certificate verification
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict

    def to_json_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class VerificationReport:
    checks: list[CheckResult]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_json_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "checks": [c.to_json_dict() for c in self.checks],
        }

    def to_table(self) -> str:
        width = max((len(c.name) for c in self.checks), default=4)
        lines = [f"{'check'.ljust(width)}  result  detail"]
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{c.name.ljust(width)}  {status}    {c.detail}")
        return "\n".join(lines)


def verify_strict_inequalities(
    tr: StrictSetsTrace, samples: int = 16, seed: int = 0
) -> VerificationReport:
    """Evaluate every certificate inequality on a concrete strict-sets trace
    and report both sides; a failure falsifies the implementation, not the
    bound."""
    checks: list[CheckResult] = []
    k, n, trace = tr.k, tr.n, tr.trace
    fm = full_mask(n)

    checks.append(CheckResult(
        "complete", tr.complete, {"levels": sorted(tr.sets)},
    ))
    for s, pairs in sorted(tr.sets.items()):
        checks.append(CheckResult(
            f"cardinality[s={s}]", len(pairs) == s and len(set(pairs)) == s,
            {"size": len(pairs)},
        ))
    for s, pairs in sorted(tr.sets.items()):
        covered = 0
        for a_i, t_i in pairs:
            covered |= trace.out_mask(t_i + 1, tr.t_prime, a_i)
        checks.append(CheckResult(
            f"cover[s={s}]", covered == fm,
            {"covered": covered.bit_count(), "needed": n},
        ))
    marks = tr.t_marks
    order_ok = all(
        marks[s] <= marks[s + 1] for s in sorted(marks) if s + 1 in marks
    )
    checks.append(CheckResult("t_marks_monotone", order_ok, {"t_marks": dict(sorted(marks.items()))}))
    for s, pairs in sorted(tr.sets.items()):
        if s not in marks:
            continue
        ok = all(marks[s] <= t_i + 1 for _, t_i in pairs)
        checks.append(CheckResult(
            f"mark_below_members[s={s}]", ok,
            {"t_mark": marks[s], "max_allowed": min(t for _, t in pairs) + 1 if pairs else None},
        ))
    levels = sorted(tr.sets)
    bad_pairs = []
    for si in levels:
        for u in levels:
            if si > u:
                continue
            inter = len(set(tr.sets[si]) & set(tr.sets[u]))
            if inter < 2 * si - u:
                bad_pairs.append({"s": si, "u": u, "have": inter, "need": 2 * si - u})
    checks.append(CheckResult(
        "intersections", not bad_pairs,
        {"pairs_checked": len(levels) * (len(levels) + 1) // 2, "violations": bad_pairs},
    ))

    deltas = tr.deltas
    if tr.complete:
        for s in range(k + 1, n + 1):
            lhs = sum(
                (2 * s - k - u) * deltas[u]
                for u in range(s, min(2 * s - k - 1, n) + 1)
            )
            checks.append(CheckResult(
                f"window_sum[s={s}]", lhs <= n, {"lhs": lhs, "rhs": n},
            ))
        for u in range(k + 1, n + 1):
            lhs = sum(deltas[s] * alpha(s, k) for s in range(k + 1, u + 1))
            checks.append(CheckResult(
                f"volume_prefix[u={u}]", lhs <= (u - k) * n,
                {"lhs": lhs, "rhs": (u - k) * n},
            ))
        srg = StrictRoundsGraph.from_trace(tr)
        edge_list = list(srg.edges())
        for u in range(k + 1, n + 1):
            lhs = sum(deltas[s] * w for s, _, w in edge_list if s <= u)
            checks.append(CheckResult(
                f"edge_prefix[u={u}]", lhs <= (u - k) * n,
                {"lhs": lhs, "rhs": (u - k) * n},
            ))
        total = sum(deltas.values())
        beta_n = _BETA_IV * n
        # total is an integer and beta*n irrational, so the interval decides
        checks.append(CheckResult(
            "total_gap", total <= beta_n.a, {"sum": total, "beta_n": float(beta_n.mid)},
        ))
        checks.extend(_strict_increment_spot_checks(tr, samples, seed))
    return VerificationReport(checks)


def _strict_increment_spot_checks(
    tr: StrictSetsTrace, samples: int, seed: int
) -> list[CheckResult]:
    """Sample strict (A_s, t) pairs and confirm that, apart from at most k
    exceptions, every member's in-set strictly grows one round earlier."""
    rnd = random.Random(seed)
    trace = tr.trace
    out: list[CheckResult] = []
    eligible = [
        s for s in sorted(tr.sets)
        if s in tr.t_marks and tr.t_marks[s] + 1 >= 2
    ]
    if not eligible:
        return [CheckResult("strict_increments", True, {"sampled": 0})]
    failures = 0
    tried = 0
    for _ in range(samples):
        s = rnd.choice(eligible)
        pairs = tr.sets[s]
        hi = min(t for _, t in pairs) + 1
        lo = tr.t_marks[s] + 1
        if lo > hi or hi < 2:
            continue
        t = rnd.randint(max(lo, 2), max(hi, 2))
        if t > hi:
            continue
        tried += 1
        idx = [i for i, (_, t_i) in enumerate(pairs) if t <= t_i + 1]
        roots = forest_roots(trace.rounds[t - 2])
        grown = 0
        ok = True
        for i in idx:
            a_i, t_i = pairs[i]
            cur = trace.in_mask(t, t_i, a_i)
            if any(cur >> r & 1 for r in roots):
                continue
            grown += 1
            prev = trace.in_mask(t - 1, t_i, a_i)
            if prev.bit_count() <= cur.bit_count():
                ok = False
        if grown < len(idx) - tr.k or not ok:
            failures += 1
    return [CheckResult(
        "strict_increments", failures == 0, {"sampled": tried, "failures": failures},
    )]


# ---------------------------------------------------------------------------
# Pointwise neighborhood properties, sampled on concrete traces
# ---------------------------------------------------------------------------


def check_duality(trace: ProductTrace, rnd: random.Random, samples: int) -> int:
    """Violations of: x in Out(t,t2,y) iff y is in In(t,t2,x)."""
    n, T = trace.n, len(trace)
    bad = 0
    for _ in range(samples):
        t2 = rnd.randint(0, T)
        t = rnd.randint(0, min(t2 + 2, T + 1))
        x, y = rnd.randrange(n), rnd.randrange(n)
        if (trace.out_mask(t, t2, y) >> x & 1) != (trace.in_mask(t, t2, x) >> y & 1):
            bad += 1
    return bad


def check_transitivity(trace: ProductTrace, rnd: random.Random, samples: int) -> int:
    """Violations of the three relay clauses, e.g. reaching y by round t'
    and y reaching z afterwards means x reaches z overall."""
    n, T = trace.n, len(trace)
    bad = 0
    for _ in range(samples):
        t = rnd.randint(0, T)
        tp = rnd.randint(max(0, t - 1), T)
        tpp = rnd.randint(max(0, tp), T)
        x, y, z = rnd.randrange(n), rnd.randrange(n), rnd.randrange(n)
        out_x = trace.out_mask(t, tp, x)
        out_y = trace.out_mask(tp + 1, tpp, y)
        full_out_x = trace.out_mask(t, tpp, x)
        if (out_x >> y & 1) and (out_y >> z & 1) and not (full_out_x >> z & 1):
            bad += 1
        in_y = trace.in_mask(t, tp, y)
        if (in_y >> x & 1) and (out_y >> z & 1) and not (full_out_x >> z & 1):
            bad += 1
        in_z = trace.in_mask(tp + 1, tpp, z)
        if (in_y >> x & 1) and (in_z >> y & 1) and not (full_out_x >> z & 1):
            bad += 1
    return bad


def check_monotonicity(trace: ProductTrace, rnd: random.Random, samples: int) -> int:
    """Violations of interval widening: neighborhoods over [t2, t3] are
    contained in those over [t1, t4] whenever t1 <= t2 and t3 <= t4."""
    n, T = trace.n, len(trace)
    bad = 0
    for _ in range(samples):
        t1 = rnd.randint(0, T)
        t2 = rnd.randint(t1, T + 1)
        t3 = rnd.randint(-1, T)
        t4 = rnd.randint(t3, T)
        x = rnd.randrange(n)
        inner_in = trace.in_mask(t2, t3, x)
        outer_in = trace.in_mask(t1, t4, x)
        inner_out = trace.out_mask(t2, t3, x)
        outer_out = trace.out_mask(t1, t4, x)
        if inner_in & ~outer_in or inner_out & ~outer_out:
            bad += 1
    return bad


def check_propagation(
    trace: ProductTrace, roots: list[int], rnd: random.Random, samples: int
) -> int:
    """Violations of the two growth clauses on rooted rounds: a missing
    round-root strictly grows the in-set one round earlier, and reaching a
    later round's root strictly grows the out-set there (until full)."""
    n, T = trace.n, len(trace)
    fm = full_mask(n)
    bad = 0
    for _ in range(samples):
        t = rnd.randint(1, T)
        tp = rnd.randint(t, T)
        x = rnd.randrange(n)
        narrow = trace.in_mask(t + 1, tp, x)
        if not (narrow >> roots[t - 1] & 1):
            wide = trace.in_mask(t, tp, x)
            if wide.bit_count() <= narrow.bit_count():
                bad += 1
        before = trace.out_mask(t, tp - 1, x)
        if (before >> roots[tp - 1] & 1) and before != fm:
            after = trace.out_mask(t, tp, x)
            if after.bit_count() <= before.bit_count():
                bad += 1
    return bad


def check_root_counting(
    trace: ProductTrace, roots: list[int], rnd: random.Random, samples: int
) -> int:
    """Violations of: the number of rounds in [t1, t2] whose root is missing
    from the in-set, plus one, never exceeds the in-set size."""
    n, T = trace.n, len(trace)
    bad = 0
    for _ in range(samples):
        t1 = rnd.randint(1, T)
        t2 = rnd.randint(t1, T)
        x = rnd.randrange(n)
        known = trace.in_mask(t1, t2, x)
        missing = sum(
            1 for t in range(t1, t2 + 1) if not (known >> roots[t - 1] & 1)
        )
        if missing + 1 > known.bit_count():
            bad += 1
    return bad


def smallest_roots(trace: ProductTrace) -> list[int]:
    """Smallest root of each round, the deterministic root choice used by
    every certificate builder here."""
    return [min(roots_reaching_all(g)) for g in trace.rounds]
