"""Contraction-order search and cost accounting.

A path is a list of node-id pairs. Every step consumes its two nodes and
creates a new node whose id is one more than the largest id seen so far;
its legs are the left node's unshared legs followed by the right node's.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

Legs = tuple[tuple[str, int], ...]


class PathError(ValueError):
    """A contraction path is not executable on the given network."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class ContractionPath:
    steps: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple((int(a), int(b)) for a, b in self.steps))

    def __len__(self) -> int:
        return len(self.steps)

    def to_dict(self) -> dict:
        return {"steps": [list(s) for s in self.steps]}

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> ContractionPath:
        steps = d["steps"]
        for i, s in enumerate(steps):
            if len(s) != 2:
                raise PathError(f"expected a pair of node ids, got {s!r}", i)
        return cls(tuple(tuple(s) for s in steps))

    @classmethod
    def loads(cls, text: str) -> ContractionPath:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class CostReport:
    total_flops: int
    peak_elems: int
    peak_order: int
    steps: int
    total_elems: int = 0

    def objective(self) -> tuple[int, int, int, int]:
        return (self.peak_order, self.peak_elems, self.total_flops, self.steps)


@dataclass
class SearchBudget:
    wall_clock_limit: float | None = 600.0
    max_samples: int | None = None
    seed: int = 0


class SearchResult(NamedTuple):
    path: ContractionPath
    cost: CostReport
    samples_evaluated: int
    history: tuple = ()


def leg_map(network) -> dict[int, Legs]:
    """Node id -> ((index id, dim), ...) for a TensorNetwork or a plain mapping."""
    nodes = getattr(network, "nodes", network)
    out = {}
    for nid, t in nodes.items():
        legs = getattr(t, "legs", t)
        out[int(nid)] = tuple((leg.id, leg.dim) if hasattr(leg, "id") else (str(leg[0]), int(leg[1])) for leg in legs)
    return out


def merge_legs(left: Legs, right: Legs) -> tuple[Legs, int]:
    """Legs of the contraction of two nodes and the shared extent."""
    rids = {i for i, _ in right}
    lids = {i for i, _ in left}
    shared = 1
    out = []
    for i, d in left:
        if i in rids:
            shared *= d
        else:
            out.append((i, d))
    out.extend((i, d) for i, d in right if i not in lids)
    return tuple(out), shared


def _size(legs: Legs) -> int:
    return math.prod(d for _, d in legs)


def step_flops(left: Legs, right: Legs) -> int:
    _, shared = merge_legs(left, right)
    return (_size(left) // shared) * (_size(right) // shared) * shared


def iter_steps(network, path: ContractionPath) -> Iterator[tuple[int, int, int, Legs, Legs, Legs]]:
    """Validate while replaying: yields (new_id, left, right, left_legs, right_legs, out_legs)."""
    live = leg_map(network)
    next_id = max(live, default=-1) + 1
    for s, (a, b) in enumerate(path.steps):
        if a == b:
            raise PathError(f"node {a} contracted with itself", s)
        for x in (a, b):
            if x not in live:
                if x < next_id:
                    raise PathError(f"node {x} was already consumed", s)
                raise PathError(f"unknown node {x}", s)
        la, lb = live.pop(a), live.pop(b)
        out, _ = merge_legs(la, lb)
        live[next_id] = out
        yield next_id, a, b, la, lb, out
        next_id += 1
    if len(live) != 1:
        raise PathError(f"path leaves {len(live)} nodes uncontracted", len(path.steps))


def validate_path(network, path: ContractionPath) -> None:
    for _ in iter_steps(network, path):
        pass


def path_cost(network, path: ContractionPath) -> CostReport:
    flops = peak_elems = peak_order = total = 0
    for _, _, _, la, lb, out in iter_steps(network, path):
        _, shared = merge_legs(la, lb)
        flops += (_size(la) // shared) * (_size(lb) // shared) * shared
        e = _size(out)
        total += e
        peak_elems = max(peak_elems, e)
        peak_order = max(peak_order, len(out))
    return CostReport(flops, peak_elems, peak_order, len(path.steps), total)


def objective(cost: CostReport, mode: str = "lex", order_weight: float = 4.0):
    """Sort key for candidate paths.

    ``"lex"`` ranks by (peak_order, peak_elems, total_flops, steps).
    ``"weighted"`` is ``order_weight * peak_order + log2(peak_elems) +
    log2(total_flops)``, with the lexicographic tuple as a tie-breaker.
    """
    if mode == "lex":
        return cost.objective()
    if mode == "weighted":
        score = order_weight * cost.peak_order + math.log2(max(cost.peak_elems, 1))
        score += math.log2(max(cost.total_flops, 1))
        return (score,) + cost.objective()
    raise ValueError(f"unknown objective mode {mode!r}")


def select_path(candidates: Sequence[tuple[ContractionPath, CostReport]], mode: str = "lex") -> ContractionPath:
    """Best candidate by objective; ties go to the earlier candidate."""
    if not candidates:
        raise ValueError("no candidate paths to select from")
    best = min(range(len(candidates)), key=lambda i: (objective(candidates[i][1], mode), i))
    return candidates[best][0]


def _sequential_path(node_ids: Iterable[int]) -> ContractionPath:
    ids = sorted(node_ids)
    if len(ids) < 2:
        return ContractionPath(())
    steps = [(ids[0], ids[1])]
    nxt = ids[-1] + 1
    for nid in ids[2:]:
        steps.append((nxt, nid))
        nxt += 1
    return ContractionPath(tuple(steps))


def sequential_path(network) -> ContractionPath:
    """Left-to-right baseline: fold nodes into an accumulator in id order."""
    return _sequential_path(leg_map(network))


def _randomized_greedy(
    live: dict[int, Legs], temperature: float, rng: np.random.Generator | None
) -> ContractionPath:
    """Greedy by resulting size, with Gumbel-perturbed scores when ``temperature > 0``.

    A pair's score is ``log2(result size) - temperature * g`` with ``g``
    drawn once per candidate pair from a standard Gumbel, which samples
    steps with Boltzmann weights ``exp(-log2(size) / temperature)``. Ties
    fall to fewer flops, then the lowest id pair.
    """
    live = dict(live)
    next_id = max(live, default=-1) + 1
    by_index: dict[str, set[int]] = {}
    for nid, legs in live.items():
        for i, _ in legs:
            by_index.setdefault(i, set()).add(nid)

    heap: list = []

    def push(a: int, b: int) -> None:
        a, b = min(a, b), max(a, b)
        out, shared = merge_legs(live[a], live[b])
        size = _size(out)
        flops = (_size(live[a]) // shared) * (_size(live[b]) // shared) * shared
        score = math.log2(size)
        if temperature > 0:
            score -= temperature * float(rng.gumbel())
        heapq.heappush(heap, (score, flops, a, b))

    for nids in by_index.values():
        if len(nids) == 2:
            push(*sorted(nids))

    steps = []
    while len(live) > 1:
        pick = None
        while heap:
            _, _, a, b = heapq.heappop(heap)
            if a in live and b in live:
                pick = (a, b)
                break
        if pick is None:
            # disconnected remainder: cheapest outer product
            pick = min(
                itertools.combinations(sorted(live), 2),
                key=lambda p: (_size(live[p[0]]) * _size(live[p[1]]), p),
            )
        a, b = pick
        out, _ = merge_legs(live[a], live[b])
        for i, _ in live[a] + live[b]:
            by_index[i].discard(a)
            by_index[i].discard(b)
        del live[a], live[b]
        live[next_id] = out
        steps.append((a, b))
        for i, _ in out:
            peers = by_index.setdefault(i, set())
            for peer in sorted(peers):
                push(peer, next_id)
            peers.add(next_id)
        next_id += 1
    return ContractionPath(tuple(steps))


def greedy_search(network) -> ContractionPath:
    """Deterministic greedy order minimising each step's result size."""
    return _randomized_greedy(leg_map(network), 0.0, None)


def enumerate_paths(network) -> Iterator[ContractionPath]:
    """Every pairwise contraction order (exponential; small networks only)."""
    live0 = leg_map(network)

    def rec(ids: tuple[int, ...], next_id: int, acc: tuple) -> Iterator[ContractionPath]:
        if len(ids) <= 1:
            yield ContractionPath(acc)
            return
        for a, b in itertools.combinations(ids, 2):
            rest = tuple(x for x in ids if x not in (a, b)) + (next_id,)
            yield from rec(rest, next_id + 1, acc + ((a, b),))

    yield from rec(tuple(sorted(live0)), max(live0, default=-1) + 1, ())


def anneal_temperature(sample: int, period: int, t_start: float = 1.0, t_end: float = 0.05) -> float:
    """Temperature for ``sample`` >= 1, geometric from ``t_start`` to ``t_end``
    over ``period`` samples, restarting afterwards. Sample 0 is always 0."""
    if sample <= 0:
        return 0.0
    if period <= 1:
        return t_start
    frac = ((sample - 1) % period) / (period - 1)
    return t_start * (t_end / t_start) ** frac


def stochastic_search(
    network,
    budget: SearchBudget | None = None,
    *,
    mode: str = "lex",
    exhaustive: bool = False,
    exhaustive_limit: int = 6,
    t_start: float = 1.0,
    t_end: float = 0.05,
    clock=time.monotonic,
) -> SearchResult:
    """Budgeted randomized-greedy search keeping the best path seen.

    Sample 0 is plain greedy, so the result is never worse than
    :func:`greedy_search` under the chosen objective. Later samples run
    greedy with Gumbel-perturbed scores at an annealed temperature until
    ``max_samples`` or ``wall_clock_limit`` runs out. With ``exhaustive``
    and at most ``exhaustive_limit`` nodes, every order is scored instead.
    """
    budget = budget or SearchBudget()
    live = leg_map(network)
    rng = np.random.Generator(np.random.PCG64(budget.seed))
    start = clock()

    best_path = _randomized_greedy(live, 0.0, None)
    best_cost = path_cost(live, best_path)
    best_key = objective(best_cost, mode)
    history = [best_key]
    samples = 1

    def out_of_budget() -> bool:
        if budget.max_samples is not None and samples >= budget.max_samples:
            return True
        if budget.wall_clock_limit is not None and clock() - start >= budget.wall_clock_limit:
            return True
        return False

    if exhaustive and len(live) <= exhaustive_limit:
        for cand in enumerate_paths(live):
            cost = path_cost(live, cand)
            key = objective(cost, mode)
            samples += 1
            if key < best_key:
                best_path, best_cost, best_key = cand, cost, key
            history.append(best_key)
        return SearchResult(best_path, best_cost, samples, tuple(history))

    if budget.max_samples is None and budget.wall_clock_limit is None:
        raise ValueError("stochastic search needs a sample or wall-clock budget")
    period = budget.max_samples - 1 if budget.max_samples else 256
    while len(live) > 2 and not out_of_budget():
        tau = anneal_temperature(samples, period, t_start, t_end)
        cand = _randomized_greedy(live, tau, rng)
        cost = path_cost(live, cand)
        key = objective(cost, mode)
        if key < best_key:
            best_path, best_cost, best_key = cand, cost, key
        history.append(best_key)
        samples += 1
    return SearchResult(best_path, best_cost, samples, tuple(history))
