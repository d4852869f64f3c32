"""Independent reference models used only by the tests.

Nothing here imports the arithmetic or search code under test.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

FRAC = 28
LO, HI = -(2**31), 2**31 - 1


def loop_matmul(a, b):
    a, b = np.asarray(a), np.asarray(b)
    m, k = a.shape
    n = b.shape[1]
    out = np.zeros((m, n), dtype=complex)
    for i in range(m):
        for j in range(n):
            s = 0j
            for kk in range(k):
                s += a[i, kk] * b[kk, j]
            out[i, j] = s
    return out


def loop_trace(m):
    return sum(m[i, i] for i in range(len(m)))


def clamp(v: int) -> tuple[int, bool]:
    if v > HI:
        return HI, True
    if v < LO:
        return LO, True
    return v, False


def ref_mul(a: tuple[int, int], b: tuple[int, int]) -> tuple[tuple[int, int], bool]:
    """Exact rational product rounded half-to-even at 2**-28, then clamped."""
    (ar, ai), (br, bi) = a, b
    re = round(Fraction(ar * br - ai * bi, 2**FRAC))
    im = round(Fraction(ar * bi + ai * br, 2**FRAC))
    re, s1 = clamp(re)
    im, s2 = clamp(im)
    return (re, im), s1 or s2


def ref_add(a, b):
    re, s1 = clamp(a[0] + b[0])
    im, s2 = clamp(a[1] + b[1])
    return (re, im), s1 or s2


def ref_mac(acc, a, b):
    p, s1 = ref_mul(a, b)
    r, s2 = ref_add(acc, p)
    return r, s1 or s2


def ref_gemm(a_re, a_im, b_re, b_im):
    """Big-integer GEMM, accumulating k = 0..K-1 for each entry."""
    m, k = a_re.shape
    n = b_re.shape[1]
    c_re = np.zeros((m, n), dtype=np.int64)
    c_im = np.zeros((m, n), dtype=np.int64)
    for i in range(m):
        for j in range(n):
            acc = (0, 0)
            for kk in range(k):
                acc, _ = ref_mac(
                    acc,
                    (int(a_re[i, kk]), int(a_im[i, kk])),
                    (int(b_re[kk, j]), int(b_im[kk, j])),
                )
            c_re[i, j], c_im[i, j] = acc
    return c_re, c_im


def best_objective_bruteforce(nodes: dict[int, list[tuple[str, int]]]):
    """Minimum (peak_order, peak_elems, total_flops, steps) over every order.

    Works on groups of original nodes: a merged group's open legs are the
    indices with exactly one endpoint inside it, and a step's flop count is
    the product of dims over the union of both operands' indices.
    """
    dims = {i: d for legs in nodes.values() for i, d in legs}
    owners: dict[str, set[int]] = {}
    for nid, legs in nodes.items():
        for i, _ in legs:
            owners.setdefault(i, set()).add(nid)

    def open_legs(group: frozenset[int]) -> set[str]:
        return {i for i, o in owners.items() if len(o & group) == 1}

    best = None

    def rec(groups: list[frozenset[int]], peak_o: int, peak_e: int, flops: int, steps: int):
        nonlocal best
        if len(groups) == 1:
            key = (peak_o, peak_e, flops, steps)
            if best is None or key < best:
                best = key
            return
        for x, y in itertools.combinations(range(len(groups)), 2):
            g, h = groups[x], groups[y]
            union = open_legs(g) | open_legs(h)
            f = int(np.prod([dims[i] for i in union])) if union else 1
            merged = g | h
            out = open_legs(merged)
            e = int(np.prod([dims[i] for i in out])) if out else 1
            rest = [groups[z] for z in range(len(groups)) if z not in (x, y)] + [merged]
            rec(rest, max(peak_o, len(out)), max(peak_e, e), flops + f, steps + 1)

    rec([frozenset([nid]) for nid in nodes], 0, 0, 0, 0)
    return best


def random_closed_legs(rng: np.random.Generator, n_nodes: int, n_edges: int, dims=(1, 2, 3)):
    """Random multigraph as leg lists; every index joins two distinct nodes."""
    legs: dict[int, list[tuple[str, int]]] = {i: [] for i in range(n_nodes)}
    for e in range(n_edges):
        a, b = rng.choice(n_nodes, size=2, replace=False)
        d = int(rng.choice(dims))
        legs[int(a)].append((f"e{e}", d))
        legs[int(b)].append((f"e{e}", d))
    return legs


def random_valid_path(rng: np.random.Generator, nodes: dict[int, list[tuple[str, int]]]):
    """Uniformly pick a connected pair each step (any pair once none is connected)."""
    live = {k: [i for i, _ in v] for k, v in nodes.items()}
    nxt = max(live) + 1
    steps = []
    while len(live) > 1:
        ids = sorted(live)
        pairs = [(a, b) for a, b in itertools.combinations(ids, 2) if set(live[a]) & set(live[b])]
        if not pairs:
            pairs = list(itertools.combinations(ids, 2))
        a, b = pairs[int(rng.integers(len(pairs)))]
        if rng.random() < 0.5:
            a, b = b, a
        la, lb = live.pop(a), live.pop(b)
        live[nxt] = [i for i in la if i not in lb] + [i for i in lb if i not in la]
        steps.append((a, b))
        nxt += 1
    return steps
