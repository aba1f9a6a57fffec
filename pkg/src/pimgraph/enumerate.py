"""Functional pattern counting: the nested-loop executor and a brute-force oracle."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, islice, permutations
from typing import Iterable, Optional, Sequence

import numpy as np

from .graph import CsrGraph
from .patterns import INDUCED, LoopPlan, Pattern, automorphisms, parse_semantics
from .setops import intersect_count, subtract_count

ORACLE_MAX_VERTICES = 64


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class WorkVector:
    """Innermost loop-body iterations per root vertex."""
    per_root_work: np.ndarray

    @property
    def total(self) -> int:
        return int(self.per_root_work.sum())


@dataclass(frozen=True)
class LevelOps:
    positive: tuple[int, ...]
    negative: tuple[int, ...]
    upper: tuple[int, ...]
    exclude: tuple[int, ...]


@lru_cache(maxsize=None)
def level_ops(plan: LoopPlan) -> tuple[Optional[LevelOps], ...]:
    ops = [None]
    for lvl in range(1, plan.depth):
        e = plan.expr(lvl)
        ops.append(LevelOps(e.positive_sources, e.negative_sources,
                            plan.upper_bound_levels(lvl), plan.exclusion_levels(lvl)))
    return tuple(ops)


def candidates(op: LevelOps, verts: Sequence[int], lists: Sequence[Sequence[int]]) -> tuple[list[int], int]:
    """Candidate list for one level plus the number of elements the merges touched."""
    bound = min(verts[j] for j in op.upper) if op.upper else None
    first = lists[op.positive[0]]
    lim = len(first) if bound is None else bisect_left(first, bound)
    cand = list(first[:lim])
    touched = lim
    for j in op.positive[1:]:
        cand, t = intersect_count(cand, lists[j], bound)
        touched += t
    for j in op.negative:
        cand, t = subtract_count(cand, lists[j], bound)
        touched += t
    for j in op.exclude:
        x = verts[j]
        i = bisect_left(cand, x)
        if i < len(cand) and cand[i] == x:
            del cand[i]
    return cand, touched


def reference_count(plan: LoopPlan, g: CsrGraph, roots: Optional[Iterable[int]] = None) -> tuple[int, WorkVector]:
    ops = level_ops(plan)
    depth = plan.depth
    adj = g.adjacency
    verts = [0] * depth
    lists: list = [None] * depth
    work = np.zeros(g.num_vertices, dtype=np.int64)

    def descend(level: int, cand: list[int]) -> int:
        if level == depth - 1:
            return len(cand)
        total = 0
        nxt = ops[level + 1]
        for v in cand:
            verts[level] = v
            lists[level] = adj[v]
            total += descend(level + 1, candidates(nxt, verts, lists)[0])
        return total

    count = 0
    for r in (range(g.num_vertices) if roots is None else roots):
        verts[0] = r
        lists[0] = adj[r]
        w = descend(1, candidates(ops[1], verts, lists)[0])
        work[r] = w
        count += w
    return count, WorkVector(work)


def _pair_index(k):
    return [(a, b) for a in range(k) for b in range(a + 1, k)]


def _maps_for_mask(p: Pattern, mask: int, induced: bool) -> int:
    """Bijections pattern -> k chosen graph vertices that respect the edge rule."""
    k = p.k
    pairs = _pair_index(k)
    host = [[False] * k for _ in range(k)]
    for bit, (a, b) in enumerate(pairs):
        if mask >> bit & 1:
            host[a][b] = host[b][a] = True
    total = 0
    for f in permutations(range(k)):
        ok = True
        for a, b in pairs:
            pe, he = p.adjacency[a][b], host[f[a]][f[b]]
            if (pe and not he) or (induced and he and not pe):
                ok = False
                break
        total += ok
    return total


def oracle_raw_count(p: Pattern, g: CsrGraph, semantics: str) -> int:
    """Number of injective maps pattern -> graph obeying the edge rule."""
    semantics = parse_semantics(semantics)
    n, k = g.num_vertices, p.k
    if n > ORACLE_MAX_VERTICES:
        raise OracleTooLarge(f"oracle limited to {ORACLE_MAX_VERTICES} vertices, graph has {n}")
    if n < k:
        return 0
    adj = g.dense()
    pairs = _pair_index(k)
    table: dict[int, int] = {}
    total = 0
    it = combinations(range(n), k)
    while True:
        chunk = np.fromiter((x for c in islice(it, 200_000) for x in c), dtype=np.int64)
        if not len(chunk):
            break
        sub = chunk.reshape(-1, k)
        mask = np.zeros(len(sub), dtype=np.int64)
        for bit, (a, b) in enumerate(pairs):
            mask |= adj[sub[:, a], sub[:, b]].astype(np.int64) << bit
        uniq, cnt = np.unique(mask, return_counts=True)
        for m, c in zip(uniq.tolist(), cnt.tolist()):
            if m not in table:
                table[m] = _maps_for_mask(p, m, semantics == INDUCED)
            total += table[m] * c
    return total


def oracle_count(p: Pattern, g: CsrGraph, semantics: str) -> int:
    raw = oracle_raw_count(p, g, semantics)
    aut = len(automorphisms(p))
    if raw % aut:
        raise ArithmeticError(f"injective map count {raw} not divisible by |Aut|={aut}")
    return raw // aut
