"""Patterns, automorphisms, and nested-loop plan compilation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from typing import Optional

INDUCED = "induced"
NON_INDUCED = "non_induced"
SEMANTICS = (INDUCED, NON_INDUCED)


class PlanCompileError(RuntimeError):
    pass


def parse_semantics(s: str) -> str:
    key = s.strip().lower().replace("-", "_")
    if key in ("noninduced", "non_induced"):
        return NON_INDUCED
    if key == "induced":
        return INDUCED
    raise ValueError(f"unknown semantics {s!r}")


@dataclass(frozen=True)
class Pattern:
    name: str
    adjacency: tuple[tuple[bool, ...], ...]

    def __post_init__(self):
        k = len(self.adjacency)
        if not 3 <= k <= 6:
            raise ValueError("pattern size must be between 3 and 6")
        for i in range(k):
            if len(self.adjacency[i]) != k or self.adjacency[i][i]:
                raise ValueError("adjacency must be square with a zero diagonal")
            for j in range(k):
                if self.adjacency[i][j] != self.adjacency[j][i]:
                    raise ValueError("adjacency must be symmetric")
        if not _connected(self.adjacency):
            raise ValueError("pattern must be connected")

    @property
    def k(self) -> int:
        return len(self.adjacency)

    @property
    def num_edges(self) -> int:
        return sum(self.adjacency[i][j] for i in range(self.k) for j in range(i + 1, self.k))

    def degrees(self) -> list[int]:
        return [sum(row) for row in self.adjacency]

    @classmethod
    def from_edges(cls, name: str, k: int, edges) -> "Pattern":
        a = [[False] * k for _ in range(k)]
        for u, v in edges:
            a[u][v] = a[v][u] = True
        return cls(name, tuple(tuple(r) for r in a))


def _connected(adj) -> bool:
    k = len(adj)
    seen, stack = {0}, [0]
    while stack:
        u = stack.pop()
        for w in range(k):
            if adj[u][w] and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == k


def _clique(name, k):
    return Pattern.from_edges(name, k, [(i, j) for i in range(k) for j in range(i + 1, k)])


BUILTIN_PATTERNS = {
    "3cc": lambda: _clique("3cc", 3),
    "wedge": lambda: Pattern.from_edges("wedge", 3, [(0, 1), (0, 2)]),
    "4cc": lambda: _clique("4cc", 4),
    "5cc": lambda: _clique("5cc", 5),
    "4di": lambda: Pattern.from_edges("4di", 4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]),
    "4cl": lambda: Pattern.from_edges("4cl", 4, [(0, 1), (1, 2), (2, 3), (3, 0)]),
}


def builtin_pattern(name: str) -> Pattern:
    try:
        return BUILTIN_PATTERNS[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown pattern {name!r}; choose from {sorted(BUILTIN_PATTERNS)}") from None


def automorphisms(p: Pattern) -> list[tuple[int, ...]]:
    """All vertex permutations preserving adjacency (brute force over k!)."""
    k, a = p.k, p.adjacency
    return [s for s in permutations(range(k))
            if all(a[s[i]][s[j]] == a[i][j] for i in range(k) for j in range(i + 1, k))]


@dataclass(frozen=True)
class SetExpr:
    level: int
    positive_sources: tuple[int, ...]
    negative_sources: tuple[int, ...]


@dataclass(frozen=True)
class Restriction:
    """Matched ids must satisfy ``v[smaller] < v[larger]``."""
    smaller: int
    larger: int


@dataclass(frozen=True)
class LoopPlan:
    pattern: Pattern
    semantics: str
    order: tuple[int, ...]
    set_exprs: tuple[SetExpr, ...]
    restrictions: frozenset[Restriction]

    @property
    def depth(self) -> int:
        return self.pattern.k

    def expr(self, level: int) -> SetExpr:
        return self.set_exprs[level - 1]

    def upper_bound_levels(self, level: int) -> tuple[int, ...]:
        return tuple(sorted(r.larger for r in self.restrictions if r.smaller == level))

    def exclusion_levels(self, level: int) -> tuple[int, ...]:
        """Earlier levels whose vertex is not removed by a positive source."""
        pos = set(self.expr(level).positive_sources)
        return tuple(j for j in range(level) if j not in pos)

    def referenced(self, level: int) -> bool:
        """Whether some deeper level reads N(v[level])."""
        return any(level in e.positive_sources or level in e.negative_sources
                   for e in self.set_exprs if e.level > level)

    def filter_groups(self, level: int) -> Optional[tuple[tuple[int, ...], ...]]:
        """Threshold sources for fetching N(v[level]).

        One tuple per deeper level reading the list, holding the levels
        ``j <= level`` that bound it from above (directly or by chain).  The
        safe threshold is ``max`` over groups of ``min`` of the bound vertices.
        ``None`` when some reader is unbounded, i.e. nothing may be filtered.
        """
        closure = _upper_closure(self.restrictions, self.depth)
        groups = []
        for e in self.set_exprs:
            if e.level > level and (level in e.positive_sources or level in e.negative_sources):
                g = tuple(sorted(j for j in closure[e.level] if j <= level))
                if not g:
                    return None
                groups.append(g)
        return tuple(groups) if groups else None

    def without_restrictions(self) -> "LoopPlan":
        return LoopPlan(self.pattern, self.semantics, self.order, self.set_exprs, frozenset())


def _upper_closure(restrictions, depth) -> list[set[int]]:
    up = [set() for _ in range(depth)]
    for r in restrictions:
        up[r.smaller].add(r.larger)
    changed = True
    while changed:
        changed = False
        for i in range(depth):
            extra = set().union(*(up[j] for j in up[i])) - up[i] if up[i] else set()
            if extra:
                up[i] |= extra
                changed = True
    return up


def matching_order(p: Pattern) -> tuple[int, ...]:
    """Max-degree vertex first, then greedily the most-connected neighbor of the prefix."""
    deg = p.degrees()
    a = p.adjacency
    first = max(range(p.k), key=lambda v: (deg[v], -v))
    order = [first]
    while len(order) < p.k:
        cands = [v for v in range(p.k) if v not in order and any(a[v][u] for u in order)]
        order.append(max(cands, key=lambda v: (sum(a[v][u] for u in order), deg[v], -v)))
    return tuple(order)


def symmetry_restrictions(adj) -> frozenset[Restriction]:
    """One restriction per non-identity automorphism, then transitive reduction.

    For automorphism ``s`` with smallest moved level ``i`` the restriction is
    ``v[s(i)] < v[i]``: the later level is bounded above by the earlier one.
    """
    k = len(adj)
    auts = [s for s in permutations(range(k))
            if all(adj[s[i]][s[j]] == adj[i][j] for i in range(k) for j in range(i + 1, k))]
    rs = set()
    for s in auts:
        moved = [i for i in range(k) if s[i] != i]
        if moved:
            i = moved[0]
            rs.add((s[i], i))
    succ = {i: {b for a, b in rs if a == i} for i in range(k)}

    def implied(a, d):
        # path a -> ... -> d of length >= 2
        stack = [b for b in succ[a] if b != d]
        seen = set(stack)
        while stack:
            x = stack.pop()
            if d in succ[x]:
                return True
            for y in succ[x] - seen:
                seen.add(y)
                stack.append(y)
        return False

    return frozenset(Restriction(a, b) for a, b in rs if not implied(a, b))


def compile_plan(p: Pattern, semantics: str = NON_INDUCED, validate: bool = True) -> LoopPlan:
    semantics = parse_semantics(semantics)
    order = matching_order(p)
    a = [[p.adjacency[order[i]][order[j]] for j in range(p.k)] for i in range(p.k)]
    exprs = []
    for lvl in range(1, p.k):
        pos = tuple(j for j in range(lvl) if a[j][lvl])
        neg = tuple(j for j in range(lvl) if not a[j][lvl]) if semantics == INDUCED else ()
        if not pos:
            raise PlanCompileError(f"level {lvl} of {p.name} has no positive source")
        exprs.append(SetExpr(lvl, pos, neg))
    plan = LoopPlan(p, semantics, order, tuple(exprs), symmetry_restrictions(a))
    if any(r.smaller < r.larger for r in plan.restrictions):
        raise PlanCompileError("restriction would bound a later level from below")
    closure = _upper_closure(plan.restrictions, p.k)
    if any(i in closure[i] for i in range(p.k)):
        raise PlanCompileError("restrictions form a cycle")
    if validate:
        _validate(plan)
    return plan


def _validate(plan: LoopPlan, trials: int = 20) -> None:
    from .enumerate import oracle_count, reference_count
    from .graph import gen_er_graph

    for t in range(trials):
        n = 6 + t % 10
        g = gen_er_graph(n, (0.2, 0.35, 0.5)[t % 3], seed=1000 + t)
        got, _ = reference_count(plan, g)
        want = oracle_count(plan.pattern, g, plan.semantics)
        if got != want:
            raise PlanCompileError(
                f"plan for {plan.pattern.name}/{plan.semantics} counts {got}, oracle {want} "
                f"(ER n={n}, seed={1000 + t})")


@lru_cache(maxsize=None)
def cached_plan(name: str, semantics: str) -> LoopPlan:
    return compile_plan(builtin_pattern(name), semantics)
