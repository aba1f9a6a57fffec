"""Event-driven execution of a loop plan on the modeled PIM units.

Every unit is a generator that walks its Execution/Schedule tables.  The
driver always resumes the unit with the smallest clock (ties by unit id), so
memory requests reach each bank in arrival order and steals happen at a
single, well-defined simulated instant.
"""

from __future__ import annotations

import heapq
import json
import math
from bisect import bisect_left
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

from .enumerate import WorkVector, candidates, level_ops, reference_count
from .graph import CsrGraph
from .memory import (ID_BYTES, AccessTier, BankTable, DECODERS, PimTopology, access_cost,
                     blocks_for, classify_access)
from .patterns import LoopPlan
from .placement import (Placement, apply_duplication, auto_budget, duplication_boundary,
                        place_round_robin, resolve_owner)
from .scheduler import (EXECUTING, IDLE, STEALING, STOLEN, UnitTables, build_schedulers,
                        find_victim, init_tables, load_task, push_child, steal, update_schedule)

_SYNC = object()
_PARK = object()

MAPPINGS = ("default", "local_first")


@dataclass(frozen=True)
class SimOptions:
    mapping_kind: str = "default"
    filter_on: bool = False
    duplication_budget: Union[None, str, int] = None
    stealing_on: bool = False
    sample_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.mapping_kind not in MAPPINGS:
            raise ValueError(f"unknown mapping {self.mapping_kind!r}")
        if not 0.0 < self.sample_ratio <= 1.0:
            raise ValueError("sample_ratio must lie in (0, 1]")
        b = self.duplication_budget
        if not (b is None or b == "auto" or (isinstance(b, int) and b >= 0)):
            raise ValueError(f"duplication budget must be None, 'auto' or bytes >= 0, got {b!r}")


@dataclass
class SimTrace:
    """Optional instrumentation; costs memory proportional to the run."""
    iterations: list = field(default_factory=list)
    steals: list = field(default_factory=list)
    state_log: list = field(default_factory=list)


@dataclass
class EventLog:
    num_units: int
    per_unit_cycles: list
    tier_accesses: list
    tier_blocks: list
    unfiltered_blocks: int
    filtered_blocks: int
    steal_levels: list
    pattern_count: int
    block_bytes: int
    clock_hz: float


@dataclass
class SimReport:
    pattern: str
    semantics: str
    pattern_count: int
    num_units: int
    per_unit_cycles: list
    exe_cycles: int
    avg_cycles: float
    exe_avg_ratio: float
    exe_seconds: float
    tier_accesses: dict
    tier_bytes: dict
    tier_fractions: dict
    local_access_ratio: float
    unfiltered_blocks: int
    transferred_blocks: int
    filtered_payload_blocks: int
    filtered_ratio: float
    steal_events: int
    steal_histogram: dict
    sampled_roots: int
    num_roots: int
    work_ratio_r: float
    estimated_exe_cycles: int
    dup_boundary: int
    duplicated_bytes: int
    duplication_copy_cycles: int
    bytes_used: list
    options: dict
    topology: dict
    component_counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, extra: Optional[dict] = None) -> str:
        d = self.to_dict()
        if extra:
            d.update(extra)
        return json.dumps(d, sort_keys=True, indent=2)


def sample_roots(n: int, ratio: float, num_units: int) -> list[int]:
    """Every ``round(1/ratio)``-th root of each unit, starting from its first.

    Striding inside each unit's own root sequence keeps every unit sampled at
    the same rate; a plain id stride that shares a factor with ``num_units``
    would leave whole units without roots.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError("ratio must lie in (0, 1]")
    if num_units < 1:
        raise ValueError("num_units must be >= 1")
    stride = max(1, math.floor(1.0 / ratio + 0.5))
    return [v for v in range(n) if (v // num_units) % stride == 0]


def work_ratio(full_work: WorkVector, sampled: Sequence[int], sample_ratio: Optional[float] = None) -> float:
    total = full_work.total
    if total == 0:
        if sample_ratio is not None:
            return sample_ratio
        return len(sampled) / max(1, len(full_work.per_root_work))
    return int(full_work.per_root_work[list(sampled)].sum()) / total


def estimate_full_time(sample_time: float, r: float) -> float:
    if r <= 0:
        raise ValueError("work ratio must be positive")
    return sample_time / r


def estimate_full_cycles(sample_cycles: int, r: float) -> int:
    return int(math.floor(estimate_full_time(sample_cycles, r) + 0.5))


def derive_metrics(log: EventLog) -> dict:
    cyc = list(log.per_unit_cycles)
    exe = max(cyc) if cyc else 0
    avg = sum(cyc) / len(cyc) if cyc else 0.0
    acc = list(log.tier_accesses)
    total_acc = sum(acc)
    labels = [t.label for t in AccessTier]
    if total_acc:
        fractions = {labels[i]: acc[i] / total_acc for i in range(3)}
    else:
        # nothing fetched: vacuously all-local
        fractions = {"near": 1.0, "intra": 0.0, "inter": 0.0}
    sent = sum(log.tier_blocks)
    moved = sent + log.filtered_blocks
    hist: dict = {}
    for lvl in log.steal_levels:
        hist[str(lvl)] = hist.get(str(lvl), 0) + 1
    return {
        "pattern_count": log.pattern_count,
        "num_units": log.num_units,
        "per_unit_cycles": cyc,
        "exe_cycles": exe,
        "avg_cycles": avg,
        "exe_avg_ratio": exe / avg if avg > 0 else 1.0,
        "exe_seconds": exe / log.clock_hz,
        "tier_accesses": {labels[i]: acc[i] for i in range(3)},
        "tier_bytes": {labels[i]: log.tier_blocks[i] * log.block_bytes for i in range(3)},
        "tier_fractions": fractions,
        "local_access_ratio": fractions["near"],
        "unfiltered_blocks": log.unfiltered_blocks,
        "transferred_blocks": sent,
        "filtered_payload_blocks": log.filtered_blocks,
        "filtered_ratio": log.filtered_blocks / moved if moved else 0.0,
        "steal_events": len(log.steal_levels),
        "steal_histogram": dict(sorted(hist.items())),
    }


def build_placement(g: CsrGraph, topo: PimTopology, opts: SimOptions) -> Placement:
    p = place_round_robin(g, topo, opts.mapping_kind)
    budget = opts.duplication_budget
    if budget is None:
        return p
    if budget == "auto":
        budget = auto_budget(p, topo)
    return apply_duplication(p, g, duplication_boundary(g, int(budget)), topo)


class _Unit:
    __slots__ = ("uid", "tables", "clock", "verts", "lists", "cands", "lens", "ctx",
                 "proc", "done", "finish", "steal_until")


class _Layout:
    """Block addresses of every list copy, decoded lazily with a cache.

    Under local-first mapping each unit's lists sit in its own region.  The
    default mapping has no notion of regions, so the lists are packed in id
    order like a CSR array and the interleaving spreads them over channels;
    duplicate copies follow, one block of copies per unit.
    """

    def __init__(self, g: CsrGraph, topo: PimTopology, placement: Placement):
        self.topo = topo
        self.decode = DECODERS[placement.mapping_kind]
        per_block = topo.block_bytes // ID_BYTES
        self.per_block = per_block
        nblk = [-(-d // per_block) for d in g.degrees.tolist()]
        self.nblk = nblk
        u, n = topo.num_units, g.num_vertices
        owner = placement.owner.tolist()
        self.owner = owner
        vb = int(placement.dup_boundary.max()) if len(placement.dup_boundary) else 0
        self.dup_off = [0] * (vb + 1)
        for v in range(vb):
            self.dup_off[v + 1] = self.dup_off[v] + nblk[v]
        dup_total = self.dup_off[-1]
        self.base = [0] * n
        if placement.mapping_kind == "local_first":
            fill = [0] * u
            for v in range(n):
                self.base[v] = owner[v] * topo.region_blocks + fill[owner[v]]
                fill[owner[v]] += nblk[v]
            if max(fill) + dup_total > topo.region_blocks:
                raise ValueError("neighbor lists overflow a unit's memory region")
            self.copy_base = [i * topo.region_blocks + fill[i] for i in range(u)]
        else:
            pos = 0
            for v in range(n):
                self.base[v] = pos
                pos += nblk[v]
            if pos + u * dup_total > topo.capacity_blocks:
                raise ValueError("neighbor lists overflow PIM memory")
            self.copy_base = [pos + i * dup_total for i in range(u)]
        self._cache: dict = {}

    def requests(self, serving: int, v: int, dup_copy: bool):
        base = self.copy_base[serving] + self.dup_off[v] if dup_copy else self.base[v]
        key = (base, self.nblk[v])
        hit = self._cache.get(key)
        if hit is None:
            groups: dict = {}
            for i in range(self.nblk[v]):
                loc = self.decode(base + i, self.topo)
                groups.setdefault(loc.bank_key, (loc, []))[1].append(i)
            hit = [(loc, tuple(blocks)) for loc, blocks in groups.values()]
            self._cache[key] = hit
        return hit


class Simulation:
    def __init__(self, g: CsrGraph, plan: LoopPlan, topo: PimTopology, placement: Placement,
                 opts: SimOptions, roots: Sequence[int], trace: Optional[SimTrace] = None):
        if placement.mapping_kind != opts.mapping_kind:
            raise ValueError("placement mapping differs from the requested mapping")
        if placement.num_units != topo.num_units:
            raise ValueError("placement was built for a different topology")
        self.g, self.plan, self.topo, self.p, self.opts, self.trace = g, plan, topo, placement, opts, trace
        self.adj = g.adjacency
        self.ops = level_ops(plan)
        self.depth = plan.depth
        self.referenced = [plan.referenced(i) for i in range(self.depth)]
        self.filter_groups = [plan.filter_groups(i) for i in range(self.depth)]
        self.layout = _Layout(g, topo, placement)
        self.banks = BankTable(topo.bank_serialization)
        mask = [False] * g.num_vertices
        for r in roots:
            mask[r] = True
        self.root_mask = mask
        self.root_ok = None if all(mask) else mask.__getitem__
        self.schedulers = build_schedulers(topo)
        self.now = 0
        self.parked: list[int] = []
        self.stolen: set[int] = set()
        self.count = 0
        self.tier_acc = [0, 0, 0]
        self.tier_blk = [0, 0, 0]
        self.unfiltered = 0
        self.saved = 0
        self.steal_levels: list[int] = []

    # -- scheduler state -------------------------------------------------
    def _sched_of(self, uid):
        return self.schedulers[uid % self.topo.num_channels]

    def _set_state(self, uid, code, related=None, at=None):
        if code != STOLEN:
            self.stolen.discard(uid)
        self._sched_of(uid).set_state(uid, code, related)
        if self.trace is not None:
            self.trace.state_log.append((self.now if at is None else at, uid, code, related))

    def _refresh_stolen(self):
        for v in sorted(self.stolen):
            if self.units[v].steal_until <= self.now:
                self._set_state(v, EXECUTING, at=self.units[v].steal_until)

    def _any_busy(self) -> bool:
        return any(s.state[u] in (EXECUTING, STOLEN) for s in self.schedulers for u in s.units)

    # -- memory ----------------------------------------------------------
    def _threshold(self, u: _Unit, level: int) -> Optional[int]:
        groups = self.filter_groups[level]
        if groups is None:
            return None
        vs = u.verts
        return max(min(vs[j] for j in grp) for grp in groups)

    def _fetch(self, u: _Unit, level: int) -> list[int]:
        v = u.verts[level]
        ids = self.adj[v]
        if not ids:
            return ids
        topo = self.topo
        serving, local = resolve_owner(self.p, u.uid, v)
        dup_copy = local and self.layout.owner[v] != u.uid
        th = self._threshold(u, level) if self.opts.filter_on else None
        per_block = self.layout.per_block
        done = self.now
        for loc, blocks in self.layout.requests(serving, v, dup_copy):
            tier = classify_access(u.uid, loc, topo)
            n_read = len(blocks)
            fcycles = 0
            sent = n_read
            if th is not None and tier != AccessTier.NEAR:
                n_vals = sum(min(per_block, len(ids) - b * per_block) for b in blocks)
                n_kept = sum(max(0, min(bisect_left(ids, th), (b + 1) * per_block) - b * per_block)
                             for b in blocks)
                fcycles = topo.filter_setup + -(-n_vals // topo.filters_per_bank_group)
                sent = blocks_for(n_kept, topo)
                self.saved += n_read - sent
            self.unfiltered += n_read
            self.tier_acc[tier] += 1
            self.tier_blk[tier] += sent
            grant = self.banks.ready(loc.bank_key, self.now, topo.lat_near + n_read - 1)
            done = max(done, grant + fcycles + access_cost(tier, max(1, sent), topo))
        u.clock = done
        if th is None:
            return ids
        return ids[:bisect_left(ids, th)]

    # -- execution -------------------------------------------------------
    def _expand(self, u: _Unit, level: int):
        """Bind-time work for ``verts[level]``: fetch its list, build the next candidates."""
        if self.referenced[level]:
            if u.clock > self.now:
                yield _SYNC
            u.lists[level] = self._fetch(u, level)
        cand, touched = candidates(self.ops[level + 1], u.verts, u.lists)
        u.clock += touched * self.topo.compute_cycles_per_element
        u.cands[level + 1] = cand
        u.lens[level + 1] = len(cand)

    def _bind(self, u: _Unit, level: int):
        idx = u.tables.exec[level]
        u.verts[level] = idx if level == 0 else u.cands[level][idx]

    def _task(self, u: _Unit, level: int):
        # a thief arrives with indices only; rebuild the outer context first
        for j in range(u.ctx + 1, level):
            self._bind(u, j)
            yield from self._expand(u, j)
            u.ctx = j
        self._bind(u, level)
        if self.trace is not None:
            self.trace.iterations.append(tuple(u.verts[:level + 1]))
        if level == self.depth - 1:
            self.count += 1
            u.clock += self.topo.compute_cycles_per_element
        else:
            yield from self._expand(u, level)
            push_child(u.tables, level + 1, u.lens[level + 1])
        u.ctx = level

    def _wake_one(self, u: _Unit):
        if self.parked and u.tables.stealable_level() is not None:
            t = self.parked.pop(0)
            w = self.units[t]
            w.clock = max(w.clock, u.clock)
            heapq.heappush(self.heap, (w.clock, t))

    def _life(self, u: _Unit):
        topo = self.topo
        while True:
            if u.clock > self.now:
                yield _SYNC
            lvl = load_task(u.tables)
            if lvl is not None:
                update_schedule(u.tables, u.lens, topo.num_units, self.root_ok)
                yield from self._task(u, lvl)
                self._wake_one(u)
                continue
            if not self.opts.stealing_on:
                self._set_state(u.uid, IDLE)
                return
            self._set_state(u.uid, STEALING)
            while True:
                if u.clock > self.now:
                    yield _SYNC
                self._refresh_stolen()
                victim = find_victim(u.uid, self.schedulers, self._has_work)
                if victim is not None:
                    self._do_steal(u, victim)
                    # still stealing until the transfer lands
                    yield _SYNC
                    break
                if not self._any_busy():
                    self._set_state(u.uid, IDLE)
                    self._terminate_parked()
                    return
                yield _PARK
            self._set_state(u.uid, EXECUTING)

    def _has_work(self, uid: int) -> bool:
        return self.units[uid].tables.stealable_level() is not None

    def _do_steal(self, u: _Unit, vid: int):
        v = self.units[vid]
        ev = steal(u.uid, u.tables, vid, v.tables, v.lens, self.topo, self.root_ok, time=self.now)
        self._set_state(u.uid, STEALING, vid)
        self._set_state(vid, STOLEN, u.uid)
        ov = ev.cycles_charged
        u.lens[:ev.level + 1] = v.lens[:ev.level + 1]
        u.ctx = -1
        u.clock = self.now + ov
        v.clock += ov
        v.steal_until = self.now + ov
        self.stolen.add(vid)
        self.steal_levels.append(ev.level)
        if self.trace is not None:
            self.trace.steals.append(ev)

    def _terminate_parked(self):
        # a parked thief last did useful work when its final steal attempt failed
        for t in self.parked:
            w = self.units[t]
            w.done = True
            w.finish = w.clock
            self._set_state(t, IDLE)
            w.proc.close()
        self.parked.clear()

    def run(self) -> EventLog:
        topo, n, depth = self.topo, self.g.num_vertices, self.depth
        self.units = []
        for uid in range(topo.num_units):
            u = _Unit()
            u.uid = uid
            u.tables = init_tables(uid, depth, topo, n, self.root_ok)
            u.clock = 0
            u.verts = [0] * depth
            u.lists = [None] * depth
            u.cands = [None] * depth
            u.lens = [n] + [0] * (depth - 1)
            u.ctx = -1
            u.done = False
            u.finish = 0
            u.steal_until = 0
            u.proc = self._life(u)
            self.units.append(u)
        self.heap = [(0, uid) for uid in range(topo.num_units)]
        heap = self.heap
        while heap:
            t, uid = heapq.heappop(heap)
            u = self.units[uid]
            if u.done:
                continue
            if t < u.clock:
                heapq.heappush(heap, (u.clock, uid))
                continue
            self.now = t
            try:
                cmd = next(u.proc)
            except StopIteration:
                u.done = True
                u.finish = u.clock
                continue
            if cmd is _SYNC:
                heapq.heappush(heap, (u.clock, uid))
            else:
                self.parked.append(uid)
        if self.parked:
            raise RuntimeError("simulation ended with parked units")
        return EventLog(topo.num_units, [u.finish for u in self.units], self.tier_acc, self.tier_blk,
                        self.unfiltered, self.saved, self.steal_levels, self.count,
                        topo.block_bytes, topo.clock_hz)


def merge_logs(logs: Sequence[EventLog]) -> EventLog:
    """Back-to-back runs on the same units: per-unit times and tallies add up."""
    first = logs[0]
    return EventLog(
        first.num_units,
        [sum(col) for col in zip(*(lg.per_unit_cycles for lg in logs))],
        [sum(col) for col in zip(*(lg.tier_accesses for lg in logs))],
        [sum(col) for col in zip(*(lg.tier_blocks for lg in logs))],
        sum(lg.unfiltered_blocks for lg in logs),
        sum(lg.filtered_blocks for lg in logs),
        [lvl for lg in logs for lvl in lg.steal_levels],
        sum(lg.pattern_count for lg in logs),
        first.block_bytes, first.clock_hz,
    )


def simulate_group(g: CsrGraph, plans: Sequence[LoopPlan], topo: Optional[PimTopology] = None,
                   opts: Optional[SimOptions] = None, name: Optional[str] = None,
                   placement: Optional[Placement] = None) -> SimReport:
    """Run several plans as one application, one after another, and merge the results."""
    if not plans:
        raise ValueError("need at least one plan")
    topo = topo or PimTopology()
    opts = opts or SimOptions()
    if placement is None:
        placement = build_placement(g, topo, opts)
    roots = sample_roots(g.num_vertices, opts.sample_ratio, topo.num_units)
    logs = [Simulation(g, pl, topo, placement, opts, roots).run() for pl in plans]
    r = 1.0
    if len(roots) < g.num_vertices:
        works = [reference_count(pl, g)[1].per_root_work for pl in plans]
        r = work_ratio(WorkVector(sum(works)), roots, opts.sample_ratio)
    semantics = {pl.semantics for pl in plans}
    return _report(name or "+".join(pl.pattern.name for pl in plans),
                   semantics.pop() if len(semantics) == 1 else "mixed",
                   merge_logs(logs), placement, opts, topo, roots, g.num_vertices, r,
                   {pl.pattern.name: lg.pattern_count for pl, lg in zip(plans, logs)})


def _report(name, semantics, log, placement, opts, topo, roots, n, r, components) -> SimReport:
    m = derive_metrics(log)
    return SimReport(
        pattern=name,
        semantics=semantics,
        sampled_roots=len(roots),
        num_roots=n,
        work_ratio_r=r,
        estimated_exe_cycles=estimate_full_cycles(m["exe_cycles"], r),
        dup_boundary=int(placement.dup_boundary.max()) if placement.num_units else 0,
        duplicated_bytes=placement.duplicated_bytes,
        duplication_copy_cycles=int(placement.copy_cycles),
        bytes_used=[int(x) for x in placement.bytes_used],
        options=asdict(opts),
        topology=topo.to_dict(),
        component_counts=components,
        **m,
    )


def simulate(g: CsrGraph, plan: LoopPlan, topo: Optional[PimTopology] = None,
             placement: Optional[Placement] = None, opts: Optional[SimOptions] = None,
             trace: Optional[SimTrace] = None, full_work: Optional[WorkVector] = None) -> SimReport:
    """Simulate one plan; ``full_work`` saves a functional pass when sampling."""
    topo = topo or PimTopology()
    opts = opts or SimOptions()
    if placement is None:
        placement = build_placement(g, topo, opts)
    roots = sample_roots(g.num_vertices, opts.sample_ratio, topo.num_units)
    log = Simulation(g, plan, topo, placement, opts, roots, trace).run()
    r = 1.0
    if len(roots) < g.num_vertices:
        if full_work is None:
            full_work = reference_count(plan, g)[1]
        r = work_ratio(full_work, roots, opts.sample_ratio)
    return _report(plan.pattern.name, plan.semantics, log, placement, opts, topo, roots,
                   g.num_vertices, r, {plan.pattern.name: log.pattern_count})
