"""Execution/Schedule tables and the per-channel stealing scheduler.

Table entries are loop indices: level 0 holds a root vertex id (a unit walks
its residue class ``unit, unit + U, ...``), level ``i`` holds a position in
the level-``i`` candidate list.  The schedule table is eager: every non-null
entry names an iteration that has not started yet, which is what makes it
safe for a thief to take the lowest non-null level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .memory import PimTopology

IDLE = 0b00
EXECUTING = 0b01
STEALING = 0b10
STOLEN = 0b11

RootFilter = Optional[Callable[[int], bool]]


class StealFailed(RuntimeError):
    pass


@dataclass
class UnitTables:
    exec: list
    sched: list
    # exclusive cap per level; set only on stolen entries so a thief never
    # walks into the victim's remaining siblings
    limit: list

    @property
    def depth(self) -> int:
        return len(self.exec)

    def is_empty(self) -> bool:
        return all(x is None for x in self.sched)

    def active_level(self) -> Optional[int]:
        for lvl in range(self.depth - 1, -1, -1):
            if self.exec[lvl] is not None:
                return lvl
        return None

    def stealable_level(self) -> Optional[int]:
        # innermost iterations have no subtree; moving one never pays for the transfer
        for lvl in range(max(1, self.depth - 1)):
            if self.sched[lvl] is not None:
                return lvl
        return None


@dataclass(frozen=True)
class StealEvent:
    thief: int
    victim: int
    level: int
    cycles_charged: int
    time: int = 0


def _first_root(start: int, num_units: int, num_roots: Optional[int], root_ok: RootFilter) -> Optional[int]:
    r = start
    while True:
        if num_roots is not None and r >= num_roots:
            return None
        if root_ok is None or root_ok(r):
            return r
        r += num_units


def init_tables(unit_id: int, plan_depth: int, topo: PimTopology,
                num_roots: Optional[int] = None, root_ok: RootFilter = None) -> UnitTables:
    first = _first_root(unit_id, topo.num_units, num_roots, root_ok)
    return UnitTables([None] * plan_depth, [first] + [None] * (plan_depth - 1), [None] * plan_depth)


def load_task(t: UnitTables) -> Optional[int]:
    """Move the deepest pending entry into the execution table; ``None`` if empty."""
    for lvl in range(t.depth - 1, -1, -1):
        if t.sched[lvl] is not None:
            t.exec[lvl] = t.sched[lvl]
            for j in range(lvl + 1, t.depth):
                t.exec[j] = None
            return lvl
    return None


def _advance(t: UnitTables, level: int, idx: int, length: int, num_units: int, root_ok: RootFilter) -> Optional[int]:
    bound = length if t.limit[level] is None else min(length, t.limit[level])
    if level == 0:
        nxt = _first_root(idx + num_units, num_units, bound, root_ok)
    else:
        nxt = idx + 1
    return nxt if nxt is not None and nxt < bound else None


def update_schedule(t: UnitTables, level_lengths: Sequence[int], num_units: int,
                    root_ok: RootFilter = None) -> None:
    """Point the schedule table past the task now held in the execution table.

    Only the active level moves (roots by ``num_units``, inner levels by 1);
    an exhausted level becomes null so the next load falls back to the
    already-pending entry below it.
    """
    a = t.active_level()
    if a is None:
        return
    t.sched[a] = _advance(t, a, t.exec[a], level_lengths[a], num_units, root_ok)
    for j in range(a + 1, t.depth):
        t.sched[j] = None


def push_child(t: UnitTables, level: int, length: int) -> None:
    """Open the loop at ``level`` after its parent produced ``length`` candidates."""
    if level < t.depth and length > 0:
        t.sched[level] = 0
        t.limit[level] = None


def steal(thief_id: int, thief: UnitTables, victim_id: int, victim: UnitTables,
          victim_level_lengths: Sequence[int], topo: PimTopology,
          root_ok: RootFilter = None, time: int = 0) -> StealEvent:
    """Transfer the victim's lowest pending iteration (and its subtree) to the thief."""
    lvl = victim.stealable_level()
    if lvl is None:
        raise StealFailed(f"unit {victim_id} has nothing left to steal")
    idx = victim.sched[lvl]
    depth = victim.depth
    thief.exec[:] = victim.exec[:lvl] + [None] * (depth - lvl)
    thief.sched[:] = [None] * depth
    thief.sched[lvl] = idx
    thief.limit[:] = [None] * depth
    thief.limit[lvl] = idx + 1
    victim.sched[lvl] = _advance(victim, lvl, idx, victim_level_lengths[lvl], topo.num_units, root_ok)
    return StealEvent(thief_id, victim_id, lvl, topo.steal_overhead, time)


@dataclass
class ChannelScheduler:
    channel: int
    units: tuple
    state: dict = field(default_factory=dict)
    related: dict = field(default_factory=dict)

    def __post_init__(self):
        for u in self.units:
            self.state.setdefault(u, EXECUTING)
            self.related.setdefault(u, None)

    def set_state(self, unit: int, code: int, related: Optional[int] = None) -> None:
        if code == STOLEN and related is None:
            raise ValueError("a unit being stolen from must name its thief")
        self.state[unit] = code
        self.related[unit] = related


def build_schedulers(topo: PimTopology) -> list[ChannelScheduler]:
    c = topo.num_channels
    return [ChannelScheduler(ch, tuple(ch + c * g for g in range(topo.bank_groups_per_channel)))
            for ch in range(c)]


def find_victim(thief: int, schedulers: Sequence[ChannelScheduler],
                eligible: Optional[Callable[[int], bool]] = None) -> Optional[int]:
    """First executing unit: own channel by ascending id, then the following channels."""
    c = len(schedulers)
    home = next(i for i, s in enumerate(schedulers) if thief in s.units)
    for step in range(c):
        sch = schedulers[(home + step) % c]
        for u in sorted(sch.units):
            if u != thief and sch.state[u] == EXECUTING and (eligible is None or eligible(u)):
                return u
    return None
