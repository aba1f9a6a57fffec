"""Neighbor-list placement on PIM units and selective duplication."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .graph import CsrGraph
from .memory import ID_BYTES, AccessTier, PimTopology, access_cost, blocks_for, unit_of


class PlacementError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Placement:
    owner: np.ndarray
    mapping_kind: str
    dup_boundary: np.ndarray
    bytes_used: np.ndarray
    owned_bytes: np.ndarray
    copy_cycles: int = 0

    @property
    def num_units(self) -> int:
        return len(self.dup_boundary)

    @property
    def duplicated_bytes(self) -> int:
        return int(self.bytes_used.sum() - self.owned_bytes.sum())


def place_round_robin(g: CsrGraph, topo: PimTopology, mapping_kind: str = "default") -> Placement:
    if mapping_kind not in ("default", "local_first"):
        raise ValueError(f"unknown mapping {mapping_kind!r}")
    n, u = g.num_vertices, topo.num_units
    owner = np.arange(n, dtype=np.int64) % u
    list_bytes = ID_BYTES * g.degrees.astype(np.int64)
    used = np.bincount(owner, weights=list_bytes, minlength=u).astype(np.int64)
    if np.any(used > topo.unit_capacity_bytes):
        raise PlacementError("graph does not fit in PIM memory")
    return Placement(owner, mapping_kind, np.zeros(u, dtype=np.int64), used, used.copy())


def duplication_boundary(g: CsrGraph | Sequence[int], free_bytes_per_unit: int) -> int:
    """Greedy prefix of the degree-sorted vertices whose lists fit the budget.

    ``g`` may also be a plain sequence of per-vertex list sizes in bytes.
    """
    sizes = (ID_BYTES * g.degrees).tolist() if isinstance(g, CsrGraph) else list(g)
    used = 0
    for i, size in enumerate(sizes):
        if used + size > free_bytes_per_unit:
            return i
        used += size
    return len(sizes)


def auto_budget(p: Placement, topo: PimTopology) -> int:
    return (topo.capacity_bytes - int(p.bytes_used.sum())) // topo.num_units


def apply_duplication(p: Placement, g: CsrGraph, v_b: int, topo: PimTopology) -> Placement:
    """Replicate lists ``[0, v_b)`` into every unit; records the one-time copy cost."""
    if v_b == 0:
        return p
    if not 0 <= v_b <= g.num_vertices:
        raise PlacementError(f"v_b={v_b} outside [0, {g.num_vertices}]")
    extra = int(ID_BYTES * g.degrees[:v_b].sum())
    used = p.bytes_used + extra
    if np.any(used > topo.unit_capacity_bytes):
        raise PlacementError("duplication exceeds a unit's memory budget")
    copy = 0
    deg = g.degrees.tolist()
    for unit in range(topo.num_units):
        ch, bg = unit_of(unit, topo)
        for v in range(v_b):
            src = int(p.owner[v])
            if src == unit or deg[v] == 0:
                continue
            tier = AccessTier.INTRA if src % topo.num_channels == ch else AccessTier.INTER
            copy += access_cost(tier, blocks_for(deg[v], topo), topo)
    return replace(p, dup_boundary=np.full(p.num_units, v_b, dtype=np.int64), bytes_used=used, copy_cycles=copy)


def resolve_owner(p: Placement, requester_unit: int, v: int) -> tuple[int, bool]:
    if v < p.dup_boundary[requester_unit]:
        return requester_unit, True
    o = int(p.owner[v])
    return o, o == requester_unit
