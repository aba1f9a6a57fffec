"""HBM-PIM geometry, address decoders, access tiers, and the conditional filter."""

from __future__ import annotations

import enum
import math
import operator
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional, Sequence

ID_BYTES = 4


@dataclass(frozen=True)
class PimTopology:
    num_channels: int = 32
    bank_groups_per_channel: int = 4
    banks_per_channel: int = 8
    block_bytes: int = 32
    capacity_bytes: int = 4 << 30
    lat_near: int = 10
    lat_intra: int = 40
    lat_inter: int = 140
    filter_setup: int = 2
    filters_per_bank_group: int = 2
    steal_overhead: int = 280
    compute_cycles_per_element: int = 1
    bank_serialization: bool = True
    clock_hz: float = 250e6

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.type in ("int", int) and v < 1:
                raise ValueError(f"{f.name} must be >= 1, got {v}")
        if self.banks_per_channel % self.bank_groups_per_channel:
            raise ValueError("banks_per_channel must be a multiple of bank_groups_per_channel")
        if not self.lat_near <= self.lat_intra <= self.lat_inter:
            raise ValueError("latencies must satisfy near <= intra <= inter")
        if self.capacity_bytes % (self.num_units * self.block_bytes * self.banks_per_group):
            raise ValueError("capacity must split into whole bank-striped regions per unit")

    @property
    def num_units(self) -> int:
        return self.num_channels * self.bank_groups_per_channel

    @property
    def banks_per_group(self) -> int:
        return self.banks_per_channel // self.bank_groups_per_channel

    @property
    def capacity_blocks(self) -> int:
        return self.capacity_bytes // self.block_bytes

    @property
    def region_blocks(self) -> int:
        return self.capacity_blocks // self.num_units

    @property
    def unit_capacity_bytes(self) -> int:
        return self.capacity_bytes // self.num_units

    def with_overrides(self, **kw) -> "PimTopology":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Location:
    channel: int
    bank_group: int
    bank: int
    unit: int
    block_offset: int

    @property
    def bank_key(self) -> tuple[int, int, int]:
        return (self.channel, self.bank_group, self.bank)


class AccessTier(enum.IntEnum):
    NEAR = 0
    INTRA = 1
    INTER = 2

    @property
    def label(self) -> str:
        return ("near", "intra", "inter")[self]


_CMP = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}


@dataclass(frozen=True)
class FilterSpec:
    cmp: str
    th: int
    enabled: bool = True

    def __post_init__(self):
        if self.cmp not in _CMP:
            raise ValueError(f"unsupported comparison {self.cmp!r}")


def unit_of(unit_id: int, topo: PimTopology) -> tuple[int, int]:
    """Units go round the channels first, then the bank groups."""
    if not 0 <= unit_id < topo.num_units:
        raise ValueError(f"unit {unit_id} out of range")
    return unit_id % topo.num_channels, unit_id // topo.num_channels


def unit_id_of(channel: int, bank_group: int, topo: PimTopology) -> int:
    return bank_group * topo.num_channels + channel


def _check_addr(block_addr: int, topo: PimTopology) -> None:
    if not 0 <= block_addr < topo.capacity_blocks:
        raise ValueError(f"block address {block_addr} out of range")


def decode_default(block_addr: int, topo: PimTopology) -> Location:
    """Channel-interleaved mapping: channel, then bank in group, then bank group."""
    _check_addr(block_addr, topo)
    c, b, g = topo.num_channels, topo.banks_per_group, topo.bank_groups_per_channel
    ch = block_addr % c
    bank = (block_addr // c) % b
    bg = (block_addr // (c * b)) % g
    return Location(ch, bg, bank, unit_id_of(ch, bg, topo), block_addr // (c * b * g))


def decode_local_first(block_addr: int, topo: PimTopology) -> Location:
    """Each unit owns one contiguous region, striped over its own banks."""
    _check_addr(block_addr, topo)
    unit, off = divmod(block_addr, topo.region_blocks)
    ch, bg = unit_of(unit, topo)
    return Location(ch, bg, off % topo.banks_per_group, unit, off // topo.banks_per_group)


DECODERS = {"default": decode_default, "local_first": decode_local_first}


def classify_access(requester_unit: int, target: Location, topo: PimTopology) -> AccessTier:
    if target.unit == requester_unit:
        return AccessTier.NEAR
    if target.channel == requester_unit % topo.num_channels:
        return AccessTier.INTRA
    return AccessTier.INTER


def tier_latency(tier: AccessTier, topo: PimTopology) -> int:
    return (topo.lat_near, topo.lat_intra, topo.lat_inter)[tier]


def access_cost(tier: AccessTier, n_blocks: int, topo: PimTopology) -> int:
    """Tier latency once, then one cycle per further block of the burst."""
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    return tier_latency(tier, topo) + n_blocks - 1


def blocks_for(n_ids: int, topo: PimTopology) -> int:
    return math.ceil(n_ids * ID_BYTES / topo.block_bytes)


@dataclass(frozen=True)
class FilterResult:
    kept: list
    filter_cycles: int
    payload_blocks_saved: int


def filter_stream(values: Sequence[int], spec: Optional[FilterSpec], topo: PimTopology) -> FilterResult:
    """Bank-side filter: keep ``v cmp th``; two ids per cycle after setup."""
    if any(values[i] >= values[i + 1] for i in range(len(values) - 1)):
        raise ValueError("filter input must be strictly ascending")
    if spec is None or not spec.enabled:
        return FilterResult(list(values), 0, 0)
    op = _CMP[spec.cmp]
    kept = [v for v in values if op(v, spec.th)]
    cycles = topo.filter_setup + math.ceil(len(values) / topo.filters_per_bank_group)
    saved = blocks_for(len(values), topo) - blocks_for(len(kept), topo)
    return FilterResult(kept, cycles, saved)


class BankTable:
    """Per-bank busy-until times; requests must be presented in arrival order."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.free_at: dict = {}

    def ready(self, bank_key, arrival: int, service: int) -> int:
        if not self.enabled:
            return arrival
        grant = max(arrival, self.free_at.get(bank_key, 0))
        self.free_at[bank_key] = grant + service
        return grant


def bank_ready(target: Location, arrival: int, busy: BankTable, service: int) -> int:
    return busy.ready(target.bank_key, arrival, service)
