import operator
import random

import pytest
from hypothesis import given, strategies as st

from pimgraph.memory import (AccessTier, BankTable, FilterSpec, Location, PimTopology, access_cost,
                             bank_ready, blocks_for, classify_access, decode_default, decode_local_first,
                             filter_stream, unit_id_of, unit_of)

from .strategies import sorted_sets

# two channels, two bank groups each, two banks per group, 16-block regions
SMALL = PimTopology(num_channels=2, bank_groups_per_channel=2, banks_per_channel=4, capacity_bytes=64 * 32)


def test_defaults():
    t = PimTopology()
    assert t.num_units == 128
    assert t.steal_overhead == 2 * t.lat_inter
    assert (t.lat_near, t.lat_intra, t.lat_inter) == (10, 40, 140)


@pytest.mark.parametrize("kw", [
    {"num_channels": 0}, {"lat_near": 50}, {"lat_intra": 200}, {"banks_per_channel": 6},
    {"capacity_bytes": 1000},
])
def test_topology_validation(kw):
    with pytest.raises(ValueError):
        PimTopology(**kw)


@pytest.mark.parametrize("unit,loc", [(0, (0, 0)), (1, (1, 0)), (3, (1, 1))])
def test_unit_of(unit, loc):
    assert unit_of(unit, SMALL) == loc
    assert unit_id_of(*loc, SMALL) == unit


def test_unit_of_range():
    with pytest.raises(ValueError):
        unit_of(4, SMALL)


@pytest.mark.parametrize("addr,ch,bg", [(0, 0, 0), (1, 1, 0), (4, 0, 1)])
def test_decode_default(addr, ch, bg):
    loc = decode_default(addr, SMALL)
    assert (loc.channel, loc.bank_group) == (ch, bg)


def test_decode_local_first():
    assert decode_local_first(0, SMALL).unit == 0
    loc = decode_local_first(16, SMALL)
    assert (loc.unit, loc.channel, loc.bank_group) == (1, 1, 0)
    assert {decode_local_first(a, SMALL).unit for a in range(16)} == {0}


def test_decode_out_of_range():
    with pytest.raises(ValueError):
        decode_default(SMALL.capacity_blocks, SMALL)


@pytest.mark.parametrize("decode", [decode_default, decode_local_first])
def test_decode_bijective(decode):
    locs = [decode(a, SMALL) for a in range(SMALL.capacity_blocks)]
    assert len(set(locs)) == SMALL.capacity_blocks
    banks = {l.bank_key for l in locs}
    assert len(banks) == SMALL.num_channels * SMALL.banks_per_channel
    for l in locs:
        assert l.unit == unit_id_of(l.channel, l.bank_group, SMALL)


def test_classify():
    assert classify_access(0, decode_local_first(0, SMALL), SMALL) == AccessTier.NEAR
    assert classify_access(0, Location(0, 1, 0, 2, 0), SMALL) == AccessTier.INTRA
    assert classify_access(0, Location(1, 0, 0, 1, 0), SMALL) == AccessTier.INTER


def test_access_cost_examples():
    t = PimTopology()
    assert access_cost(AccessTier.NEAR, 1, t) == 10
    assert access_cost(AccessTier.INTER, 1, t) == 140
    assert access_cost(AccessTier.INTRA, 5, t) == 44
    with pytest.raises(ValueError):
        access_cost(AccessTier.NEAR, 0, t)


@given(st.integers(1, 50), st.integers(1, 50))
def test_access_cost_monotone(a, b):
    t = PimTopology()
    lo, hi = min(a, b), max(a, b)
    for tier in AccessTier:
        assert access_cost(tier, lo, t) <= access_cost(tier, hi, t)
    assert access_cost(AccessTier.NEAR, a, t) <= access_cost(AccessTier.INTRA, a, t) <= access_cost(AccessTier.INTER, a, t)


def test_default_mapping_mostly_inter_channel():
    t = PimTopology()
    rng = random.Random(0)
    hits = [classify_access(rng.randrange(t.num_units), decode_default(rng.randrange(t.capacity_blocks), t), t)
            for _ in range(20000)]
    frac = sum(h == AccessTier.INTER for h in hits) / len(hits)
    assert abs(frac - 31 / 32) < 0.02


def test_filter_examples():
    t = PimTopology()
    with pytest.raises(ValueError):
        filter_stream([7, 2, 9, 4], FilterSpec("<", 5), t)
    r = filter_stream([2, 4, 7, 9], FilterSpec("<", 5), t)
    assert r.kept == [2, 4]
    assert r.filter_cycles == 4
    r = filter_stream([2, 4], FilterSpec("<", 0), t)
    assert r.kept == []
    assert r.payload_blocks_saved == blocks_for(2, t)


def test_filter_rejects_unknown_cmp():
    with pytest.raises(ValueError):
        FilterSpec("!=", 3)


@given(sorted_sets, st.sampled_from(["<", "<=", ">", ">="]), st.integers(-1, 62))
def test_filter_soundness(values, cmp, th):
    t = PimTopology()
    r = filter_stream(values, FilterSpec(cmp, th), t)
    op = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}[cmp]
    want = [v for v in values if op(v, th)]
    assert r.kept == want
    assert r.payload_blocks_saved == blocks_for(len(values), t) - blocks_for(len(want), t)
    off = filter_stream(values, FilterSpec(cmp, th, enabled=False), t)
    assert off.kept == list(values) and off.payload_blocks_saved == 0 and off.filter_cycles == 0


def test_bank_serialization():
    loc = decode_default(0, SMALL)
    busy = BankTable()
    assert bank_ready(loc, 0, busy, 10) == 0
    assert bank_ready(loc, 0, busy, 10) == 10
    other = decode_default(1, SMALL)
    assert bank_ready(other, 0, busy, 10) == 0
    off = BankTable(enabled=False)
    assert bank_ready(loc, 3, off, 10) == 3
    assert bank_ready(loc, 3, off, 10) == 3


def test_blocks_for():
    t = PimTopology()
    assert [blocks_for(n, t) for n in (0, 1, 8, 9)] == [0, 1, 1, 2]
