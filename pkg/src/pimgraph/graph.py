"""CSR graph container, loaders, and synthetic generators.

Vertex ids are dense ``[0, n)``.  Neighbor lists are strictly ascending,
symmetric, and free of self-loops.  Most consumers expect the graph to be
degree-normalized (highest degree gets id 0), which both generators already
guarantee.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import BinaryIO, Iterable, TextIO

import numpy as np


class GraphFormatError(ValueError):
    """Raised for malformed edge lists or CSR binaries."""


@dataclass(frozen=True, eq=False)
class CsrGraph:
    num_vertices: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        row_ptr.setflags(write=False)
        col_idx.setflags(write=False)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        if self.validate:
            check_csr(self.num_vertices, row_ptr, col_idx)

    @property
    def num_edges(self) -> int:
        """Directed edge slots (twice the undirected edge count)."""
        return int(self.row_ptr[-1])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.num_vertices else 0

    @cached_property
    def adjacency(self) -> tuple[list[int], ...]:
        # plain python lists: the enumeration kernels are scalar loops
        rp = self.row_ptr.tolist()
        ci = self.col_idx.tolist()
        return tuple(ci[rp[v]:rp[v + 1]] for v in range(self.num_vertices))

    def neighbors(self, v: int) -> list[int]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return int(self.row_ptr[v + 1] - self.row_ptr[v])

    def edges(self) -> np.ndarray:
        """Undirected edges as an ``(m, 2)`` array with ``u < v``."""
        src = np.repeat(np.arange(self.num_vertices), self.degrees)
        keep = src < self.col_idx
        return np.stack([src[keep], self.col_idx[keep]], axis=1)

    def dense(self) -> np.ndarray:
        a = np.zeros((self.num_vertices, self.num_vertices), dtype=bool)
        src = np.repeat(np.arange(self.num_vertices), self.degrees)
        a[src, self.col_idx] = True
        return a

    def is_degree_sorted(self) -> bool:
        return bool(np.all(self.degrees[:-1] >= self.degrees[1:])) if self.num_vertices > 1 else True

    def __eq__(self, other):
        if not isinstance(other, CsrGraph):
            return NotImplemented
        return (self.num_vertices == other.num_vertices
                and np.array_equal(self.row_ptr, other.row_ptr)
                and np.array_equal(self.col_idx, other.col_idx))

    __hash__ = object.__hash__


@dataclass(frozen=True)
class DegreeRelabeling:
    old_to_new: np.ndarray
    new_to_old: np.ndarray


def check_csr(n: int, row_ptr: np.ndarray, col_idx: np.ndarray) -> None:
    if n < 0:
        raise GraphFormatError("negative vertex count")
    if len(row_ptr) != n + 1:
        raise GraphFormatError(f"row_ptr has {len(row_ptr)} entries, expected {n + 1}")
    if row_ptr[0] != 0:
        raise GraphFormatError("row_ptr[0] must be 0")
    if np.any(np.diff(row_ptr) < 0):
        raise GraphFormatError("row_ptr is not monotone")
    if row_ptr[-1] != len(col_idx):
        raise GraphFormatError(f"row_ptr[n]={row_ptr[-1]} but {len(col_idx)} col_idx entries")
    if len(col_idx) == 0:
        return
    if col_idx.min() < 0 or col_idx.max() >= n:
        raise GraphFormatError("neighbor id out of range")
    src = np.repeat(np.arange(n), np.diff(row_ptr))
    if np.any(src == col_idx):
        raise GraphFormatError("self-loop present")
    # strictly ascending inside each row: a non-increase is only allowed at row starts
    step = np.diff(col_idx) <= 0
    same_row = src[1:] == src[:-1]
    if np.any(step & same_row):
        raise GraphFormatError("neighbor list not strictly ascending")
    fwd = np.lexsort((col_idx, src))
    rev = np.lexsort((src, col_idx))
    if not (np.array_equal(src[fwd], col_idx[rev]) and np.array_equal(col_idx[fwd], src[rev])):
        raise GraphFormatError("adjacency is not symmetric")


def from_edges(n: int, edges: Iterable[tuple[int, int]] | np.ndarray) -> CsrGraph:
    """Build a simple undirected graph; duplicates and self-loops are dropped."""
    e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    e = e.reshape(-1, 2)
    e = e[e[:, 0] != e[:, 1]]
    both = np.concatenate([e, e[:, ::-1]]) if len(e) else e
    if len(both):
        both = np.unique(both, axis=0)  # sorted by (src, dst)
    counts = np.bincount(both[:, 0], minlength=n) if len(both) else np.zeros(n, dtype=np.int64)
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    return CsrGraph(n, row_ptr, both[:, 1] if len(both) else np.zeros(0, dtype=np.int64))


def load_edge_list(stream: TextIO) -> CsrGraph:
    """Parse whitespace-separated vertex pairs; ``#`` lines are comments.

    Vertex ids are compacted to ``[0, n)`` preserving their numeric order.
    """
    pairs = []
    for lineno, line in enumerate(stream, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) < 2:
            raise GraphFormatError(f"line {lineno}: expected two vertex ids, got {s!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer vertex id in {s!r}") from None
    if not pairs:
        raise GraphFormatError("edge list is empty")
    raw = np.asarray(pairs, dtype=np.int64)
    ids, compact = np.unique(raw, return_inverse=True)
    return from_edges(len(ids), compact.reshape(-1, 2))


def write_edge_list(g: CsrGraph, stream: TextIO) -> None:
    for u, v in g.edges().tolist():
        stream.write(f"{u} {v}\n")


_U64 = struct.Struct("<Q")


def write_csr(g: CsrGraph, stream: BinaryIO) -> None:
    """u64 n, (n+1) u64 row_ptr, num_edges u32 col_idx; little-endian."""
    stream.write(_U64.pack(g.num_vertices))
    stream.write(g.row_ptr.astype("<u8").tobytes())
    stream.write(g.col_idx.astype("<u4").tobytes())


def load_csr_binary(stream: BinaryIO) -> CsrGraph:
    head = stream.read(8)
    if len(head) != 8:
        raise GraphFormatError("truncated CSR stream: missing vertex count")
    (n,) = _U64.unpack(head)
    rp_bytes = stream.read(8 * (n + 1))
    if len(rp_bytes) != 8 * (n + 1):
        raise GraphFormatError("truncated CSR stream: row_ptr")
    row_ptr = np.frombuffer(rp_bytes, dtype="<u8").astype(np.int64)
    if np.any(np.diff(row_ptr) < 0):
        raise GraphFormatError("row_ptr is not monotone")
    m = int(row_ptr[-1])
    ci_bytes = stream.read(4 * m)
    if len(ci_bytes) != 4 * m:
        raise GraphFormatError("truncated CSR stream: col_idx")
    col_idx = np.frombuffer(ci_bytes, dtype="<u4").astype(np.int64)
    return CsrGraph(int(n), row_ptr, col_idx)


def normalize_degree_order(g: CsrGraph) -> tuple[CsrGraph, DegreeRelabeling]:
    """Relabel so degrees are non-increasing; ties keep ascending original id."""
    n = g.num_vertices
    new_to_old = np.lexsort((np.arange(n), -g.degrees)).astype(np.int64)
    old_to_new = np.empty(n, dtype=np.int64)
    old_to_new[new_to_old] = np.arange(n)
    e = g.edges()
    h = from_edges(n, old_to_new[e]) if len(e) else from_edges(n, np.zeros((0, 2), dtype=np.int64))
    return h, DegreeRelabeling(old_to_new, new_to_old)


def gen_er_graph(n: int, p: float, seed: int) -> CsrGraph:
    """Erdos-Renyi G(n, p), degree-normalized, deterministic in (n, p, seed)."""
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    g = from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))
    return normalize_degree_order(g)[0]


def gen_skewed_graph(n: int, hub_degree: int, seed: int) -> CsrGraph:
    """A hub clique of ``hub_degree + 1`` vertices plus a sparse random tail.

    The tail is a random recursive tree with ``n // 8`` extra random chords,
    so nearly all triangles sit inside the hub community.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0 <= hub_degree < n:
        raise ValueError("hub_degree must satisfy 0 <= hub_degree < n")
    rng = np.random.default_rng(seed)
    edges = []
    hub = hub_degree + 1 if hub_degree > 0 else 0
    for i in range(hub):
        for j in range(i + 1, hub):
            edges.append((i, j))
    for v in range(max(hub, 1), n):
        edges.append((v, int(rng.integers(0, v))))
    for _ in range(n // 8):
        a, b = rng.integers(0, n, size=2)
        edges.append((int(a), int(b)))
    g = from_edges(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2))
    return normalize_degree_order(g)[0]


def gen_circulant_graph(n: int, half_degree: int) -> CsrGraph:
    """Ring lattice: every vertex joined to its ``half_degree`` nearest on each side."""
    if n <= 2 * half_degree:
        raise ValueError("n must exceed 2 * half_degree")
    v = np.arange(n)
    edges = np.concatenate([np.stack([v, (v + d) % n], axis=1) for d in range(1, half_degree + 1)])
    return from_edges(n, edges)
