"""Merge-based set kernels over strictly ascending vertex-id lists.

The ``*_count`` variants also return how many input elements the merge
touched; the simulator charges compute cycles from that number.
"""

from __future__ import annotations

from bisect import bisect_left
from typing import Optional, Sequence


def _limit(a: Sequence[int], bound: Optional[int]) -> int:
    return len(a) if bound is None else bisect_left(a, bound)


def intersect_count(a: Sequence[int], b: Sequence[int], bound: Optional[int] = None) -> tuple[list[int], int]:
    na, nb = _limit(a, bound), _limit(b, bound)
    out = []
    i = j = 0
    while i < na and j < nb:
        x, y = a[i], b[j]
        if x == y:
            out.append(x)
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return out, i + j


def subtract_count(a: Sequence[int], b: Sequence[int], bound: Optional[int] = None) -> tuple[list[int], int]:
    na, nb = _limit(a, bound), _limit(b, bound)
    out = []
    i = j = 0
    while i < na:
        x = a[i]
        while j < nb and b[j] < x:
            j += 1
        if j < nb and b[j] == x:
            j += 1
        else:
            out.append(x)
        i += 1
    return out, i + j


def bounded_intersect(a: Sequence[int], b: Sequence[int], bound: Optional[int] = None) -> list[int]:
    """``{x in a and x in b, x < bound}`` in ascending order."""
    return intersect_count(a, b, bound)[0]


def bounded_subtract(a: Sequence[int], b: Sequence[int], bound: Optional[int] = None) -> list[int]:
    """``{x in a, x not in b, x < bound}`` in ascending order."""
    return subtract_count(a, b, bound)[0]


def is_strictly_ascending(a: Sequence[int]) -> bool:
    return all(a[i] < a[i + 1] for i in range(len(a) - 1))
