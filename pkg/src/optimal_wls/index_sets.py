"""Downward-closed multi-index sets and nested sequences of them.

Members of an :class:`IndexSet` are kept in lexicographic order read from
the last coordinate to the first, so that ``(0,0) < (1,0) < (0,1) < (2,0)``.
With this order, the unit index along coordinate 1 precedes the one along
coordinate 2 and the basis ordering stays stable as sets grow.
"""

from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MultiIndex = tuple  # tuple[int, ...]

STRATEGIES = ("total_degree_lex", "random_admissible")


class StructureError(ValueError):
    """Malformed multi-index collection (mixed dimensions, negatives, ...)."""


def order_key(nu: Sequence[int]) -> tuple:
    return tuple(reversed(nu))


def _as_tuples(candidate: Iterable) -> list[tuple]:
    out = []
    for nu in candidate:
        nu = tuple(int(v) for v in np.atleast_1d(nu))
        if any(v < 0 for v in nu):
            raise StructureError(f"negative entry in multi-index {nu}")
        out.append(nu)
    dims = {len(nu) for nu in out}
    if len(dims) > 1:
        raise StructureError(f"mixed dimensions {sorted(dims)}")
    return out


def lower_neighbours(nu: tuple):
    for i, v in enumerate(nu):
        if v > 0:
            yield nu[:i] + (v - 1,) + nu[i + 1:]


def is_downward_closed(candidate) -> bool:
    """True iff every componentwise-smaller index of each member is a member.

    Checking the immediate lower neighbours suffices by induction.
    """
    members = set(_as_tuples(candidate))
    return all(mu in members for nu in members for mu in lower_neighbours(nu))


class IndexSet:
    """Immutable downward-closed set with a fixed member ordering."""

    __slots__ = ("_members", "_position", "_array")

    def __init__(self, members):
        tuples = _as_tuples(members)
        if not tuples:
            raise StructureError("an index set needs at least the null index")
        if len(set(tuples)) != len(tuples):
            raise StructureError("duplicate multi-indices")
        if not is_downward_closed(tuples):
            raise StructureError("index set is not downward closed")
        self._members = tuple(sorted(tuples, key=order_key))
        self._position = {nu: i for i, nu in enumerate(self._members)}
        arr = np.array(self._members, dtype=np.int64).reshape(len(tuples), -1)
        arr.setflags(write=False)
        self._array = arr

    @property
    def dimension(self) -> int:
        return self._array.shape[1]

    @property
    def members(self) -> tuple:
        return self._members

    @property
    def m(self) -> int:
        return len(self._members)

    @property
    def array(self) -> np.ndarray:
        """``(m, d)`` integer array in member order (read-only)."""
        return self._array

    def position(self, nu) -> int:
        return self._position[tuple(nu)]

    def __len__(self):
        return len(self._members)

    def __iter__(self):
        return iter(self._members)

    def __contains__(self, nu):
        return tuple(nu) in self._position

    def __eq__(self, other):
        return isinstance(other, IndexSet) and self._members == other._members

    def __hash__(self):
        return hash(self._members)

    def __repr__(self):
        if self.m <= 6:
            return f"IndexSet({list(self._members)})"
        return f"IndexSet(d={self.dimension}, m={self.m})"

    def to_json(self) -> str:
        return json.dumps([list(nu) for nu in self._members])

    @classmethod
    def from_json(cls, text: str) -> "IndexSet":
        data = json.loads(text)
        if not isinstance(data, list):
            raise StructureError("index set JSON must be an array of integer arrays")
        return cls(data)

    @classmethod
    def load(cls, path) -> "IndexSet":
        return cls.from_json(Path(path).read_text())

    @classmethod
    def total_degree(cls, d: int, degree: int) -> "IndexSet":
        """All ``nu`` with ``|nu|_1 <= degree``."""
        members = [()]
        for _ in range(d):
            members = [nu + (k,) for nu in members
                       for k in range(degree - sum(nu) + 1)]
        return cls(members)


def degree_profile(index_set: IndexSet) -> tuple[tuple[int, ...], int]:
    """Per-coordinate maximal degrees ``lambda_j`` and their maximum."""
    lam = tuple(int(v) for v in index_set.array.max(axis=0))
    return lam, max(lam)


def nested_sequence(d: int, m_max: int, strategy: str = "total_degree_lex",
                    seed: int = 0) -> list[IndexSet]:
    """Chain ``Lambda_1 ⊂ ... ⊂ Lambda_{m_max}`` with ``#Lambda_j = j``.

    Each step adds one admissible index (one whose lower neighbours are all
    present). ``total_degree_lex`` picks the admissible index of lowest total
    degree, ties broken by the member order; ``random_admissible`` picks
    uniformly among the admissible indices with a seeded generator.
    """
    if d < 1 or m_max < 1:
        raise ValueError("need d >= 1 and m_max >= 1")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    rng = np.random.default_rng(seed)
    zero = (0,) * d
    current = {zero}
    frontier: set[tuple] = set()

    def extend(nu):
        for i in range(d):
            up = nu[:i] + (nu[i] + 1,) + nu[i + 1:]
            if up not in current and all(mu in current for mu in lower_neighbours(up)):
                frontier.add(up)

    extend(zero)
    chain = [zero]
    while len(chain) < m_max:
        ordered = sorted(frontier, key=lambda nu: (sum(nu), order_key(nu)))
        if strategy == "total_degree_lex":
            pick = ordered[0]
        else:
            pick = ordered[int(rng.integers(len(ordered)))]
        frontier.discard(pick)
        current.add(pick)
        chain.append(pick)
        extend(pick)
    return [IndexSet(chain[:j]) for j in range(1, m_max + 1)]


@lru_cache(maxsize=64)
def index_set_for(d: int, m: int, strategy: str = "total_degree_lex",
                  seed: int = 0) -> IndexSet:
    """The ``m``-th set of :func:`nested_sequence`."""
    return nested_sequence(d, m, strategy, seed)[-1]
