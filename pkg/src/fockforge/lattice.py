"""Periodic momentum grid, spin labels and the global mode order."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence, Tuple

IntVec = Tuple[int, ...]


class Spin(Enum):
    UP = "up"
    DOWN = "down"

    @property
    def index(self) -> int:
        return 0 if self is Spin.UP else 1

    @classmethod
    def parse(cls, value) -> "Spin":
        if isinstance(value, Spin):
            return value
        aliases = {"up": cls.UP, "u": cls.UP, "+": cls.UP, "down": cls.DOWN, "dn": cls.DOWN, "d": cls.DOWN, "-": cls.DOWN}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown spin label {value!r}") from None

    def __str__(self) -> str:
        return "↑" if self is Spin.UP else "↓"


SPINS = (Spin.UP, Spin.DOWN)


class BoundaryMode(str, Enum):
    TRUNCATE = "truncate"
    WRAP = "wrap"


@dataclass(frozen=True)
class Mode:
    """One single-particle basis function: plane wave ``n`` times a spinor."""

    spin: Spin
    n: IntVec

    def __lt__(self, other):
        return (self.spin.index, self.n) < (other.spin.index, other.n)

    def __str__(self) -> str:
        return f"({','.join(map(str, self.n))}{self.spin})"


@dataclass(frozen=True)
class GridSpec:
    """Cubic momentum grid ``q_n = 2 pi n / L`` with ``|n_i| <= n_max``.

    ``boundary_mode`` decides what happens to momentum transfers leaving the
    grid: ``truncate`` drops them, ``wrap`` folds them back modulo
    ``2 n_max + 1`` so that bilinear algebras close exactly.
    """

    dim: int = 1
    box_length: float = 2 * math.pi
    n_max: int = 1
    boundary_mode: BoundaryMode = BoundaryMode.TRUNCATE

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not (self.box_length > 0 and math.isfinite(self.box_length)):
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ValueError(f"n_max must be a non-negative integer, got {self.n_max}")
        object.__setattr__(self, "boundary_mode", BoundaryMode(self.boundary_mode))

    @property
    def side(self) -> int:
        """Number of grid points per axis."""
        return 2 * self.n_max + 1

    @property
    def points_per_spin(self) -> int:
        return self.side ** self.dim

    @property
    def n_modes(self) -> int:
        return 2 * self.points_per_spin

    @property
    def wrap(self) -> bool:
        return self.boundary_mode is BoundaryMode.WRAP

    @property
    def unit(self) -> float:
        """Momentum per grid step, 2 pi / L."""
        return 2 * math.pi / self.box_length

    @cached_property
    def points(self) -> Tuple[IntVec, ...]:
        r = range(-self.n_max, self.n_max + 1)
        return tuple(itertools.product(r, repeat=self.dim))

    def transfers(self) -> Tuple[IntVec, ...]:
        """Momentum transfers that can give a nonzero bilinear.

        In wrap mode every transfer is equivalent to one on the grid; in
        truncate mode differences of two grid points span ``|k_i| <= 2 n_max``.
        """
        if self.wrap:
            return self.points
        r = range(-2 * self.n_max, 2 * self.n_max + 1)
        return tuple(itertools.product(r, repeat=self.dim))

    def contains(self, n: Sequence[int]) -> bool:
        return len(n) == self.dim and all(abs(c) <= self.n_max for c in n)

    def fold(self, n: Sequence[int]) -> IntVec:
        """Reduce an integer vector into ``[-n_max, n_max]`` componentwise."""
        s, h = self.side, self.n_max
        return tuple((c + h) % s - h for c in n)

    def momentum(self, n: Sequence[int]) -> Tuple[float, ...]:
        return tuple(self.unit * c for c in n)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "box_length": self.box_length,
            "n_max": self.n_max,
            "boundary_mode": self.boundary_mode.value,
        }

    @classmethod
    def from_json(cls, data) -> "GridSpec":
        if isinstance(data, str):
            data = json.loads(data)
        unknown = set(data) - {"dim", "box_length", "n_max", "boundary_mode"}
        if unknown:
            raise ValueError(f"unknown GridSpec keys: {sorted(unknown)}")
        return cls(**data)

    def with_boundary(self, mode) -> "GridSpec":
        return GridSpec(self.dim, self.box_length, self.n_max, BoundaryMode(mode))


def enumerate_modes(grid: GridSpec) -> Tuple[Mode, ...]:
    """All modes in the global order: spin first (up, down), then ``n`` lexicographically."""
    return tuple(Mode(s, n) for s in SPINS for n in grid.points)


def mode_index(grid: GridSpec, mode: Mode) -> int:
    """Position of ``mode`` in :func:`enumerate_modes` without building the list."""
    if not grid.contains(mode.n):
        raise ValueError(f"{mode} is outside the grid")
    flat = 0
    for c in mode.n:
        flat = flat * grid.side + (c + grid.n_max)
    return mode.spin.index * grid.points_per_spin + flat


def momentum_shift(m: Mode, k: Sequence[int], grid: GridSpec) -> Optional[Mode]:
    """Shift the momentum label of ``m`` by ``k``; ``None`` means out of range (truncate mode)."""
    n = tuple(a + b for a, b in zip(m.n, k))
    if grid.wrap:
        return Mode(m.spin, grid.fold(n))
    if not grid.contains(n):
        return None
    return Mode(m.spin, n)
