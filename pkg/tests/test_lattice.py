import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fockforge.lattice import (
    BoundaryMode,
    GridSpec,
    Mode,
    Spin,
    enumerate_modes,
    mode_index,
    momentum_shift,
)


@given(st.integers(1, 3), st.integers(0, 2))
def test_mode_count(dim, n_max):
    grid = GridSpec(dim=dim, n_max=n_max)
    assert grid.points_per_spin == (2 * n_max + 1) ** dim
    assert len(enumerate_modes(grid)) == 2 * grid.points_per_spin


@given(st.integers(1, 3), st.integers(0, 2))
def test_mode_index_matches_enumeration(dim, n_max):
    grid = GridSpec(dim=dim, n_max=n_max)
    for i, m in enumerate(enumerate_modes(grid)):
        assert mode_index(grid, m) == i


def test_spin_up_modes_come_first():
    modes = enumerate_modes(GridSpec(n_max=1))
    assert [m.spin for m in modes] == [Spin.UP] * 3 + [Spin.DOWN] * 3
    assert [m.n for m in modes[:3]] == [(-1,), (0,), (1,)]


def test_momentum_units():
    grid = GridSpec(box_length=4.0, n_max=2)
    assert grid.momentum((1,)) == (2 * math.pi / 4.0,)


def test_shift_truncates_or_wraps():
    trunc = GridSpec(n_max=1)
    wrap = trunc.with_boundary("wrap")
    m = Mode(Spin.UP, (1,))
    assert momentum_shift(m, (1,), trunc) is None
    assert momentum_shift(m, (1,), wrap) == Mode(Spin.UP, (-1,))


def test_transfers_range():
    assert len(GridSpec(n_max=1).transfers()) == 5
    assert len(GridSpec(n_max=1, boundary_mode="wrap").transfers()) == 3


def test_spin_parse():
    assert Spin.parse("up") is Spin.UP
    assert Spin.parse("down") is Spin.DOWN
    assert Spin.parse(Spin.DOWN) is Spin.DOWN
    with pytest.raises(ValueError):
        Spin.parse("sideways")


def test_json_round_trip_and_unknown_keys():
    grid = GridSpec(dim=2, box_length=3.0, n_max=1, boundary_mode="wrap")
    assert GridSpec.from_json(json.dumps(grid.to_json())) == grid
    with pytest.raises(ValueError, match="n_maxx"):
        GridSpec.from_json({"n_maxx": 2})


@pytest.mark.parametrize("kw", [{"dim": 0}, {"dim": 4}, {"n_max": -1}, {"box_length": 0.0}])
def test_invalid_grids(kw):
    with pytest.raises(ValueError):
        GridSpec(**kw)


def test_boundary_enum():
    assert GridSpec(boundary_mode="wrap").boundary_mode is BoundaryMode.WRAP
