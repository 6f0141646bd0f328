import numpy as np
import pytest
from hypothesis import given, strategies as st

from cyclic_interferometer.errors import InputError
from cyclic_interferometer.fock import (
    FockState,
    as_state,
    enumerate_states,
    from_modes,
    odd_modes,
    parse_state,
    scattering_submatrix,
)


def test_mode_list_repeats_labels():
    state = FockState((2, 0, 1))
    assert state.mode_list == (1, 1, 3)
    assert state.n_photons == 3
    assert state.multiplicity_factor() == 2
    assert not state.is_collision_free


def test_negative_occupation_rejected():
    with pytest.raises(InputError):
        FockState((1, -1))


@pytest.mark.parametrize("modes", [(0,), (5,), (1, 9)])
def test_from_modes_range(modes):
    with pytest.raises(InputError):
        from_modes(modes, 4)


@pytest.mark.parametrize("n_modes,k,expected", [(4, 2, 10), (8, 4, 330), (6, 3, 56)])
def test_enumerate_counts(n_modes, k, expected):
    assert len(enumerate_states(n_modes, k)) == expected


def test_enumerate_collision_free():
    states = enumerate_states(8, 4, collision_free=True)
    assert len(states) == 70
    assert all(s.is_collision_free for s in states)


def test_enumeration_is_lexicographic():
    lists = [s.mode_list for s in enumerate_states(5, 3)]
    assert lists == sorted(lists)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=6))
def test_parse_roundtrip(occ):
    state = FockState(tuple(occ))
    assert parse_state(str(state)) == state
    assert parse_state(f"{list(state.mode_list)}@{state.n_modes}") == state


@pytest.mark.parametrize("text", ["a,b", "[1,x]@4", "1,,0"])
def test_parse_errors(text):
    with pytest.raises(InputError):
        parse_state(text)


def test_submatrix_orientation():
    u = np.arange(16).reshape(4, 4).astype(complex)
    g = from_modes((1, 3), 4)
    h = from_modes((2, 2), 4)
    s = scattering_submatrix(u, g, h)
    np.testing.assert_array_equal(s, [[u[1, 0], u[1, 2]], [u[1, 0], u[1, 2]]])


def test_submatrix_mismatch():
    with pytest.raises(InputError):
        scattering_submatrix(np.eye(4), from_modes((1,), 4), from_modes((1, 2), 4))
    with pytest.raises(InputError):
        scattering_submatrix(np.eye(3), from_modes((1,), 4), from_modes((2,), 4))


def test_odd_modes_and_as_state():
    assert odd_modes(4) == (1, 3, 5, 7)
    assert as_state((1, 3), 4) == FockState((1, 0, 1, 0))
    with pytest.raises(InputError):
        as_state((1, 3))
