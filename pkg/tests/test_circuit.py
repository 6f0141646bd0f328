import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclic_interferometer.circuit import (
    CircuitSpec,
    beam_splitter,
    build_unitary,
    collapse_phases,
    equivalent_single_phase,
    is_equivalent,
    mach_zehnder,
    read_unitary_csv,
    wrap_phase,
    write_unitary_csv,
)
from cyclic_interferometer.errors import InputError

phases = st.floats(-10, 10, allow_nan=False)


def test_beam_splitter_unitary():
    for t in (0.0, 0.3, 0.5, 1.0):
        bs = beam_splitter(t)
        np.testing.assert_allclose(bs @ bs.conj().T, np.eye(2), atol=1e-15)
    with pytest.raises(InputError):
        beam_splitter(1.2)


@given(st.lists(phases, min_size=8, max_size=8), st.lists(st.floats(0, 1), min_size=8, max_size=8))
@settings(max_examples=30, deadline=None)
def test_unitarity(ph, ts):
    u = build_unitary(CircuitSpec(4, ph, ts))
    np.testing.assert_allclose(u @ u.conj().T, np.eye(8), atol=1e-12)


def test_balanced_magnitudes():
    # every input reaches exactly four outputs with amplitude 1/2
    u = build_unitary(CircuitSpec(4))
    mags = np.abs(u)
    assert np.all((np.isclose(mags, 0.5)) | (mags < 1e-15))
    assert np.all(np.count_nonzero(mags > 1e-12, axis=0) == 4)


def test_wraparound_coupler_position():
    # with the first layer as identity only the second layer mixes
    spec = CircuitSpec(3, None, (1.0, 1.0, 1.0, 0.5, 0.5, 0.5))
    u = build_unitary(spec)
    assert abs(u[5, 0]) == pytest.approx(math.sqrt(0.5))
    assert abs(u[1, 2]) == pytest.approx(math.sqrt(0.5))
    assert abs(u[1, 0]) == 0


@pytest.mark.parametrize("kwargs", [{"n": 1}, {"n": 2, "phases": (0.0,)}, {"n": 2, "transmissivities": (0.5, 0.5, 0.5, 2.0)}])
def test_spec_validation(kwargs):
    with pytest.raises(InputError):
        CircuitSpec(**kwargs)


def test_spec_json_roundtrip(tmp_path):
    spec = CircuitSpec(3, (0.1, 0.2, 0.3, 0.4, 0.5, 0.6), (0.5, 0.49, 0.5, 0.51, 0.5, 0.534))
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec.to_dict()))
    assert CircuitSpec.load(path) == spec
    path.write_text("{not json")
    with pytest.raises(InputError):
        CircuitSpec.load(path)


@given(phases)
def test_wrap_phase_range(angle):
    w = wrap_phase(angle)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(angle), abs_tol=1e-9)


def test_collapse_alternating_sum():
    spec = CircuitSpec(2, (0.3, 0.1, 0.7, 0.2))
    alpha, canon = collapse_phases(spec)
    assert alpha == pytest.approx(0.7)
    assert canon.phases == (alpha, 0.0, 0.0, 0.0)
    assert collapse_phases(CircuitSpec(4, (math.pi,) + (0.0,) * 7))[0] == pytest.approx(math.pi)


def test_equivalent_single_phase_signs():
    spec = CircuitSpec(2, (0.3, 0.1, 0.7, 0.2))
    assert equivalent_single_phase(spec, 3).phases[2] == pytest.approx(0.7)
    assert equivalent_single_phase(spec, 2).phases[1] == pytest.approx(-0.7)
    with pytest.raises(InputError):
        equivalent_single_phase(CircuitSpec(2, None, (0.5, 0.5, 0.5, 0.6)), 1)
    with pytest.raises(InputError):
        equivalent_single_phase(spec, 5)


def test_unbalanced_collapse_is_still_equivalent(rng):
    spec = CircuitSpec(2, rng.uniform(-3, 3, 4), rng.uniform(0.3, 0.7, 4))
    assert is_equivalent(spec, collapse_phases(spec)[1], 2)


def test_not_equivalent_when_alpha_differs():
    assert not is_equivalent(CircuitSpec.with_alpha(2, 0.3), CircuitSpec.with_alpha(2, 0.4), 2)


def test_mach_zehnder_depends_on_difference():
    assert is_equivalent(mach_zehnder(0.9, 0.4), mach_zehnder(0.5, 0.0), 3)
    assert not is_equivalent(mach_zehnder(0.9, 0.4), mach_zehnder(0.9, 0.0), 2)


def test_unitary_csv_roundtrip(tmp_path, rng):
    u = build_unitary(CircuitSpec(4, rng.uniform(-3, 3, 8)))
    path = tmp_path / "u.csv"
    write_unitary_csv(u, path)
    np.testing.assert_array_equal(read_unitary_csv(path), u)
    assert b"\r\n" not in path.read_bytes()
