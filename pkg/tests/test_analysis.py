import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclic_interferometer.analysis import (
    FringeDataset,
    OverlapSet,
    bootstrap_bounds,
    c1_bounds,
    fit_visibility,
    hom_indistinguishability,
    phase_calibration,
    single_point_visibility,
    unmeasured_overlap_bounds,
)
from cyclic_interferometer.errors import CalibrationError, FitError, InputError

MEASURED_M = OverlapSet(0.760, 0.825, 0.884, 0.789, 0.002, 0.002, 0.002, 0.003)


def synthetic(c1, alphas, a_plus=1.0, a_minus=1.0):
    cos = np.cos(alphas)
    return FringeDataset.simulated(alphas, a_plus * (1 + c1 * cos), a_minus * (1 - c1 * cos))


def test_noiseless_recovery():
    alphas = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    fit = fit_visibility(synthetic(0.61, alphas, 3.0, 2.0))
    assert fit.c1 == pytest.approx(0.61, abs=1e-10)
    assert fit.amplitudes == pytest.approx((3.0, 2.0), rel=1e-9)


@given(st.floats(0.0, 1.0), st.floats(0.1, 10.0))
@settings(max_examples=30, deadline=None)
def test_recovery_any_visibility(c1, amp):
    alphas = np.linspace(0, 2 * np.pi, 9, endpoint=False)
    assert fit_visibility(synthetic(c1, alphas, amp, 1.0)).c1 == pytest.approx(c1, abs=1e-8)


def test_poisson_counts_at_measured_scale():
    # ~1.6 Hz of four-photon events, 30 minutes per phase setting
    rng = np.random.default_rng(2024)
    alphas = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    mean = 1.6 * 1800 / 2
    results = []
    for _ in range(20):
        cos = np.cos(alphas)
        data = FringeDataset(alphas, rng.poisson(mean * (1 + 0.61 * cos)), rng.poisson(mean * (1 - 0.61 * cos)))
        fit = fit_visibility(data)
        results.append(fit.c1)
        assert 0.003 < fit.c1_err < 0.02
    assert np.mean(results) == pytest.approx(0.61, abs=0.01)
    assert np.std(results) < 0.02


def test_heater_power_fit():
    power = np.linspace(250, 450, 30)
    slope, offset = math.pi / 136, 0.35
    alpha = slope * power + offset
    data = FringeDataset(power, 100 * (1 + 0.6 * np.cos(alpha)), 90 * (1 - 0.6 * np.cos(alpha)), unit="milliwatts")
    fit = fit_visibility(data)
    assert fit.c1 == pytest.approx(0.6, abs=1e-8)
    assert fit.slope == pytest.approx(slope, rel=1e-8)
    assert math.cos(fit.offset - offset) == pytest.approx(1.0, abs=1e-10)
    cal = phase_calibration(data)
    assert cal[0] == pytest.approx(slope, rel=1e-8)
    known = fit_visibility(data, calibration=(slope, offset))
    assert known.c1 == pytest.approx(0.6, abs=1e-10)


def test_fit_errors():
    with pytest.raises(FitError):
        fit_visibility(FringeDataset([1.0, 1.0, 1.0], [1, 2, 3], [1, 2, 3]))
    with pytest.raises(FitError):
        fit_visibility(FringeDataset([0.0, 1.0], [1, 2], [2, 1]))
    with pytest.raises(FitError):
        fit_visibility(FringeDataset([1.0, 2.0, 3.0], [1, 2, 3], [3, 2, 1], unit="milliwatts"))


def test_calibration_errors():
    with pytest.raises(CalibrationError):
        phase_calibration(synthetic(0.5, np.linspace(0, 6, 10)))
    power = np.linspace(0, 1, 10)
    data = FringeDataset(power, 10 + power, 10 - power, unit="milliwatts")
    with pytest.raises(CalibrationError):
        phase_calibration(data)


def test_flat_traces_give_zero_visibility():
    data = FringeDataset(np.linspace(0, 6, 10), np.full(10, 50.0), np.full(10, 50.0))
    assert fit_visibility(data).c1 == 0.0


def test_dataset_validation():
    with pytest.raises(InputError):
        FringeDataset([0, 1], [1], [1, 2])
    with pytest.raises(InputError):
        FringeDataset([0, 1], [1, -1], [1, 2])
    with pytest.raises(InputError):
        FringeDataset([0, 1], [1, 1], [1, 2], unit="volts")


def test_csv_roundtrip(tmp_path):
    data = FringeDataset([300.0, 320.0, 340.0], [10, 20, 30], [30, 20, 10], unit="milliwatts",
                         err_plus=[3, 4, 5], err_minus=[5, 4, 3])
    path = tmp_path / "d.csv"
    data.write_csv(path)
    back = FringeDataset.read_csv(path)
    assert back.unit == "milliwatts"
    np.testing.assert_array_equal(back.counts_minus, data.counts_minus)
    np.testing.assert_array_equal(back.err_plus, data.err_plus)

    scan = synthetic(0.4, np.linspace(0, 6, 5))
    scan.write_scan_csv(path)
    again = FringeDataset.read_csv(path)
    np.testing.assert_array_equal(again.counts_plus, scan.counts_plus)
    assert path.read_text().splitlines()[0] == "alpha_rad,p_plus,p_minus,p_plus_normalized,p_minus_normalized"


def test_csv_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("control,unit,counts_plus,counts_minus\n1,radians,x,2\n")
    with pytest.raises(InputError):
        FringeDataset.read_csv(path)
    path.write_text("control,unit,counts_plus,counts_minus\n")
    with pytest.raises(InputError):
        FringeDataset.read_csv(path)


def test_single_point():
    assert single_point_visibility(161, 39) == pytest.approx(0.61)
    with pytest.raises(InputError):
        single_point_visibility(1, 1, math.pi / 2)


@pytest.mark.parametrize("v,g2,m", [
    (0.886, 0.019, 0.923),
    (0.864, 0.017, 0.896),
    (0.848, 0.019, 0.884),
    (0.769, 0.017, 0.800),
    (0.727, 0.019, 0.760),
])
def test_hom_correction(v, g2, m):
    assert hom_indistinguishability(v, g2) == pytest.approx(m, abs=0.002)


def test_hom_correction_limits():
    assert hom_indistinguishability(0.9, 0.0) == 0.9
    assert hom_indistinguishability(1.0, 0.2) == 1.0
    with pytest.raises(InputError):
        hom_indistinguishability(0.9, 1.0)


def test_point_bounds():
    bounds = c1_bounds(MEASURED_M)
    assert bounds.lower == pytest.approx(0.258, abs=1e-12)
    assert bounds.upper == pytest.approx(0.760, abs=1e-12)
    assert bounds.consistent
    assert c1_bounds([1, 1, 1, 1]) == (1.0, 1.0)
    assert c1_bounds([0.5, 0.5, 0.5, 0.5]).lower == 0.0
    with pytest.raises(InputError):
        c1_bounds([0.5, 0.5, 0.5])


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4))
def test_bounds_are_ordered(m):
    bounds = c1_bounds(m)
    assert 0 <= bounds.lower <= bounds.upper <= 1


def test_mixture_visibility_inside_bounds():
    x = np.array([0.852, 0.883, 0.941, 0.932])
    m = x * np.roll(x, -1)
    bounds = c1_bounds(m)
    assert bounds.lower <= np.prod(x) <= bounds.upper


def test_unmeasured_bounds():
    (ac_lo, ac_hi), (bd_lo, bd_hi) = unmeasured_overlap_bounds(0.760, 0.825, 0.884)
    assert (ac_lo, ac_hi) == pytest.approx((0.585, 0.935))
    assert (bd_lo, bd_hi) == pytest.approx((0.709, 0.941))


def test_bootstrap():
    boot = bootstrap_bounds(MEASURED_M, iterations=10_000, seed=0)
    assert boot.lower == pytest.approx(0.235, abs=0.01)
    assert boot.upper == pytest.approx(0.766, abs=0.01)
    assert boot == bootstrap_bounds(MEASURED_M, iterations=10_000, seed=0)
    exact = OverlapSet(*MEASURED_M.means)
    assert bootstrap_bounds(exact) == c1_bounds(exact)
    with pytest.raises(InputError):
        bootstrap_bounds(MEASURED_M, iterations=10)
