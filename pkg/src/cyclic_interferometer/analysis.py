"""Fringe fitting, HOM corrections and bounds on genuine n-photon indistinguishability."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .errors import CalibrationError, FitError, InputError

__all__ = [
    "FringeDataset",
    "FitResult",
    "Bounds",
    "OverlapSet",
    "fit_visibility",
    "hom_indistinguishability",
    "c1_bounds",
    "unmeasured_overlap_bounds",
    "bootstrap_bounds",
    "phase_calibration",
    "single_point_visibility",
]

UNITS = ("radians", "milliwatts")


@dataclass
class FringeDataset:
    """Plus-set and minus-set totals against a control value.

    ``control`` is a phase in radians or a heater power in milliwatts.
    Counts may be simulated probabilities or measured coincidences; when
    no uncertainties are given, shot noise sqrt(N) is assumed.  With
    ``absolute_sigma`` false the uncertainties are relative weights only and
    the fit covariance is rescaled by the reduced chi-square.
    """

    control: np.ndarray
    counts_plus: np.ndarray
    counts_minus: np.ndarray
    unit: str = "radians"
    err_plus: np.ndarray | None = None
    err_minus: np.ndarray | None = None
    absolute_sigma: bool = True

    def __post_init__(self):
        self.control = np.asarray(self.control, dtype=float)
        self.counts_plus = np.asarray(self.counts_plus, dtype=float)
        self.counts_minus = np.asarray(self.counts_minus, dtype=float)
        if self.unit not in UNITS:
            raise InputError(f"unit must be one of {UNITS}, got {self.unit!r}")
        n = len(self.control)
        if len(self.counts_plus) != n or len(self.counts_minus) != n:
            raise InputError("control and count columns have different lengths")
        if np.any(self.counts_plus < 0) or np.any(self.counts_minus < 0):
            raise InputError("counts must be nonnegative")
        for name in ("err_plus", "err_minus"):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value, dtype=float)
                if len(value) != n:
                    raise InputError(f"{name} has the wrong length")
                setattr(self, name, value)

    def __len__(self) -> int:
        return len(self.control)

    @classmethod
    def simulated(cls, control, p_plus, p_minus, unit: str = "radians") -> "FringeDataset":
        """Model traces: uniform weights, error bars from the residual scatter."""
        p_plus = np.asarray(p_plus, dtype=float)
        p_minus = np.asarray(p_minus, dtype=float)
        return cls(control, p_plus, p_minus, unit=unit, err_plus=np.ones(len(p_plus)),
                   err_minus=np.ones(len(p_minus)), absolute_sigma=False)

    def normalized(self) -> tuple[np.ndarray, np.ndarray]:
        """Each trace divided by its mean over the scan."""
        return _by_mean(self.counts_plus), _by_mean(self.counts_minus)

    def uncertainties(self) -> tuple[np.ndarray, np.ndarray]:
        if self.err_plus is not None and self.err_minus is not None:
            return self.err_plus, self.err_minus
        return np.sqrt(self.counts_plus), np.sqrt(self.counts_minus)

    def write_scan_csv(self, path) -> None:
        """Columns alpha_rad, p_plus, p_minus, p_plus_normalized, p_minus_normalized."""
        norm_plus, norm_minus = self.normalized()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["alpha_rad", "p_plus", "p_minus", "p_plus_normalized", "p_minus_normalized"])
            for row in zip(self.control, self.counts_plus, self.counts_minus, norm_plus, norm_minus):
                writer.writerow([_fmt(v) for v in row])

    def write_csv(self, path) -> None:
        """Columns control, unit, counts_plus, counts_minus[, err_plus, err_minus]."""
        header = ["control", "unit", "counts_plus", "counts_minus"]
        with_err = self.err_plus is not None and self.err_minus is not None
        if with_err:
            header += ["err_plus", "err_minus"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for i in range(len(self)):
                row = [_fmt(self.control[i]), self.unit, _fmt(self.counts_plus[i]), _fmt(self.counts_minus[i])]
                if with_err:
                    row += [_fmt(self.err_plus[i]), _fmt(self.err_minus[i])]
                writer.writerow(row)

    @classmethod
    def read_csv(cls, path) -> "FringeDataset":
        """Read either the measured-data schema or the scan schema."""
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise InputError(f"{path}: no data rows")
        fields = rows[0].keys()
        try:
            if "alpha_rad" in fields:
                return cls.simulated(
                    [float(r["alpha_rad"]) for r in rows],
                    [float(r["p_plus"]) for r in rows],
                    [float(r["p_minus"]) for r in rows],
                )
            units = {r["unit"].strip() for r in rows}
            if len(units) != 1:
                raise InputError(f"{path}: mixed units {sorted(units)}")
            err_plus = err_minus = None
            if "err_plus" in fields and "err_minus" in fields:
                err_plus = [float(r["err_plus"]) for r in rows]
                err_minus = [float(r["err_minus"]) for r in rows]
            return cls(
                [float(r["control"]) for r in rows],
                [float(r["counts_plus"]) for r in rows],
                [float(r["counts_minus"]) for r in rows],
                unit=units.pop(),
                err_plus=err_plus,
                err_minus=err_minus,
            )
        except (KeyError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"{path}: malformed fringe CSV ({exc})") from exc


def _by_mean(values: np.ndarray) -> np.ndarray:
    mean = values.mean()
    if mean == 0:
        return np.zeros_like(values)
    return values / mean


def _fmt(value: float) -> str:
    return f"{float(value):.17g}"


class FitResult(NamedTuple):
    c1: float
    c1_err: float
    amplitudes: tuple[float, float]
    slope: float | None = None
    offset: float | None = None
    chi2: float = 0.0


class OverlapSet(NamedTuple):
    """Pairwise indistinguishabilities around the ring A-B-C-D."""

    ab: float
    bc: float
    cd: float
    da: float
    ab_err: float = 0.0
    bc_err: float = 0.0
    cd_err: float = 0.0
    da_err: float = 0.0

    @property
    def means(self) -> np.ndarray:
        return np.array([self.ab, self.bc, self.cd, self.da])

    @property
    def errors(self) -> np.ndarray:
        return np.array([self.ab_err, self.bc_err, self.cd_err, self.da_err])


class Bounds(NamedTuple):
    lower: float
    upper: float

    @property
    def consistent(self) -> bool:
        """False when the overlaps cannot come from a single convex decomposition."""
        return self.lower <= self.upper


# ------------------------------------------------------------------ fitting


def _weights(data: FringeDataset) -> tuple[np.ndarray, np.ndarray]:
    err_plus, err_minus = data.uncertainties()
    # zero-count points carry the smallest nonzero uncertainty
    floor = min(
        [e for e in np.concatenate([err_plus, err_minus]) if e > 0],
        default=1.0,
    )
    return np.maximum(err_plus, floor), np.maximum(err_minus, floor)


def _initial_amplitudes(data: FringeDataset) -> tuple[float, float]:
    return max(data.counts_plus.mean(), 1e-300), max(data.counts_minus.mean(), 1e-300)


def _profile(alpha, data, sig_plus, sig_minus):
    """Chi-square as a function of c with the amplitudes solved in closed form."""
    cos = np.cos(alpha)
    wp, wm = 1 / sig_plus**2, 1 / sig_minus**2
    yp, ym = data.counts_plus, data.counts_minus

    def amplitudes(c):
        fp, fm = 1 + c * cos, 1 - c * cos
        ap = np.dot(wp * fp, yp) / max(np.dot(wp * fp, fp), 1e-300)
        am = np.dot(wm * fm, ym) / max(np.dot(wm * fm, fm), 1e-300)
        return ap, am

    def chi2(c):
        ap, am = amplitudes(c)
        return float(np.dot(wp, (ap * (1 + c * cos) - yp) ** 2) + np.dot(wm, (am * (1 - c * cos) - ym) ** 2))

    return amplitudes, chi2


def _fit_phases(alpha, data, sig_plus, sig_minus) -> FitResult:
    """Shared-visibility fit with known phases."""
    amplitudes, chi2 = _profile(alpha, data, sig_plus, sig_minus)
    # coarse grid guards against local minima, bounded Brent polishes
    grid = np.linspace(0.0, 1.0, 201)
    values = [chi2(c) for c in grid]
    i = int(np.argmin(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(chi2, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14, "maxiter": 500})
    candidates = [(values[i], grid[i]), (chi2(0.0), 0.0), (chi2(1.0), 1.0)]
    if res.success:
        candidates.append((res.fun, float(res.x)))
    best_chi2, c = min(candidates)
    ap, am = amplitudes(c)

    cos = np.cos(alpha)
    n = len(alpha)
    jac = np.zeros((2 * n, 3))
    jac[:n, 0] = (1 + c * cos) / sig_plus
    jac[n:, 1] = (1 - c * cos) / sig_minus
    jac[:n, 2] = ap * cos / sig_plus
    jac[n:, 2] = -am * cos / sig_minus
    cov = _covariance(jac) * _scale(data, best_chi2, 2 * n - 3)
    return FitResult(float(c), float(math.sqrt(max(cov[2, 2], 0.0))), (float(ap), float(am)),
                     chi2=float(best_chi2))


def _scale(data: FringeDataset, chi2: float, dof: int) -> float:
    if data.absolute_sigma:
        return 1.0
    return chi2 / dof if dof > 0 else 0.0


def _covariance(jac: np.ndarray) -> np.ndarray:
    jtj = jac.T @ jac
    try:
        return np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(jtj)


def _scan_frequency(power, data, sig_plus, sig_minus):
    """Coarse slope search: linear fit of both traces for each trial slope."""
    span = np.ptp(power)
    spacing = np.min(np.diff(np.unique(power)))
    a_max = math.pi / spacing
    a_min = 0.25 * math.pi / span
    grid = np.arange(a_min, a_max, 0.05 / span)
    best = (math.inf, None)
    y = np.concatenate([data.counts_plus / sig_plus, data.counts_minus / sig_minus])
    n = len(power)
    for a in grid:
        cos, sin = np.cos(a * power), np.sin(a * power)
        design = np.zeros((2 * n, 4))
        design[:n, 0] = 1 / sig_plus
        design[n:, 1] = 1 / sig_minus
        design[:n, 2] = cos / sig_plus
        design[n:, 2] = -cos / sig_minus
        design[:n, 3] = sin / sig_plus
        design[n:, 3] = -sin / sig_minus
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        rss = np.sum((design @ coef - y) ** 2)
        if rss < best[0]:
            best = (rss, (a, coef))
    a, (bp, bm, u, v) = best[1]
    amp = max((bp + bm) / 2, 1e-300)
    # A(1 + c cos(aP + b)) = A + A c cos b cos(aP) - A c sin b sin(aP)
    c = min(math.hypot(u, v) / amp, 1.0)
    b = math.atan2(-v, u)
    return a, b, c


def _fit_power(power, data, sig_plus, sig_minus) -> FitResult:
    a0, b0, c0 = _scan_frequency(power, data, sig_plus, sig_minus)
    a_plus, a_minus = _initial_amplitudes(data)

    def residuals(p):
        ap, am, c, a, b = p
        cos = np.cos(a * power + b)
        return np.concatenate([
            (ap * (1 + c * cos) - data.counts_plus) / sig_plus,
            (am * (1 - c * cos) - data.counts_minus) / sig_minus,
        ])

    res = least_squares(
        residuals, [a_plus, a_minus, c0, a0, b0],
        bounds=([0, 0, 0, 0, -np.inf], [np.inf, np.inf, 1, np.inf, np.inf]),
        x_scale=np.array([a_plus, a_minus, 1.0, a0, 1.0]),
        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000,
    )
    if not res.success:
        raise FitError(f"calibrated visibility fit did not converge: {res.message}")
    ap, am, c, a, b = res.x
    from .circuit import wrap_phase

    polished = _fit_phases(a * power + b, data, sig_plus, sig_minus)
    cov = _covariance(res.jac) * _scale(data, polished.chi2, 2 * len(power) - 5)
    return polished._replace(c1_err=float(math.sqrt(max(cov[2, 2], 0.0))),
                             slope=float(a), offset=wrap_phase(float(b)))


def fit_visibility(data: FringeDataset, calibration: tuple[float, float] | None = None) -> FitResult:
    """Fit counts_plus to A+(1 + c1 cos a) and counts_minus to A-(1 - c1 cos a).

    Phases come straight from the control column when it is in radians.
    For heater powers the map a = slope * P + offset is either supplied as
    ``calibration`` or fitted jointly (slope > 0).  c1 is constrained to
    [0, 1] and its error is taken from the fit covariance.
    """
    control = data.control
    if len(np.unique(control)) < 2:
        raise FitError("all control values are equal; the fit is degenerate")
    sig_plus, sig_minus = _weights(data)
    if data.unit == "radians" or calibration is not None:
        if len(np.unique(control)) < 3:
            raise FitError("need at least 3 distinct control values")
        alpha = control if calibration is None else calibration[0] * control + calibration[1]
        result = _fit_phases(alpha, data, sig_plus, sig_minus)
        if calibration is not None:
            result = result._replace(slope=float(calibration[0]), offset=float(calibration[1]))
        return result
    if len(np.unique(control)) < 4:
        raise FitError("need at least 4 distinct powers to fit the phase calibration")
    return _fit_power(control, data, sig_plus, sig_minus)


def phase_calibration(data: FringeDataset) -> tuple[float, float, float]:
    """Linear power-to-phase map ``(slope, offset, chi2)`` from a heater scan."""
    if data.unit != "milliwatts":
        raise CalibrationError("phase calibration needs a dataset in milliwatts")
    if len(np.unique(data.control)) < 4:
        raise CalibrationError("need at least 4 distinct powers")
    try:
        result = fit_visibility(data)
    except FitError as exc:
        raise CalibrationError(str(exc)) from exc
    if result.slope * np.ptp(data.control) <= math.pi:
        raise CalibrationError("scan spans less than half a fringe period")
    return result.slope, result.offset, result.chi2


def single_point_visibility(plus: float, minus: float, alpha: float = 0.0) -> float:
    """c1 from one phase setting, (P+ - P-) / ((P+ + P-) cos alpha).

    Assumes equal plus and minus amplitudes.
    """
    cos = math.cos(alpha)
    if abs(cos) < 1e-9 or plus + minus <= 0:
        raise InputError("single-point estimate needs cos(alpha) != 0 and nonzero counts")
    return (plus - minus) / ((plus + minus) * cos)


# ------------------------------------------------------------ overlaps


def hom_indistinguishability(visibility: float, g2: float) -> float:
    """Single-photon indistinguishability from a HOM visibility, (V + g2) / (1 - g2)."""
    if not 0.0 <= g2 < 1.0:
        raise InputError(f"g2 must lie in [0, 1), got {g2}")
    if not 0.0 <= visibility <= 1.0:
        raise InputError(f"visibility must lie in [0, 1], got {visibility}")
    return min(max((visibility + g2) / (1.0 - g2), 0.0), 1.0)


def _check_unit_interval(values: Sequence[float]) -> None:
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise InputError(f"overlap {v} outside [0, 1]")


def c1_bounds(overlaps) -> Bounds:
    """Bounds on c1 from the four ring overlaps (AB, BC, CD, DA)."""
    m = np.asarray(overlaps.means if isinstance(overlaps, OverlapSet) else overlaps, dtype=float)
    if m.shape != (4,):
        raise InputError("expected four overlaps (AB, BC, CD, DA)")
    _check_unit_interval(m)
    # sum(M) - 3 written as min(M) minus the deficits of the others, so
    # rounding can never push the lower bound above the upper one
    order = np.argsort(m)
    lower = m[order[0]] - float(np.sum(1.0 - m[order[1:]]))
    return Bounds(max(0.0, float(lower)), float(m[order[0]]))


def unmeasured_overlap_bounds(m_ab: float, m_bc: float, m_cd: float):
    """Feasible intervals for the diagonal overlaps M_AC and M_BD."""
    _check_unit_interval([m_ab, m_bc, m_cd])
    ac = (max(0.0, m_ab + m_bc - 1.0), 1.0 - abs(m_ab - m_bc))
    bd = (max(0.0, m_bc + m_cd - 1.0), 1.0 - abs(m_bc - m_cd))
    return ac, bd


def bootstrap_bounds(overlaps: OverlapSet, iterations: int = 10_000, seed: int = 0) -> Bounds:
    """Bounds widened by three standard deviations of their resampled values.

    Each overlap is drawn from a normal distribution with the given mean and
    standard error, clipped to [0, 1].
    """
    if iterations < 100:
        raise InputError("bootstrap needs at least 100 iterations")
    means, errors = overlaps.means, overlaps.errors
    _check_unit_interval(means)
    if np.any(errors < 0):
        raise InputError("standard errors must be nonnegative")
    if not np.any(errors):
        return c1_bounds(means)
    rng = np.random.default_rng(seed)
    samples = np.clip(rng.normal(means, errors, size=(iterations, 4)), 0.0, 1.0)
    lower = np.maximum(samples.sum(axis=1) - 3.0, 0.0)
    upper = samples.min(axis=1)
    c1_min = lower.mean() - 3 * lower.std()
    c1_max = upper.mean() + 3 * upper.std()
    return Bounds(float(min(max(c1_min, 0.0), 1.0)), float(min(max(c1_max, 0.0), 1.0)))
