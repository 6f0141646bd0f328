"""Experimental-imperfection model for the odd-mode n-photon fringe.

The source emits 0, 1 or 2 photons per time bin with probabilities
(p0, p1, p2); the second photon of a pair is a noise photon orthogonal to
everything else.  Balanced losses act before the chip with transmission
eta, couplers may deviate from T = 0.5 and each threshold detector clicks
for n impinging photons with probability 1 - (1 - eta_i)**n.

Only terms with at most one noise photon and at least n photons are kept.
Every such input is propagated exactly to every output state, so doubled
outputs of the five-photon terms and photons landing on detectors that fail
to click are all accounted for.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .analysis import FitResult, FringeDataset, fit_visibility
from .circuit import CircuitSpec, build_unitary
from .errors import InputError
from .fock import FockState, enumerate_states, from_modes, odd_modes
from .interference import Mixture, fringe_outputs, output_distribution, prob_partial

__all__ = [
    "SourceParams",
    "DetectorParams",
    "NoiseConfig",
    "WeightedInput",
    "TOGGLES",
    "solve_emission_probs",
    "lossy_input_ensemble",
    "click_probability",
    "simulate_experiment",
    "predict",
    "predicted_c1",
    "infer_weights",
]

TOGGLES = ("multiphoton", "couplers", "detection")
PRINCIPAL = "principal"
NOISE = "noise"


def solve_emission_probs(brightness: float, g2: float) -> tuple[float, float, float]:
    """(p0, p1, p2) from B = p1 + p2 and g2 = 2 p2 / (p1 + 2 p2)**2.

    Substituting p1 = B - p2 gives g2 (B + p2)**2 = 2 p2, whose smaller
    root is the physical one.
    """
    b, g = float(brightness), float(g2)
    if not 0.0 < b <= 1.0:
        raise InputError(f"brightness {b} outside (0, 1]")
    if not 0.0 <= g < 0.5:
        raise InputError(f"g2 {g} outside [0, 0.5)")
    disc = 1.0 - 2.0 * g * b
    if disc < 0.0:
        raise InputError(f"no real emission probabilities for B={b}, g2={g}")
    # rationalized form of (2 - 2gB - 2 sqrt(disc)) / (2g), stable as g -> 0
    p2 = 2.0 * g * b * b / ((2.0 - 2.0 * g * b) + 2.0 * math.sqrt(disc))
    p1 = b - p2
    if p1 < 0.0:
        raise InputError(f"no nonnegative emission probabilities for B={b}, g2={g}")
    return 1.0 - b, p1, p2


@dataclass(frozen=True)
class SourceParams:
    brightness: float
    g2: float
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise InputError(f"transmission {self.eta} outside [0, 1]")
        solve_emission_probs(self.brightness, self.g2)

    @property
    def probs(self) -> tuple[float, float, float]:
        return solve_emission_probs(self.brightness, self.g2)


@dataclass(frozen=True)
class DetectorParams:
    """Relative detector efficiencies, rescaled so the best detector is 1."""

    imbalances: tuple[float, ...]

    def __post_init__(self):
        values = np.asarray(self.imbalances, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise InputError("detector imbalances must be a nonempty list")
        if np.any(values <= 0.0) or np.any(values > 1.0) or np.any(np.isnan(values)):
            raise InputError(f"detector imbalances must lie in (0, 1], got {values.tolist()}")
        object.__setattr__(self, "imbalances", tuple(float(v) for v in values / values.max()))

    @classmethod
    def ideal(cls, n_modes: int) -> "DetectorParams":
        return cls((1.0,) * n_modes)


def click_probability(imbalance, photons):
    """Chance that a threshold detector fires when ``photons`` reach it."""
    return 1.0 - (1.0 - np.asarray(imbalance, dtype=float)) ** np.asarray(photons)


@dataclass(frozen=True)
class WeightedInput:
    """One term of the lossy input ensemble.

    ``photons`` lists ``(mode, kind)`` with kind ``"principal"`` or
    ``"noise"``; a principal photon on mode 2m-1 belongs to source m.
    """

    weight: float
    photons: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if self.weight < 0.0:
            raise InputError(f"negative ensemble weight {self.weight}")
        photons = tuple(sorted((int(m), str(kind)) for m, kind in self.photons))
        for _, kind in photons:
            if kind not in (PRINCIPAL, NOISE):
                raise InputError(f"unknown photon kind {kind!r}")
        object.__setattr__(self, "photons", photons)

    @property
    def n_photons(self) -> int:
        return len(self.photons)

    def state(self, n_modes: int) -> FockState:
        return from_modes([m for m, _ in self.photons], n_modes)

    def mixture(self, x: Sequence[float]) -> Mixture:
        """Mixture weights in mode-list order; noise photons get zero."""
        return Mixture(tuple(x[(m - 1) // 2] if kind == PRINCIPAL else 0.0 for m, kind in self.photons))


def lossy_input_ensemble(params: SourceParams, n: int = 4) -> list[WeightedInput]:
    """Inputs on modes 1, 3, ..., 2n-1 after emission and balanced loss.

    Four groups, each over every placement of the noise photon:

    * n principal photons, p1^n eta^n + n p1^(n-1) p2 eta^n (1 - eta)
    * a noise photon in place of one principal, p1^(n-1) p2 eta^n (1 - eta)
    * a principal + noise pair on one mode and another mode empty,
      p0 p1^(n-2) p2 eta^n + p1^(n-1) p2 eta^n (1 - eta)
    * a principal + noise pair plus n - 1 principals, p1^(n-1) p2 eta^(n+1)
    """
    if n < 2:
        raise InputError(f"need at least two sources, got n={n}")
    p0, p1, p2 = params.probs
    eta = params.eta
    modes = odd_modes(n)
    out = [WeightedInput(p1**n * eta**n + n * p1 ** (n - 1) * p2 * eta**n * (1 - eta),
                         tuple((m, PRINCIPAL) for m in modes))]
    if p2 == 0.0:
        return out
    w_swap = p1 ** (n - 1) * p2 * eta**n * (1 - eta)
    w_pair_gap = p0 * p1 ** (n - 2) * p2 * eta**n + p1 ** (n - 1) * p2 * eta**n * (1 - eta)
    w_five = p1 ** (n - 1) * p2 * eta ** (n + 1)
    for doubled in modes:
        others = tuple((m, PRINCIPAL) for m in modes if m != doubled)
        out.append(WeightedInput(w_swap, others + ((doubled, NOISE),)))
        out.append(WeightedInput(w_five, others + ((doubled, PRINCIPAL), (doubled, NOISE))))
        for empty in modes:
            if empty == doubled:
                continue
            rest = tuple((m, PRINCIPAL) for m in modes if m not in (doubled, empty))
            out.append(WeightedInput(w_pair_gap, rest + ((doubled, PRINCIPAL), (doubled, NOISE))))
    return [term for term in out if term.weight > 0.0]


@dataclass(frozen=True)
class NoiseConfig:
    source: SourceParams
    detectors: DetectorParams
    circuit: CircuitSpec
    x: tuple[float, ...]
    toggles: frozenset = frozenset(TOGGLES)

    def __post_init__(self):
        n = self.circuit.n
        x = tuple(float(v) for v in self.x)
        if len(x) != n:
            raise InputError(f"expected {n} photon weights, got {len(x)}")
        Mixture(x)  # range check
        if len(self.detectors.imbalances) != self.circuit.n_modes:
            raise InputError(
                f"expected {self.circuit.n_modes} detector imbalances, got {len(self.detectors.imbalances)}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "toggles", _check_toggles(self.toggles))

    @property
    def n(self) -> int:
        return self.circuit.n

    def with_toggles(self, toggles: Iterable[str]) -> "NoiseConfig":
        """Same parameters with the disabled imperfections made ideal.

        Partial distinguishability and balanced loss are always kept.
        """
        toggles = _check_toggles(toggles)
        source, detectors, circuit = self.source, self.detectors, self.circuit
        if "multiphoton" not in toggles:
            source = replace(source, g2=0.0)
        if "couplers" not in toggles:
            circuit = CircuitSpec(circuit.n, circuit.phases)
        if "detection" not in toggles:
            detectors = DetectorParams.ideal(circuit.n_modes)
        return NoiseConfig(source, detectors, circuit, self.x, toggles)

    def to_dict(self) -> dict:
        return {
            "brightness": self.source.brightness,
            "g2": self.source.g2,
            "eta": self.source.eta,
            "detector_imbalance": list(self.detectors.imbalances),
            "transmissivities": list(self.circuit.transmissivities),
            "x": list(self.x),
            "toggles": sorted(self.toggles),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseConfig":
        required = ("brightness", "g2", "eta", "detector_imbalance", "transmissivities", "x")
        if not isinstance(data, dict):
            raise InputError("noise config must be a JSON object")
        missing = [key for key in required if key not in data]
        if missing:
            raise InputError(f"noise config is missing {', '.join(missing)}")
        trans = list(data["transmissivities"])
        if len(trans) % 2:
            raise InputError(f"need an even number of transmissivities, got {len(trans)}")
        try:
            circuit = CircuitSpec(len(trans) // 2, None, trans)
            source = SourceParams(float(data["brightness"]), float(data["g2"]), float(data["eta"]))
            detectors = DetectorParams(tuple(data["detector_imbalance"]))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"bad noise config value: {exc}") from exc
        toggles = data.get("toggles", TOGGLES)
        return cls(source, detectors, circuit, tuple(data["x"]), frozenset(toggles))

    @classmethod
    def load(cls, path) -> "NoiseConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: malformed JSON ({exc})") from exc
        return cls.from_dict(data)


def _check_toggles(toggles: Iterable[str]) -> frozenset:
    toggles = frozenset(toggles)
    unknown = toggles - set(TOGGLES)
    if unknown:
        raise InputError(f"unknown toggles {sorted(unknown)}; choose from {TOGGLES}")
    return toggles


def _click_matrix(outputs: Sequence[FockState], patterns: Sequence[tuple[int, ...]],
                  imbalances: Sequence[float]) -> np.ndarray:
    """Probability that exactly the detectors in each pattern fire, per output."""
    occ = np.array([h.occupations for h in outputs], dtype=float)
    fire = click_probability(np.asarray(imbalances)[None, :], occ)
    out = np.empty((len(outputs), len(patterns)))
    for j, pattern in enumerate(patterns):
        mask = np.zeros(occ.shape[1], dtype=bool)
        mask[np.array(pattern) - 1] = True
        out[:, j] = np.prod(np.where(mask, fire, 1.0 - fire), axis=1)
    return out


@dataclass
class _Channel:
    weight: float
    state: FockState
    model: Mixture
    outputs: list
    clicks: np.ndarray


def _channels(config: NoiseConfig, patterns) -> list[_Channel]:
    n_modes = config.circuit.n_modes
    cache = {}
    channels = []
    for term in lossy_input_ensemble(config.source, config.n):
        k = term.n_photons
        if k not in cache:
            outputs = enumerate_states(n_modes, k)
            clicks = _click_matrix(outputs, patterns, config.detectors.imbalances)
            keep = clicks.any(axis=1)
            cache[k] = ([h for h, flag in zip(outputs, keep) if flag], clicks[keep])
        outputs, clicks = cache[k]
        channels.append(_Channel(term.weight, term.state(n_modes), term.mixture(config.x), outputs, clicks))
    return channels


def _pattern_rates(config: NoiseConfig, channels, patterns, alpha: float) -> np.ndarray:
    spec = config.circuit
    phases = (spec.phases[0] + alpha,) + spec.phases[1:]
    u = build_unitary(CircuitSpec(spec.n, phases, spec.transmissivities))
    rates = np.zeros(len(patterns))
    for ch in channels:
        probs = output_distribution(u, ch.state, ch.outputs, ch.model)
        rates += ch.weight * (probs @ ch.clicks)
    return rates


def simulate_experiment(config: NoiseConfig, alphas, workers: int = 1) -> FringeDataset:
    """Plus and minus n-fold click rates while sweeping the phase of arm 1.

    The config is simulated exactly as given; use
    :meth:`NoiseConfig.with_toggles` to switch imperfections off.  Rates are
    per time bin and include the overall transmission.
    """
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if alphas.size == 0:
        raise InputError("need at least one phase value")
    inputs = from_modes(odd_modes(config.n), config.circuit.n_modes)
    plus, minus = fringe_outputs(inputs)
    patterns = [h.mode_list for h in plus] + [h.mode_list for h in minus]
    channels = _channels(config, patterns)

    def run(alpha):
        return _pattern_rates(config, channels, patterns, alpha)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rates = np.array(list(pool.map(run, alphas)))
    else:
        rates = np.array([run(a) for a in alphas])
    n_plus = len(plus)
    return FringeDataset.simulated(alphas, rates[:, :n_plus].sum(axis=1), rates[:, n_plus:].sum(axis=1))


DEFAULT_ALPHAS = np.linspace(0.0, 2.0 * np.pi, 24, endpoint=False)


def predict(config: NoiseConfig, toggles: Iterable[str] | None = None,
            alphas=None, workers: int = 1) -> tuple[FringeDataset, FitResult]:
    """Simulated traces and their joint fit for the chosen imperfections."""
    toggles = config.toggles if toggles is None else toggles
    alphas = DEFAULT_ALPHAS if alphas is None else alphas
    data = simulate_experiment(config.with_toggles(toggles), alphas, workers=workers)
    return data, fit_visibility(data)


def predicted_c1(config: NoiseConfig, toggles: Iterable[str] | None = None, alphas=None) -> float:
    """Visibility the fit extracts from the simulated experiment."""
    return predict(config, toggles, alphas)[1].c1


# Adjacent sources meet on one second-layer coupler: photons from modes
# 2m-1 and 2m+1 interfere on the coupler (2m, 2m+1).
def _pair_geometry(n: int, pair: int) -> tuple[tuple[int, int], tuple[int, int]]:
    a = 2 * pair + 1
    b = a + 2 if pair < n - 1 else 1
    out = (a + 1, a + 2) if pair < n - 1 else (2 * n, 1)
    return (a, b), out


def ideal_hom_visibility(circuit: CircuitSpec, pair: int) -> float:
    """HOM visibility of two identical photons from sources ``pair`` and ``pair + 1``.

    Coincidences are counted on the second-layer coupler where the two
    sources meet; imperfect couplers push the value below one.
    """
    (a, b), out = _pair_geometry(circuit.n, pair)
    u = build_unitary(circuit)
    g = from_modes((a, b), circuit.n_modes)
    h = from_modes(out, circuit.n_modes)
    p_same = prob_partial(u, g, h, Mixture((1.0, 1.0)))
    p_dist = prob_partial(u, g, h, Mixture((0.0, 0.0)))
    return 1.0 - p_same / p_dist


def infer_weights(overlaps: Sequence[float], circuit: CircuitSpec) -> np.ndarray:
    """Mixture weights x whose simulated neighbour HOM visibilities match ``overlaps``.

    ``overlaps[m]`` belongs to sources m and m+1 (cyclically).  Each
    simulated visibility is x_m x_{m+1} times the ideal visibility of that
    coupler, so this is a bounded least-squares problem in x.
    """
    target = np.asarray(overlaps, dtype=float)
    n = circuit.n
    if target.shape != (n,):
        raise InputError(f"expected {n} neighbour overlaps, got {target.shape}")
    scale = np.array([ideal_hom_visibility(circuit, m) for m in range(n)])

    def residuals(x):
        return x * np.roll(x, -1) * scale - target

    x0 = np.full(n, math.sqrt(max(target.mean(), 1e-6)))
    fit = least_squares(residuals, np.clip(x0, 0.0, 1.0), bounds=(0.0, 1.0), xtol=1e-14, ftol=1e-14)
    return fit.x
