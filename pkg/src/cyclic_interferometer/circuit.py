"""Cyclic interferometer layout: unitary construction and phase equivalences.

Layout on N = 2n modes (1-based labels):

* first layer: couplers on (1, 2), (3, 4), ..., (N-1, N)
* one phase delay per internal arm, phi_1..phi_N
* second layer: couplers on (2, 3), (4, 5), ..., (N-2, N-1) and the
  wraparound coupler (N, 1)

Transmissivities are listed first-layer first, the wraparound coupler last.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InputError
from .fock import enumerate_states

__all__ = [
    "CircuitSpec",
    "beam_splitter",
    "build_unitary",
    "collapse_phases",
    "equivalent_single_phase",
    "is_equivalent",
    "wrap_phase",
    "mach_zehnder",
    "write_unitary_csv",
    "read_unitary_csv",
]


@dataclass(frozen=True)
class CircuitSpec:
    n: int
    phases: tuple[float, ...] = field(default=None)
    transmissivities: tuple[float, ...] = field(default=None)

    def __post_init__(self):
        n = int(self.n)
        if n < 2:
            raise InputError(f"the cyclic layout needs n >= 2, got n={n}")
        n_modes = 2 * n
        phases = (0.0,) * n_modes if self.phases is None else tuple(float(p) for p in self.phases)
        trans = (0.5,) * n_modes if self.transmissivities is None else tuple(float(t) for t in self.transmissivities)
        if len(phases) != n_modes:
            raise InputError(f"expected {n_modes} phases, got {len(phases)}")
        if len(trans) != n_modes:
            raise InputError(f"expected {n_modes} transmissivities, got {len(trans)}")
        for t in trans:
            if not 0.0 <= t <= 1.0 or math.isnan(t):
                raise InputError(f"transmissivity {t} outside [0, 1]")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "transmissivities", trans)

    @property
    def n_modes(self) -> int:
        return 2 * self.n

    @property
    def is_balanced(self) -> bool:
        return all(t == 0.5 for t in self.transmissivities)

    @classmethod
    def with_alpha(cls, n: int, alpha: float, transmissivities=None) -> "CircuitSpec":
        """Canonical circuit: phase ``alpha`` on arm 1, zero elsewhere."""
        return cls(n, (alpha,) + (0.0,) * (2 * n - 1), transmissivities)

    def to_dict(self) -> dict:
        return {"n": self.n, "phases": list(self.phases), "transmissivities": list(self.transmissivities)}

    @classmethod
    def from_dict(cls, data: dict) -> "CircuitSpec":
        if not isinstance(data, dict) or "n" not in data:
            raise InputError("circuit JSON must be an object with an 'n' field")
        return cls(data["n"], data.get("phases"), data.get("transmissivities"))

    @classmethod
    def load(cls, path) -> "CircuitSpec":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: malformed JSON ({exc})") from exc
        return cls.from_dict(data)


def beam_splitter(transmissivity: float) -> np.ndarray:
    """Symmetric coupler [[sqrt T, i sqrt(1-T)], [i sqrt(1-T), sqrt T]]."""
    t = float(transmissivity)
    if not 0.0 <= t <= 1.0:
        raise InputError(f"transmissivity {t} outside [0, 1]")
    a = math.sqrt(t)
    b = 1j * math.sqrt(1.0 - t)
    return np.array([[a, b], [b, a]], dtype=np.complex128)


def _embed(n_modes: int, pairs, transmissivities) -> np.ndarray:
    layer = np.zeros((n_modes, n_modes), dtype=np.complex128)
    for (p, q), t in zip(pairs, transmissivities):
        bs = beam_splitter(t)
        idx = [p - 1, q - 1]
        layer[np.ix_(idx, idx)] = bs
    return layer


def first_layer_pairs(n: int) -> list[tuple[int, int]]:
    return [(2 * m - 1, 2 * m) for m in range(1, n + 1)]


def second_layer_pairs(n: int) -> list[tuple[int, int]]:
    return [(2 * m, 2 * m + 1) for m in range(1, n)] + [(2 * n, 1)]


def build_unitary(spec: CircuitSpec) -> np.ndarray:
    """N x N matrix ``U[out, in]`` of the cyclic interferometer.

    The coupler matrix is symmetric under exchanging both ports, so the
    embedding of the wraparound coupler does not depend on which of modes
    N and 1 is called the upper port.
    """
    n = spec.n
    trans = spec.transmissivities
    first = _embed(spec.n_modes, first_layer_pairs(n), trans[:n])
    second = _embed(spec.n_modes, second_layer_pairs(n), trans[n:])
    arms = np.exp(1j * np.asarray(spec.phases))
    return second @ (arms[:, None] * first)


def wrap_phase(angle: float) -> float:
    """Reduce an angle into (-pi, pi]."""
    out = math.remainder(angle, 2 * math.pi)
    if out <= -math.pi:
        out += 2 * math.pi
    return out


def collapse_phases(spec: CircuitSpec) -> tuple[float, CircuitSpec]:
    """Move every internal phase onto arm 1.

    Returns ``(alpha1, canonical)`` with alpha1 the alternating sum
    phi_1 - phi_2 + phi_3 - ... reduced into (-pi, pi].
    """
    phases = spec.phases
    alpha = sum(phases[0::2]) - sum(phases[1::2])
    alpha = wrap_phase(alpha)
    return alpha, CircuitSpec.with_alpha(spec.n, alpha, spec.transmissivities)


def equivalent_single_phase(spec: CircuitSpec, arm: int) -> CircuitSpec:
    """Equivalent circuit whose only nonzero phase sits on ``arm``.

    Odd arms carry +alpha1 and even arms -alpha1.  Only valid for balanced
    couplers.
    """
    if not 1 <= arm <= spec.n_modes:
        raise InputError(f"arm {arm} outside 1..{spec.n_modes}")
    if not spec.is_balanced:
        raise InputError("single-arm equivalence holds only for balanced couplers")
    alpha, _ = collapse_phases(spec)
    phases = [0.0] * spec.n_modes
    phases[arm - 1] = alpha if arm % 2 == 1 else wrap_phase(-alpha)
    return replace(spec, phases=tuple(phases))


def _as_unitary(circuit) -> np.ndarray:
    if isinstance(circuit, CircuitSpec):
        return build_unitary(circuit)
    u = np.asarray(circuit, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise InputError(f"expected a square unitary, got shape {u.shape}")
    return u


def is_equivalent(a, b, max_photons: int, tol: float = 1e-10) -> bool:
    """True if both circuits give the same transition probabilities.

    ``a`` and ``b`` are CircuitSpecs or unitary matrices.  Every
    input/output pair of identical photons with up to ``max_photons``
    photons is compared.
    """
    from .interference import output_distribution

    ua, ub = _as_unitary(a), _as_unitary(b)
    if ua.shape != ub.shape:
        raise InputError(f"mode counts differ: {ua.shape[0]} vs {ub.shape[0]}")
    n_modes = ua.shape[0]
    for k in range(1, max_photons + 1):
        states = enumerate_states(n_modes, k)
        for g in states:
            pa = output_distribution(ua, g, states)
            pb = output_distribution(ub, g, states)
            if np.max(np.abs(pa - pb)) > tol:
                return False
    return True


def mach_zehnder(psi1: float, psi2: float) -> np.ndarray:
    """Two balanced couplers around internal phases (psi1, psi2)."""
    bs = beam_splitter(0.5)
    return bs @ np.diag(np.exp(1j * np.array([psi1, psi2]))) @ bs


def write_unitary_csv(unitary: np.ndarray, path) -> None:
    """One row per output mode, columns re(U[i,1]), im(U[i,1]), re(U[i,2]), ..."""
    u = np.asarray(unitary)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = []
        for j in range(1, u.shape[1] + 1):
            header += [f"re_{j}", f"im_{j}"]
        writer.writerow(header)
        for row in u:
            values = []
            for z in row:
                values += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            writer.writerow(values)


def read_unitary_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0::2] + 1j * data[:, 1::2]
