"""Fock-state bookkeeping on N optical modes.

Modes are labelled 1..N in every public function; conversion to 0-based
indices happens only when a unitary is indexed.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

__all__ = [
    "FockState",
    "from_modes",
    "enumerate_states",
    "scattering_submatrix",
    "parse_state",
    "odd_modes",
    "as_state",
]


@dataclass(frozen=True)
class FockState:
    """Photon occupation of N modes.

    ``occupations[i]`` is the number of photons in mode ``i + 1``.  The
    equivalent mode-list view repeats each 1-based label once per photon,
    in non-decreasing order.
    """

    occupations: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(v) for v in self.occupations)
        if not occ:
            raise InputError("a Fock state needs at least one mode")
        if any(v < 0 for v in occ):
            raise InputError(f"negative occupation in {occ}")
        object.__setattr__(self, "occupations", occ)

    @property
    def n_modes(self) -> int:
        return len(self.occupations)

    @property
    def n_photons(self) -> int:
        return sum(self.occupations)

    @property
    def mode_list(self) -> tuple[int, ...]:
        return tuple(
            mode for mode, count in enumerate(self.occupations, start=1) for _ in range(count)
        )

    @property
    def is_collision_free(self) -> bool:
        return all(v <= 1 for v in self.occupations)

    def multiplicity_factor(self) -> int:
        """Product of factorials of the occupations."""
        out = 1
        for v in self.occupations:
            out *= _factorial(v)
        return out

    def __str__(self) -> str:
        return ",".join(str(v) for v in self.occupations)


_FACTORIALS = [1, 1, 2, 6, 24, 120, 720, 5040, 40320, 362880, 3628800]


def _factorial(v: int) -> int:
    if v < len(_FACTORIALS):
        return _FACTORIALS[v]
    out = 1
    for i in range(2, v + 1):
        out *= i
    return out


def from_modes(modes: Iterable[int], n_modes: int) -> FockState:
    """Build a state from a list of 1-based mode labels (order irrelevant)."""
    if n_modes < 1:
        raise InputError(f"mode count must be positive, got {n_modes}")
    occ = [0] * n_modes
    for m in modes:
        m = int(m)
        if not 1 <= m <= n_modes:
            raise InputError(f"mode {m} outside 1..{n_modes}")
        occ[m - 1] += 1
    return FockState(tuple(occ))


def enumerate_states(n_modes: int, n_photons: int, collision_free: bool = False) -> list[FockState]:
    """All k-photon states on N modes, ordered lexicographically by mode list."""
    if n_modes < 1 or n_photons < 0:
        raise InputError(f"need N >= 1 and k >= 0, got N={n_modes}, k={n_photons}")
    labels = range(1, n_modes + 1)
    if collision_free:
        combos = itertools.combinations(labels, n_photons)
    else:
        combos = itertools.combinations_with_replacement(labels, n_photons)
    return [from_modes(c, n_modes) for c in combos]


def scattering_submatrix(unitary: np.ndarray, input_state: FockState, output_state: FockState) -> np.ndarray:
    """Submatrix S with ``S[r, c] = U[h_r, g_c]``.

    Rows follow the output mode list and columns the input mode list, so a
    mode holding several photons contributes repeated rows or columns.
    """
    if input_state.n_photons != output_state.n_photons:
        raise InputError(
            f"photon number mismatch: input has {input_state.n_photons}, "
            f"output has {output_state.n_photons}"
        )
    u = np.asarray(unitary)
    if u.shape != (input_state.n_modes, input_state.n_modes) or output_state.n_modes != input_state.n_modes:
        raise InputError(
            f"unitary of shape {u.shape} does not act on {input_state.n_modes} modes"
        )
    rows = np.array(output_state.mode_list, dtype=int) - 1
    cols = np.array(input_state.mode_list, dtype=int) - 1
    return u[np.ix_(rows, cols)]


_MODE_LIST_FORM = re.compile(r"^\s*\[([^\]]*)\]\s*@\s*(\d+)\s*$")


def parse_state(text: str) -> FockState:
    """Parse ``"1,0,1,0"`` (occupations) or ``"[1,3]@4"`` (mode list on N modes)."""
    match = _MODE_LIST_FORM.match(text)
    try:
        if match:
            body, n_modes = match.groups()
            modes = [int(tok) for tok in body.split(",") if tok.strip()]
            return from_modes(modes, int(n_modes))
        return FockState(tuple(int(tok) for tok in text.split(",")))
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"cannot parse Fock state {text!r}") from exc


def odd_modes(n_photons: int) -> tuple[int, ...]:
    """The mode labels (1, 3, 5, ...) holding one photon each."""
    return tuple(range(1, 2 * n_photons, 2))


def as_state(value: FockState | Sequence[int], n_modes: int | None = None) -> FockState:
    """Accept either a FockState or a mode list plus mode count."""
    if isinstance(value, FockState):
        return value
    if n_modes is None:
        raise InputError("a mode list needs an explicit mode count")
    return from_modes(value, n_modes)
