"""Multiphoton transition probabilities and cyclic-interferometer fringes.

Partially distinguishable photons are handled through a single expansion.
With S the scattering submatrix (rows: output photons, columns: input
photons) every model reduces to

    P = 1/prod(nu!) * sum_rho c(rho) * perm(S * conj(S[:, rho]))

where rho runs over permutations of the input photons and c(rho) depends
only on the model and on which input photons share a mode.  Identical
photons give c = 1/prod(mu!) for every rho; fully distinguishable photons
keep only the identity.
"""

from __future__ import annotations

import functools
import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import CircuitSpec, build_unitary
from .errors import ClassificationError, InputError
from .fock import FockState, enumerate_states, scattering_submatrix
from .permanent import permanent_batch, permanent_fast

__all__ = [
    "DistinguishabilityModel",
    "Mixture",
    "Gram",
    "FringePrediction",
    "prob_indistinguishable",
    "prob_distinguishable",
    "prob_partial",
    "output_distribution",
    "closed_form_fringe",
    "fringe_sign",
    "fringe_outputs",
    "scan_fringe",
]

MAX_INDIST_PHOTONS = 12
MAX_GRAM_PHOTONS = 6


# ---------------------------------------------------------------- models


class DistinguishabilityModel:
    """Internal-state description of the input photons.

    Photon ``j`` is the ``j``-th entry of the input state's mode list.
    """

    n_photons: int

    def permutation_weights(self, input_modes: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
        """Permutations ``(P, k)`` and their coefficients ``(P,)``."""
        raise NotImplementedError


def _stabilizer_groups(input_modes: Sequence[int]) -> list[list[int]]:
    groups: dict[int, list[int]] = {}
    for photon, mode in enumerate(input_modes):
        groups.setdefault(mode, []).append(photon)
    return list(groups.values())


@dataclass(frozen=True)
class Mixture(DistinguishabilityModel):
    """Photon ``i`` is in a shared internal state with probability ``x_i``.

    Otherwise it is in a state orthogonal to every other photon.  Pairwise
    overlaps are ``x_i * x_j`` and the weight of the fully indistinguishable
    component is ``prod(x)``.
    """

    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        for v in w:
            if not 0.0 <= v <= 1.0:
                raise InputError(f"mixture weight {v} outside [0, 1]")
        object.__setattr__(self, "weights", w)

    @property
    def n_photons(self) -> int:
        return len(self.weights)

    @property
    def c1(self) -> float:
        return float(np.prod(self.weights))

    def pairwise_overlaps(self) -> np.ndarray:
        x = np.asarray(self.weights)
        m = np.outer(x, x)
        np.fill_diagonal(m, 1.0)
        return m

    def subset_weights(self):
        """Yield ``(T, w_T)`` for every subset T of mutually identical photons."""
        k = self.n_photons
        x = self.weights
        for mask in range(1 << k):
            w = 1.0
            for i in range(k):
                w *= x[i] if (mask >> i) & 1 else 1.0 - x[i]
            if w > 0.0:
                yield tuple(i for i in range(k) if (mask >> i) & 1), w

    def permutation_weights(self, input_modes):
        return _mixture_weights(self.weights, tuple(input_modes))


@functools.lru_cache(maxsize=256)
def _mixture_weights(weights: tuple[float, ...], input_modes: tuple[int, ...]):
    k = len(weights)
    coeffs: dict[tuple[int, ...], float] = {}
    model = Mixture(weights)
    for subset, w in model.subset_weights():
        # identical photons sharing an input mode contribute a norm of count!
        norm = 1
        for group in _stabilizer_groups(input_modes):
            norm *= math.factorial(sum(1 for p in group if p in subset))
        for image in itertools.permutations(subset):
            rho = list(range(k))
            for src, dst in zip(subset, image):
                rho[src] = dst
            key = tuple(rho)
            coeffs[key] = coeffs.get(key, 0.0) + w / norm
    perms = np.array(list(coeffs.keys()), dtype=np.intp).reshape(len(coeffs), k)
    return perms, np.array(list(coeffs.values()))


@dataclass(frozen=True, eq=False)
class Gram(DistinguishabilityModel):
    """Explicit overlap matrix ``S_ij`` of the photons' internal states.

    Must be Hermitian, positive semidefinite and have unit diagonal.  Real
    matrices are the supported case; complex overlaps are accepted but the
    phase convention is experimental.
    """

    overlaps: np.ndarray

    def __post_init__(self):
        s = np.array(self.overlaps, dtype=np.complex128)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise InputError(f"Gram matrix must be square, got shape {s.shape}")
        if not np.allclose(s, s.conj().T, atol=1e-12):
            raise InputError("Gram matrix is not Hermitian")
        if not np.allclose(np.diag(s), 1.0, atol=1e-12):
            raise InputError("Gram matrix must have unit diagonal")
        if np.any(np.abs(s) > 1.0 + 1e-12):
            raise InputError("Gram matrix entries must satisfy |S_ij| <= 1")
        if np.linalg.eigvalsh(s).min() < -1e-10:
            raise InputError("Gram matrix is not positive semidefinite")
        if np.any(np.abs(s.imag) > 1e-15):
            warnings.warn("complex overlap matrices are experimental", stacklevel=3)
        else:
            s = s.real.astype(np.complex128)
        s.setflags(write=False)
        object.__setattr__(self, "overlaps", s)

    @property
    def n_photons(self) -> int:
        return self.overlaps.shape[0]

    @classmethod
    def identical(cls, k: int) -> "Gram":
        return cls(np.ones((k, k)))

    @classmethod
    def distinguishable(cls, k: int) -> "Gram":
        return cls(np.eye(k))

    def permutation_weights(self, input_modes):
        k = self.n_photons
        if k > MAX_GRAM_PHOTONS:
            raise InputError(f"Gram evaluation limited to k <= {MAX_GRAM_PHOTONS}, got {k}")
        s = self.overlaps
        perms = np.array(list(itertools.permutations(range(k))), dtype=np.intp).reshape(-1, k)
        cols = np.arange(k)
        coeffs = np.prod(s[cols, perms], axis=1)
        # normalization of the input state: permutations inside each occupied mode
        groups = _stabilizer_groups(input_modes)
        stab = np.ones(len(perms), dtype=bool)
        for group in groups:
            g = np.array(group)
            stab &= np.isin(perms[:, g], g).all(axis=1)
        norm = coeffs[stab].sum().real
        return perms, coeffs / norm


def _check_model(model: DistinguishabilityModel, k: int) -> None:
    if model.n_photons != k:
        raise InputError(f"model describes {model.n_photons} photons, state has {k}")


# ---------------------------------------------------------- probabilities


def prob_indistinguishable(unitary, input_state: FockState, output_state: FockState) -> float:
    """Transition probability for identical photons, |perm S|^2 / (prod mu! prod nu!)."""
    k = input_state.n_photons
    if k > MAX_INDIST_PHOTONS:
        raise InputError(f"limited to k <= {MAX_INDIST_PHOTONS} photons, got {k}")
    s = scattering_submatrix(unitary, input_state, output_state)
    amp = permanent_fast(s)
    denom = input_state.multiplicity_factor() * output_state.multiplicity_factor()
    return float(abs(amp) ** 2 / denom)


def prob_distinguishable(unitary, input_state: FockState, output_state: FockState) -> float:
    """Transition probability for mutually orthogonal photons, perm(|S|^2) / prod nu!.

    Photons sharing an input mode are still treated as distinct particles,
    so no input multiplicity factor appears.
    """
    s = scattering_submatrix(unitary, input_state, output_state)
    value = permanent_fast(np.abs(s) ** 2).real
    return float(value / output_state.multiplicity_factor())


def prob_partial(unitary, input_state: FockState, output_state: FockState, model: DistinguishabilityModel) -> float:
    """Transition probability for partially distinguishable photons."""
    if input_state.n_photons != output_state.n_photons:
        raise InputError("photon number mismatch between input and output")
    return float(output_distribution(unitary, input_state, [output_state], model)[0])


def output_distribution(unitary, input_state: FockState, outputs: Sequence[FockState],
                        model: DistinguishabilityModel | None = None) -> np.ndarray:
    """Probabilities of each state in ``outputs`` for one input.

    ``model=None`` means identical photons.
    """
    outputs = list(outputs)
    if not outputs:
        return np.zeros(0)
    k = input_state.n_photons
    u = np.asarray(unitary)
    for h in outputs:
        if h.n_photons != k:
            raise InputError("photon number mismatch between input and output")
    if k == 0:
        return np.ones(len(outputs))
    if model is not None:
        _check_model(model, k)
    rows = np.array([h.mode_list for h in outputs], dtype=np.intp) - 1
    cols = np.array(input_state.mode_list, dtype=np.intp) - 1
    s = u[rows[:, :, None], cols[None, None, :]]  # (B, k, k)
    nu = np.array([h.multiplicity_factor() for h in outputs], dtype=float)
    if model is None:
        perms = permanent_batch(s)
        return np.abs(perms) ** 2 / (nu * input_state.multiplicity_factor())
    perm_idx, coeffs = model.permutation_weights(input_state.mode_list)
    permuted = np.conj(s[:, :, perm_idx])  # (B, k, P, k)
    terms = s[:, None, :, :] * np.moveaxis(permuted, 2, 1)
    values = permanent_batch(terms) @ coeffs
    return values.real / nu


# --------------------------------------------------------------- fringes


def _pair_occupations(state: FockState) -> tuple[list[int], list[int]]:
    occ = state.occupations
    n_modes = len(occ)
    inputs = [occ[2 * m] + occ[2 * m + 1] for m in range(n_modes // 2)]
    # output pairs (2,3), (4,5), ..., (N,1)
    outputs = [occ[2 * m + 1] + occ[(2 * m + 2) % n_modes] for m in range(n_modes // 2)]
    return inputs, outputs


def _even_count(state: FockState) -> int:
    return sum(state.occupations[1::2])


def fringe_sign(input_state: FockState, output_state: FockState) -> int | None:
    """+1 or -1 for the cos(alpha1) term, or None when no fringe exists.

    A fringe requires one photon in every first-layer input pair (2m-1, 2m)
    and one photon in every second-layer output pair (2m, 2m+1), (N, 1).
    The sign is (-1)**(n + p + q) with p, q the occupied even input and
    output modes.
    """
    n_modes = input_state.n_modes
    if n_modes % 2 or output_state.n_modes != n_modes:
        return None
    n = n_modes // 2
    if input_state.n_photons != n or output_state.n_photons != n:
        return None
    in_pairs, _ = _pair_occupations(input_state)
    _, out_pairs = _pair_occupations(output_state)
    if any(v != 1 for v in in_pairs) or any(v != 1 for v in out_pairs):
        return None
    return -1 if (n + _even_count(input_state) + _even_count(output_state)) % 2 else 1


@dataclass(frozen=True)
class FringePrediction:
    """P(alpha1) = baseline * (1 + sign * visibility * cos alpha1)."""

    baseline: float
    sign: int
    visibility: float

    def __call__(self, alpha):
        return self.baseline * (1.0 + self.sign * self.visibility * np.cos(alpha))


def closed_form_fringe(n: int, input_state: FockState, output_state: FockState, c1: float = 1.0) -> FringePrediction:
    """Analytic fringe of an n-photon input/output pair on the 2n-mode circuit."""
    if not 0.0 <= c1 <= 1.0:
        raise InputError(f"visibility {c1} outside [0, 1]")
    if input_state.n_modes != 2 * n:
        raise InputError(f"states live on {input_state.n_modes} modes, expected {2 * n}")
    sign = fringe_sign(input_state, output_state)
    if sign is None:
        raise ClassificationError(
            f"{input_state} -> {output_state} violates the one-photon-per-pair rule"
        )
    return FringePrediction(1.0 / 2 ** (2 * n - 1), sign, float(c1))


def fringe_outputs(input_state: FockState) -> tuple[list[FockState], list[FockState]]:
    """Collision-free outputs split into (plus, minus) fringe signs."""
    plus, minus = [], []
    for h in enumerate_states(input_state.n_modes, input_state.n_photons, collision_free=True):
        sign = fringe_sign(input_state, h)
        if sign == 1:
            plus.append(h)
        elif sign == -1:
            minus.append(h)
    return plus, minus


def scan_fringe(spec: CircuitSpec, input_state: FockState, outputs: Sequence[FockState],
                alphas, model: DistinguishabilityModel | None = None):
    """Total plus-set and minus-set probabilities while sweeping arm 1.

    ``alphas`` are added to the phase of arm 1.  Outputs are split by
    :func:`fringe_sign`; when none of them carries a fringe (fewer photons
    than n), the split falls back to the parity of occupied even output
    modes so both traces stay defined.
    """
    from .analysis import FringeDataset

    outputs = list(outputs)
    if not outputs:
        raise InputError("scan needs at least one output state")
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    signs = [fringe_sign(input_state, h) for h in outputs]
    if all(s is None for s in signs):
        warnings.warn(
            "no output carries an n-photon fringe: internal phases cannot affect "
            "fewer than n photons, traces will be flat",
            stacklevel=2,
        )
        signs = [1 if _even_count(h) % 2 == 0 else -1 for h in outputs]
    plus_mask = np.array([s == 1 for s in signs])
    minus_mask = np.array([s == -1 for s in signs])
    p_plus = np.empty(len(alphas))
    p_minus = np.empty(len(alphas))
    base = list(spec.phases)
    for i, alpha in enumerate(alphas):
        phases = [base[0] + alpha] + base[1:]
        u = build_unitary(CircuitSpec(spec.n, phases, spec.transmissivities))
        probs = output_distribution(u, input_state, outputs, model)
        p_plus[i] = probs[plus_mask].sum()
        p_minus[i] = probs[minus_mask].sum()
    return FringeDataset.simulated(alphas, p_plus, p_minus)
