"""Multi-photon interference through a mode unitary.

An N-photon product input is expanded into Fock components,
one per photon-number pattern ``(m_1, ..., m_M)``.  Each component keeps its
wavefunction symbolically as a list of :class:`Term` objects: a complex
coefficient and an assignment of input shapes to the output photon slots.
Slots are ordered by output mode and, inside a multiply occupied mode, by
position.  The wavefunction of a component is

    F(tau_slot_0, ..., tau_slot_{N-1}) = sum_terms coeff * prod_s f_{slot_shapes[s]}(tau_s)

normalized so that the integral of |F|^2 over all slot times is the component
probability.  Because the terms are symbolic, conditioning on exact detection
times later on stays exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DimMismatch, DuplicateInputMode, InconsistentInputs
from .network import ModeUnitary
from .shapes import WavepacketShape

MAX_PHOTONS = 4


@dataclass(frozen=True)
class PhotonInput:
    mode: int
    shape: WavepacketShape

    def to_dict(self):
        return {"mode": self.mode, "shape": self.shape.to_dict()}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["mode"]), WavepacketShape.from_dict(data["shape"]))


@dataclass(frozen=True)
class Term:
    coeff: complex
    slot_shapes: tuple


@dataclass(frozen=True)
class OutputComponent:
    """One photon-number pattern with its symbolic wavefunction."""

    occupation: tuple
    terms: tuple
    probability: float | None = None

    @property
    def n_photons(self):
        return sum(self.occupation)

    @property
    def slot_modes(self):
        """Output mode of every slot, in slot order."""
        return tuple(m for m, count in enumerate(self.occupation) for _ in range(count))

    def term_arrays(self):
        """Coefficients ``(T,)`` and slot-shape indices ``(T, N)`` as arrays."""
        coeffs = np.array([t.coeff for t in self.terms], dtype=complex)
        slots = np.array([t.slot_shapes for t in self.terms], dtype=int).reshape(
            len(self.terms), self.n_photons
        )
        return coeffs, slots

    def to_dict(self):
        return {
            "occupation": list(self.occupation),
            "probability": self.probability,
            "terms": len(self.terms),
        }


def occupations(n_photons, n_modes):
    """All photon-number patterns, in lexicographically descending order."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n_modes), n_photons):
        occ = [0] * n_modes
        for m in combo:
            occ[m] += 1
        out.append(tuple(occ))
    return out


def _validate_inputs(inputs, dim):
    n = len(inputs)
    if not 1 <= n <= MAX_PHOTONS:
        raise InconsistentInputs(f"between 1 and {MAX_PHOTONS} photons supported, got {n}")
    modes = [p.mode for p in inputs]
    if len(set(modes)) != n:
        raise DuplicateInputMode(f"one photon per input mode, got modes {modes}")
    if any(not 0 <= m < dim for m in modes):
        raise DimMismatch(f"input modes {modes} outside a {dim}-mode network")


@lru_cache(maxsize=256)
def _expand(matrix_bytes, dim, modes):
    s = np.frombuffer(matrix_bytes, dtype=complex).reshape(dim, dim)
    n = len(modes)
    grouped = {occ: [] for occ in occupations(n, dim)}
    for route in itertools.product(range(dim), repeat=n):
        occ = [0] * dim
        for m in route:
            occ[m] += 1
        occ = tuple(occ)
        coeff = complex(np.prod([s[route[p], modes[p]] for p in range(n)]))
        coeff /= math.sqrt(math.prod(math.factorial(k) for k in occ))
        # photons per output mode in canonical (ascending) order, then every
        # reordering within each mode: the symmetrization over slot times
        per_mode = [[p for p in range(n) if route[p] == m] for m in range(dim)]
        for perms in itertools.product(*(itertools.permutations(ps) for ps in per_mode)):
            slots = tuple(p for group in perms for p in group)
            grouped[occ].append(Term(coeff, slots))
    return tuple(OutputComponent(occ, tuple(terms)) for occ, terms in grouped.items())


def expand_output(inputs: Sequence[PhotonInput], u: ModeUnitary):
    """Expand a product of single photons through ``u`` into Fock components.

    Slot shapes refer to positions in ``inputs``.  Returns one component per
    occupation pattern, ``C(N + M - 1, N)`` in total.
    """
    _validate_inputs(inputs, u.dim)
    modes = tuple(p.mode for p in inputs)
    return list(_expand(u.matrix.tobytes(), u.dim, modes))


def find_component(components, occupation):
    occupation = tuple(occupation)
    for c in components:
        if c.occupation == occupation:
            return c
    raise KeyError(f"no component with occupation {occupation}")


def _slot_gram_products(slots_a, slots_b, g):
    prod = np.ones((len(slots_a), len(slots_b)), dtype=complex)
    for s in range(slots_a.shape[1]):
        prod *= g[np.ix_(slots_a[:, s], slots_b[:, s])]
    return prod


def component_probability(c: OutputComponent, inputs, g) -> float:
    """Probability of the Fock component, given the Gram matrix of the inputs."""
    g = np.asarray(g)
    if g.shape != (len(inputs), len(inputs)) or c.n_photons != len(inputs):
        raise InconsistentInputs(
            f"component has {c.n_photons} slots, Gram matrix is {g.shape}, "
            f"{len(inputs)} inputs"
        )
    if not c.terms:
        return 0.0
    coeffs, slots = c.term_arrays()
    value = np.conj(coeffs) @ _slot_gram_products(slots, slots, g) @ coeffs
    if abs(value.imag) > 1e-10 or not -1e-9 <= value.real <= 1 + 1e-9:
        raise InconsistentInputs(f"non-physical component probability {value}")
    return float(min(1.0, max(0.0, value.real)))


def with_probabilities(components, inputs, g):
    return [replace(c, probability=component_probability(c, inputs, g)) for c in components]


def total_probability(components) -> float:
    if any(c.probability is None for c in components):
        raise ValueError("component probabilities have not been computed")
    return float(sum(c.probability for c in components))


def permanent(a):
    """Permanent of a square matrix by direct expansion over permutations."""
    a = np.asarray(a)
    n = a.shape[0]
    return sum(
        np.prod([a[i, p[i]] for i in range(n)]) for p in itertools.permutations(range(n))
    )


def distinguishable_probability(u, input_modes, occupation):
    """Pattern probability for fully distinguishable photons.

    Equals ``perm(|U_sub|^2) / prod(m_k!)`` with ``U_sub`` built from the
    occupied output rows (repeated by occupation) and the input columns.
    """
    rows = [m for m, k in enumerate(occupation) for _ in range(k)]
    sub = np.abs(np.asarray(u.matrix)[np.ix_(rows, list(input_modes))]) ** 2
    return float(np.real(permanent(sub))) / math.prod(math.factorial(k) for k in occupation)
