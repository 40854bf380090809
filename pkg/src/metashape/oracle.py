"""Brute-force reference model on a discrete time grid.

Each photon is sampled as a vector over (output mode, time bin) after the mode
unitary acts on its input index.  The N-photon amplitude is the symmetrized
product of these vectors, evaluated block by block: one ``B**N`` array per
ordered tuple of output modes.  Probabilities and conditioned shapes follow by
direct summation and slicing with the midpoint rule.  Nothing here reuses the
symbolic term expansion of :mod:`metashape.interference`.
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import PatternMismatch, SizeLimit, ZeroNorm
from .shapes import ShapeKind, eval_shape

MAX_PHOTONS = 3
MAX_CELLS = 1024
COVERAGE_LENGTHS = 8.0
_ZERO = 1e-14


class CoverageWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TimeGrid:
    t_min: float
    t_max: float
    bins: int

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise ValueError(f"t_min {self.t_min} must be below t_max {self.t_max}")
        if self.bins < 8:
            raise ValueError(f"at least 8 bins required, got {self.bins}")

    @property
    def dt(self):
        return (self.t_max - self.t_min) / self.bins

    @property
    def centers(self):
        return self.t_min + (np.arange(self.bins) + 0.5) * self.dt

    def nearest(self, t):
        """Index of the bin containing ``t`` (clipped to the grid)."""
        return int(np.clip(math.floor((t - self.t_min) / self.dt), 0, self.bins - 1))

    def snap(self, t):
        return float(self.centers[self.nearest(t)])

    def refined(self):
        return TimeGrid(self.t_min, self.t_max, 2 * self.bins)

    def check_coverage(self, shapes):
        """Warn when some shape's significant range sticks out of the grid."""
        for s in shapes:
            reach = COVERAGE_LENGTHS / s.gamma
            if s.kind is ShapeKind.EXP_DECAY:
                lo, hi = s.center, s.center + reach
            elif s.kind is ShapeKind.EXP_RISE:
                lo, hi = s.center - reach, s.center
            else:
                lo, hi = s.center - reach, s.center + reach
            if lo < self.t_min or hi > self.t_max:
                warnings.warn(
                    f"grid [{self.t_min:g}, {self.t_max:g}] covers less than "
                    f"{COVERAGE_LENGTHS:g} decay lengths of {s.kind.value}(gamma={s.gamma:g})",
                    CoverageWarning,
                    stacklevel=2,
                )


class AmplitudeTensor:
    """Symmetrized N-photon amplitude over (mode, bin)**N, built lazily per block.

    ``factors[p]`` is photon ``p`` after the network, shape ``(M, B)``.  The
    block for ordered output modes ``(m_1, ..., m_N)`` is

        (1/sqrt(N!)) * sum_perm prod_i factors[perm[i]][m_i, b_i]

    so summing ``|block|**2 * dt**N`` over every ordered tuple gives the norm.
    """

    def __init__(self, factors, grid):
        self.factors = np.asarray(factors, dtype=complex)
        self.grid = grid
        self.n_photons, self.n_modes, _ = self.factors.shape
        self._cache = {}

    def block(self, modes):
        modes = tuple(int(m) for m in modes)
        if len(modes) != self.n_photons:
            raise PatternMismatch(f"need {self.n_photons} modes, got {modes}")
        if modes not in self._cache:
            if len(self._cache) >= 4:
                self._cache.pop(next(iter(self._cache)))
            self._cache[modes] = self._build(modes)
        return self._cache[modes]

    def _build(self, modes):
        n = self.n_photons
        out = np.zeros((self.grid.bins,) * n, dtype=complex)
        for perm in itertools.permutations(range(n)):
            vecs = [self.factors[perm[i], modes[i]] for i in range(n)]
            out += reduce(np.multiply.outer, vecs)
        return out / math.sqrt(math.factorial(n))

    def mode_tuples(self):
        return itertools.product(range(self.n_modes), repeat=self.n_photons)

    def norm(self):
        return float(sum(self.probabilities().values()))

    def probabilities(self):
        """Occupation pattern -> probability, by direct summation of |amplitude|**2."""
        weight = self.grid.dt ** self.n_photons
        out = {}
        for modes in itertools.combinations_with_replacement(range(self.n_modes), self.n_photons):
            counts = Counter(modes)
            orderings = math.factorial(self.n_photons) // math.prod(
                math.factorial(k) for k in counts.values()
            )
            b = self._build(modes)
            occ = tuple(counts.get(m, 0) for m in range(self.n_modes))
            out[occ] = orderings * float(np.sum(np.abs(b) ** 2)) * weight
        return out

    def dump(self, path):
        np.savez(path, factors=self.factors, grid=np.array([self.grid.t_min, self.grid.t_max,
                                                            self.grid.bins]))


def oracle_expand(inputs, u, grid):
    """Sample every photon on ``grid`` and push its mode index through ``u``."""
    n = len(inputs)
    m = u.dim
    if n > MAX_PHOTONS:
        raise SizeLimit(f"oracle handles at most {MAX_PHOTONS} photons, got {n}")
    if m * grid.bins > MAX_CELLS:
        raise SizeLimit(f"{m} modes x {grid.bins} bins exceeds {MAX_CELLS} cells")
    grid.check_coverage([p.shape for p in inputs])
    t = grid.centers
    mat = np.asarray(u.matrix)
    factors = np.array(
        [np.outer(mat[:, p.mode], eval_shape(p.shape, t)) for p in inputs]
    )
    return AmplitudeTensor(factors, grid)


def oracle_probabilities(tensor):
    return tensor.probabilities()


def oracle_condition(tensor, occupation, detections, remaining_mode):
    """Remaining photon's sampled amplitude after detections at nearest bins.

    ``detections`` is a list of ``(mode, time)``.  The result is normalized so
    that ``sum |psi|**2 * dt = 1``.
    """
    occupation = tuple(occupation)
    modes = [int(m) for m, _ in detections] + [int(remaining_mode)]
    counts = tuple(modes.count(k) for k in range(tensor.n_modes))
    if len(modes) != tensor.n_photons or counts != occupation:
        raise PatternMismatch(f"detections {detections} do not fit occupation {occupation}")
    block = tensor.block(modes)
    index = tuple(tensor.grid.nearest(t) for _, t in detections)
    psi = np.array(block[index])
    norm2 = float(np.sum(np.abs(psi) ** 2)) * tensor.grid.dt
    if not norm2 > _ZERO:
        raise ZeroNorm("oracle amplitude vanishes at these detection bins")
    return psi / math.sqrt(norm2)
