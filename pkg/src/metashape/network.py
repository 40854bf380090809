"""Linear-optical mode unitaries: metasurface four-mode splitter, 50/50 splitter,
embeddings and compositions.

Internal mode indices are 0-based: the metasurface ports a1..a4 / b1..b4 are
modes 0..3.  Creation operators transform as ``a_n^dag -> sum_m S[m, n] b_m^dag``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, DomainError

MAX_MODES = 8
UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class ModeUnitary:
    matrix: np.ndarray = field(compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimMismatch(f"mode unitary must be square, got shape {m.shape}")
        if not 1 <= m.shape[0] <= MAX_MODES:
            raise DomainError(f"mode count must be at most {MAX_MODES}, got {m.shape[0]}")
        err = unitarity_error(m)
        if err > UNITARITY_TOL:
            raise DomainError(f"matrix is not unitary (max |S S^dag - I| = {err:.2e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __getitem__(self, idx):
        return self.matrix[idx]

    def dagger(self):
        return ModeUnitary(self.matrix.conj().T)

    def to_json(self):
        """Nested ``[re, im]`` pairs, row-major."""
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]

    @classmethod
    def from_json(cls, rows):
        return cls(np.array([[complex(re, im) for re, im in row] for row in rows]))


def unitarity_error(m):
    m = np.asarray(m)
    return float(np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))))


def identity(dim):
    return ModeUnitary(np.eye(dim))


def metasurface_unitary(s_t):
    """Four-mode beam splitter of the phase-gradient metasurface.

    ``s_t`` is the co-polarization conversion coefficient; the
    cross-polarization coefficient is ``s_r = sqrt(1 - s_t**2)``.
    """
    s_t = float(s_t)
    if not 0.0 <= s_t <= 1.0:
        raise DomainError(f"s_t must lie in [0, 1], got {s_t}")
    s_r = math.sqrt(max(0.0, 1.0 - s_t * s_t))
    h = 1 / math.sqrt(2)
    return ModeUnitary(np.array([
        [s_t, 1j * h * s_r, -h * s_r, 0],
        [1j * s_r, h * s_t, 1j * h * s_t, 0],
        [0, h * s_t, -1j * h * s_t, 1j * s_r],
        [0, 1j * h * s_r, h * s_r, s_t],
    ]))


def balanced_splitter():
    """Symmetric 50/50 splitter ``[[1, i], [i, 1]] / sqrt(2)``."""
    return ModeUnitary(np.array([[1, 1j], [1j, 1]]) / math.sqrt(2))


def embed(u, target_modes, total_dim):
    """Act with ``u`` on ``target_modes`` of a ``total_dim``-mode space.

    ``target_modes[i]`` is the mode that plays the role of ``u``'s mode ``i``;
    all other modes are left untouched.
    """
    target_modes = [int(m) for m in target_modes]
    if len(target_modes) != u.dim:
        raise IndexError(f"need {u.dim} target modes, got {len(target_modes)}")
    if len(set(target_modes)) != len(target_modes):
        raise IndexError(f"target modes must be distinct: {target_modes}")
    if any(not 0 <= m < total_dim for m in target_modes):
        raise IndexError(f"target modes {target_modes} out of range for {total_dim} modes")
    out = np.eye(total_dim, dtype=complex)
    out[np.ix_(target_modes, target_modes)] = u.matrix
    return ModeUnitary(out)


def compose(second, first):
    """Network ``first`` followed by ``second`` (matrix product ``second @ first``)."""
    if second.dim != first.dim:
        raise DimMismatch(f"cannot compose {second.dim}-mode and {first.dim}-mode networks")
    return ModeUnitary(second.matrix @ first.matrix)
