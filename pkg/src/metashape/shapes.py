"""Single-photon temporal amplitudes and their overlap integrals.

Every supported family is written in one exponential form

    f(tau) = exp(log_amp - alpha * (tau - c)**2 - kappa * tau),   lo <= tau <= hi

so the overlap of any two shapes is the integral of a single complex Gaussian
(or exponential) over an interval.  That integral has a closed form in terms of
the scaled complementary error function, which keeps all overlaps exact to
machine precision.  Adaptive quadrature is kept as an independent check.

Times are in units of 1/Gamma_0, rates and detunings in units of Gamma_0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureNotConverged, ZeroNorm

__all__ = [
    "ShapeKind",
    "WavepacketShape",
    "ShapeSuperposition",
    "exp_decay",
    "exp_rise",
    "gaussian",
    "eval_shape",
    "overlap",
    "overlap_quad",
    "gram",
    "check_gram",
    "normalize_superposition",
    "shift",
    "support_window",
]

# Amplitude depth (e-folds) beyond which a shape is treated as zero.
_WINDOW_DEPTH = 40.0


class ShapeKind(str, enum.Enum):
    EXP_DECAY = "ExpDecay"
    EXP_RISE = "ExpRise"
    GAUSSIAN = "Gaussian"


@dataclass(frozen=True)
class WavepacketShape:
    """A normalized single-photon temporal amplitude.

    Parameters
    ----------
    kind : ShapeKind
        Profile family.
    gamma : float
        Linewidth, in units of the reference linewidth.
    center : float
        Onset time for ``ExpDecay``, cutoff time for ``ExpRise`` and peak time
        for ``Gaussian``.
    detuning : float
        Carrier offset from the reference frequency.
    """

    kind: ShapeKind
    gamma: float
    center: float = 0.0
    detuning: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ShapeKind(self.kind))
        for name in ("gamma", "center", "detuning"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.gamma <= 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")

    def __call__(self, tau):
        return eval_shape(self, tau)

    def exponent_form(self):
        """Return ``(log_amp, alpha, c, kappa, lo, hi)`` of the exponential form."""
        g, w, t0 = self.gamma, self.detuning, self.center
        if self.kind is ShapeKind.EXP_DECAY:
            kappa = complex(g / 2, w)
            return 0.5 * math.log(g) + kappa * t0, 0.0, 0.0, kappa, t0, math.inf
        if self.kind is ShapeKind.EXP_RISE:
            kappa = complex(-g / 2, w)
            return complex(0.5 * math.log(g) - g * t0 / 2), 0.0, 0.0, kappa, -math.inf, t0
        log_amp = complex(0.5 * math.log(g) - 0.25 * math.log(math.pi))
        return log_amp, g * g / 2, t0, complex(0.0, w), -math.inf, math.inf

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "gamma": self.gamma,
            "center": self.center,
            "detuning": self.detuning,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            kind=ShapeKind(data["kind"]),
            gamma=data["gamma"],
            center=data.get("center", 0.0),
            detuning=data.get("detuning", 0.0),
        )


def exp_decay(gamma, onset=0.0, detuning=0.0):
    return WavepacketShape(ShapeKind.EXP_DECAY, gamma, onset, detuning)


def exp_rise(gamma, cutoff=0.0, detuning=0.0):
    return WavepacketShape(ShapeKind.EXP_RISE, gamma, cutoff, detuning)


def gaussian(gamma, center=0.0, detuning=0.0):
    return WavepacketShape(ShapeKind.GAUSSIAN, gamma, center, detuning)


def shift(shape, delay):
    """Move a shape's reference time (onset, cutoff or peak) by ``delay``."""
    return replace(shape, center=shape.center + delay)


def eval_shape(shape, tau):
    """Evaluate the complex amplitude ``f(tau)``; accepts scalars or arrays."""
    log_amp, alpha, c, kappa, lo, hi = shape.exponent_form()
    tau_arr = np.asarray(tau, dtype=float)
    inside = (tau_arr >= lo) & (tau_arr <= hi)
    out = np.zeros(tau_arr.shape, dtype=complex)
    t = tau_arr[inside]
    out[inside] = np.exp(log_amp - alpha * (t - c) ** 2 - kappa * t)
    if out.ndim == 0:
        return complex(out)
    return out


def support_window(shape, depth=_WINDOW_DEPTH):
    """Interval outside which ``|f|`` is below ``exp(-depth)`` of its peak."""
    g, t0 = shape.gamma, shape.center
    if shape.kind is ShapeKind.EXP_DECAY:
        return t0, t0 + 2 * depth / g
    if shape.kind is ShapeKind.EXP_RISE:
        return t0 - 2 * depth / g, t0
    half = math.sqrt(2 * depth) / g
    return t0 - half, t0 + half


def _exp_erfc(log_pre, log_edge, z):
    # exp(log_pre) * erfc(z), where log_edge = log_pre - z**2 is passed in
    # separately so the large cancelling exponents never get formed.
    if z.real >= 0:
        return np.exp(log_edge) * special.erfcx(z)
    return 2 * np.exp(log_pre) - np.exp(log_edge) * special.erfcx(-z)


def _interval_integral(log_amp, alpha, c, k, lo, hi):
    """Integral of exp(log_amp - alpha (tau - c)^2 - k tau) over [lo, hi]."""
    if not lo < hi:
        return 0j
    if alpha == 0.0:
        if math.isinf(hi):
            if k.real <= 0:
                raise DomainError("divergent exponential overlap")
            return np.exp(log_amp - k * lo) / k
        if math.isinf(lo):
            if k.real >= 0:
                raise DomainError("divergent exponential overlap")
            return -np.exp(log_amp - k * hi) / k
        width = hi - lo
        if abs(k) * width < 1e-12:
            return np.exp(log_amp - k * lo) * width
        # anchor at the end where the integrand is largest
        if k.real >= 0:
            return np.exp(log_amp - k * lo) * -np.expm1(-k * width) / k
        return np.exp(log_amp - k * hi) * np.expm1(k * width) / k

    sa = math.sqrt(alpha)
    c_shift = c - k / (2 * alpha)
    log_pre = log_amp - k * c + k * k / (4 * alpha)
    scale = math.sqrt(math.pi) / (2 * sa)

    def edge(x):
        return log_amp - alpha * (x - c) ** 2 - k * x

    if math.isinf(lo) and math.isinf(hi):
        return 2 * scale * np.exp(log_pre)
    if math.isinf(hi):
        return scale * _exp_erfc(log_pre, edge(lo), sa * (lo - c_shift))
    if math.isinf(lo):
        return scale * _exp_erfc(log_pre, edge(hi), -sa * (hi - c_shift))
    z_lo, z_hi = sa * (lo - c_shift), sa * (hi - c_shift)
    if (z_lo + z_hi).real >= 0:
        return scale * (
            _exp_erfc(log_pre, edge(lo), z_lo) - _exp_erfc(log_pre, edge(hi), z_hi)
        )
    return scale * (
        _exp_erfc(log_pre, edge(hi), -z_hi) - _exp_erfc(log_pre, edge(lo), -z_lo)
    )


def overlap(f, g):
    """Closed-form inner product ``<f|g> = integral of conj(f) g``."""
    la, aa, ca, ka, loa, hia = f.exponent_form()
    lb, ab, cb, kb, lob, hib = g.exponent_form()
    alpha = aa + ab
    if alpha > 0:
        c = (aa * ca + ab * cb) / alpha
        rest = aa * ca * ca + ab * cb * cb - alpha * c * c
    else:
        c, rest = 0.0, 0.0
    log_amp = np.conj(la) + lb - rest
    k = np.conj(ka) + kb
    return complex(_interval_integral(log_amp, alpha, c, k, max(loa, lob), min(hia, hib)))


def overlap_quad(f, g, rtol=1e-9, max_pieces=4000):
    """Inner product by adaptive Gauss-Kronrod quadrature.

    Independent of :func:`overlap`; used to validate the closed forms.  The
    integration window is the intersection of both shapes' support windows,
    split at discontinuities and chopped into pieces short enough that the
    detuning beat is resolved.
    """
    lo = max(support_window(f)[0], support_window(g)[0])
    hi = min(support_window(f)[1], support_window(g)[1])
    if not lo < hi:
        return 0j
    beat = abs(f.detuning - g.detuning) + 1.0
    n_pieces = int(min(max_pieces, max(1, math.ceil((hi - lo) * beat / (4 * math.pi)))))
    edges = np.linspace(lo, hi, n_pieces + 1)
    breaks = [s.center for s in (f, g) if lo < s.center < hi]

    def integrand(t):
        return np.conj(f(t)) * g(t)

    total = 0j
    atol = 1e-10 / n_pieces
    for a, b in zip(edges[:-1], edges[1:]):
        pts = [p for p in breaks if a < p < b] or None
        parts = []
        for part in (np.real, np.imag):
            res = integrate.quad(
                lambda t: part(integrand(t)), a, b, points=pts,
                epsabs=atol, epsrel=rtol / 10, limit=200, full_output=1,
            )
            if len(res) > 3:
                raise QuadratureNotConverged(res[3])
            parts.append(res[0])
        total += complex(parts[0], parts[1])
    return total


def gram(shapes: Sequence[WavepacketShape]) -> np.ndarray:
    """Matrix of pairwise overlaps ``G[m, n] = <f_m|f_n>``."""
    n = len(shapes)
    g = np.eye(n, dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            g[i, j] = overlap(shapes[i], shapes[j])
            g[j, i] = np.conj(g[i, j])
    return g


def check_gram(g, atol=1e-10):
    """Raise ``DomainError`` unless ``g`` is Hermitian, unit-diagonal and PSD."""
    g = np.asarray(g)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DomainError("Gram matrix must be square")
    if not np.allclose(g, g.conj().T, atol=atol, rtol=0):
        raise DomainError("Gram matrix is not Hermitian")
    if not np.allclose(np.diag(g), 1.0, atol=atol, rtol=0):
        raise DomainError("Gram matrix diagonal is not unity")
    if np.linalg.eigvalsh(g).min() < -atol:
        raise DomainError("Gram matrix is not positive semidefinite")


@dataclass(frozen=True)
class ShapeSuperposition:
    """Coherent superposition ``sum_n coeffs[n] * basis[n](tau)``."""

    basis: tuple
    coeffs: np.ndarray = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != (len(self.basis),):
            raise DomainError("one coefficient per basis shape is required")
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = np.zeros(tau.shape, dtype=complex)
        for c, shape in zip(self.coeffs, self.basis):
            out = out + c * eval_shape(shape, tau)
        return out

    def norm2(self, g=None):
        g = gram(self.basis) if g is None else g
        return float(np.real(np.conj(self.coeffs) @ g @ self.coeffs))


def normalize_superposition(s, g, floor=1e-14):
    """Rescale ``s`` so that ``xi^H G xi = 1``; raises ``ZeroNorm`` if it vanishes."""
    norm2 = s.norm2(g)
    if not norm2 > floor:
        raise ZeroNorm(f"superposition norm^2 {norm2:.3e} is below {floor:g}")
    return ShapeSuperposition(s.basis, s.coeffs / math.sqrt(norm2))
