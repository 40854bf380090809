"""Conditioning a Fock component on time-resolved photon detections.

Detecting N-1 photons at fixed times collapses the component wavefunction onto
a single-photon state in the remaining slot.  Because every term of the
wavefunction is a product of input shapes, the remaining photon's amplitude is
a superposition of the input shapes with coefficients

    xi_n = sum over terms whose remaining slot holds shape n
           of coeff * prod_detected f_{slot shape}(t_detected)

and ``xi^H G xi`` is the joint probability density of the detection times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PatternMismatch, QuadratureNotConverged, ZeroNorm
from .interference import component_probability
from .network import balanced_splitter
from .shapes import ShapeKind, ShapeSuperposition, eval_shape, normalize_superposition, overlap

_ZERO_DENSITY = 1e-14


@dataclass(frozen=True)
class DetectionEvent:
    mode: int
    time: float

    def to_dict(self):
        return {"mode": self.mode, "time": self.time}


@dataclass(frozen=True)
class DetectionPattern:
    """Which output modes fire (and when), where the heralded photon leaves,
    and which modes must stay dark."""

    events: tuple
    remaining_mode: int
    vacuum_modes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "vacuum_modes", tuple(self.vacuum_modes))

    @property
    def times(self):
        return tuple(e.time for e in self.events)

    def with_times(self, times):
        events = tuple(DetectionEvent(e.mode, float(t)) for e, t in zip(self.events, times))
        return DetectionPattern(events, self.remaining_mode, self.vacuum_modes)

    def to_dict(self):
        return {
            "events": [e.to_dict() for e in self.events],
            "remaining_mode": self.remaining_mode,
            "vacuum_modes": list(self.vacuum_modes),
        }


@dataclass(frozen=True)
class ShapingResult:
    xi: np.ndarray
    output_shape: ShapeSuperposition
    joint_density: float
    selection_probability: float
    fidelity: float | None = None

    def to_dict(self):
        return {
            "xi": [[float(z.real), float(z.imag)] for z in self.xi],
            "fidelity": self.fidelity,
            "selection_probability": self.selection_probability,
            "joint_density": self.joint_density,
            "basis": [s.to_dict() for s in self.output_shape.basis],
        }


def assign_slots(occupation, pattern, splitter_mode=None):
    """Map detection events and the remaining photon onto component slots.

    Returns ``(event_slots, remaining_slot)``.  Events in a mode take that
    mode's slots in order.  When the remaining photon shares a doubly occupied
    ``splitter_mode`` with a detected one, the remaining photon takes the first
    slot (splitter port e1) and the detected photon the second (port e2).
    """
    occupation = tuple(occupation)
    n_modes = len(occupation)
    modes = [e.mode for e in pattern.events] + [pattern.remaining_mode]
    if any(not 0 <= m < n_modes for m in modes + list(pattern.vacuum_modes)):
        raise PatternMismatch(f"pattern modes {modes} outside {n_modes} output modes")
    if len(pattern.events) != sum(occupation) - 1:
        raise PatternMismatch(
            f"{len(pattern.events)} detections for a {sum(occupation)}-photon component"
        )
    counts = [modes.count(m) for m in range(n_modes)]
    if tuple(counts) != occupation:
        raise PatternMismatch(
            f"detections + remaining photon {counts} do not match occupation {list(occupation)}"
        )
    for m in pattern.vacuum_modes:
        if occupation[m]:
            raise PatternMismatch(f"vacuum mode {m} holds {occupation[m]} photon(s)")

    first_slot = np.concatenate([[0], np.cumsum(occupation)[:-1]])
    taken = [0] * n_modes
    remaining_slot = None
    if splitter_mode is not None and pattern.remaining_mode == splitter_mode:
        remaining_slot = int(first_slot[splitter_mode])
        taken[splitter_mode] = 1
    event_slots = []
    for e in pattern.events:
        event_slots.append(int(first_slot[e.mode] + taken[e.mode]))
        taken[e.mode] += 1
    if remaining_slot is None:
        remaining_slot = int(first_slot[pattern.remaining_mode] + taken[pattern.remaining_mode])
    return event_slots, remaining_slot


def conditioned_amplitudes(component, event_slots, remaining_slot, inputs, times):
    """Unnormalized coefficients ``xi`` for many detection-time tuples.

    ``times`` has shape ``(P, E)`` (one row per tuple, one column per event);
    the result has shape ``(n_inputs, P)``.
    """
    times = np.atleast_2d(np.asarray(times, dtype=float))
    coeffs, slots = component.term_arrays()
    n_in = len(inputs)
    weights = np.broadcast_to(coeffs[:, None], (len(coeffs), times.shape[0])).copy()
    for e, s in enumerate(event_slots):
        values = np.array([eval_shape(p.shape, times[:, e]) for p in inputs])
        weights *= values[slots[:, s], :]
    onehot = (slots[:, remaining_slot][None, :] == np.arange(n_in)[:, None]).astype(float)
    return onehot @ weights


def _density(xi, g):
    return np.real(np.einsum("ip,ij,jp->p", np.conj(xi), g, xi))


def _result(xi_raw, density_scale, inputs, g, probability):
    basis = tuple(p.shape for p in inputs)
    density = float(_density(xi_raw[:, None], g)[0]) * density_scale
    if not density > _ZERO_DENSITY:
        raise ZeroNorm(f"detection density {density:.3e} vanishes at these times")
    out = normalize_superposition(ShapeSuperposition(basis, xi_raw), g)
    return ShapingResult(out.coeffs, out, density, probability)


def _probability(component, inputs, g):
    if component.probability is not None:
        return component.probability
    return component_probability(component, inputs, g)


def condition(component, pattern, inputs, g):
    """Heralded single-photon shape for detections at exact times."""
    g = np.asarray(g)
    occ = component.occupation
    if 0 <= pattern.remaining_mode < len(occ) and occ[pattern.remaining_mode] > 1:
        raise PatternMismatch(
            f"remaining mode {pattern.remaining_mode} holds {occ[pattern.remaining_mode]} "
            "photons; use split_and_condition"
        )
    event_slots, rem = assign_slots(occ, pattern)
    xi = conditioned_amplitudes(component, event_slots, rem, inputs, [pattern.times])[:, 0]
    return _result(xi, 1.0, inputs, g, _probability(component, inputs, g))


def splitter_factor():
    """Amplitude for two photons of one mode to exit a 50/50 splitter one per port."""
    u = balanced_splitter().matrix
    return math.sqrt(2) * u[0, 0] * u[1, 0]


def _check_split(component, splitter_mode):
    if not 0 <= splitter_mode < len(component.occupation):
        raise PatternMismatch(f"splitter mode {splitter_mode} out of range")
    if component.occupation[splitter_mode] != 2:
        raise PatternMismatch(
            f"splitter mode {splitter_mode} must hold 2 photons, holds "
            f"{component.occupation[splitter_mode]}"
        )


def split_and_condition(component, splitter_mode, pattern, inputs, g):
    """Condition a component whose ``splitter_mode`` holds two photons.

    A 50/50 splitter (ports e1, e2) separates the two photons of
    ``splitter_mode``; only runs with one photon per port are kept.  If the
    remaining photon is in ``splitter_mode`` it exits e1 and the single event
    listed in that mode is the e2 click; otherwise the two events listed in
    ``splitter_mode`` are the e1 and e2 clicks, in that order.
    """
    g = np.asarray(g)
    _check_split(component, splitter_mode)
    event_slots, rem = assign_slots(component.occupation, pattern, splitter_mode)
    factor = splitter_factor()
    xi = factor * conditioned_amplitudes(component, event_slots, rem, inputs, [pattern.times])[:, 0]
    p_sel = _probability(component, inputs, g) * abs(factor) ** 2
    return _result(xi, 1.0, inputs, g, p_sel)


def joint_density_map(component, pattern_template, inputs, g, time_grid, splitter_mode=None):
    """Detection-time density at every tuple in ``time_grid``.

    The event times of ``pattern_template`` are replaced by each row of
    ``time_grid``.  Integrated over all times the map gives the probability of
    the pattern (the component probability, halved behind a splitter).
    """
    g = np.asarray(g)
    if splitter_mode is None:
        event_slots, rem = assign_slots(component.occupation, pattern_template)
        scale = 1.0
    else:
        _check_split(component, splitter_mode)
        event_slots, rem = assign_slots(component.occupation, pattern_template, splitter_mode)
        scale = abs(splitter_factor()) ** 2
    times = np.asarray(time_grid, dtype=float)
    xi = conditioned_amplitudes(component, event_slots, rem, inputs, times.reshape(len(times), -1))
    return np.maximum(_density(xi, g), 0.0) * scale


def density_csv(time_grid, density):
    """``t1,t2,density`` rows (one column per event time, then the density)."""
    times = np.asarray(time_grid, dtype=float)
    times = times.reshape(len(times), -1)
    header = ",".join(f"t{i + 1}" for i in range(times.shape[1])) + ",density"
    rows = [",".join(format(v, ".12g") for v in (*t, d)) for t, d in zip(times, density)]
    return "\n".join([header, *rows]) + "\n"


def _discontinuities(inputs):
    return sorted(
        {p.shape.center for p in inputs if p.shape.kind is not ShapeKind.GAUSSIAN}
    )


def _window_nodes(center, width, n, breaks):
    lo, hi = center - width / 2, center + width / 2
    cuts = [lo] + [b for b in breaks if lo < b < hi] + [hi]
    x, w = np.polynomial.legendre.leggauss(n)
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def smear_resolution(scheme, target, t_R, method="mixed", tol=1e-6, max_nodes=512):
    """Fidelity when each detector only resolves a window of width ``t_R``.

    Every detection time is known only up to ``(t_dec - t_R/2, t_dec + t_R/2)``.
    With ``method="mixed"`` the heralded photon is the density-weighted mixture
    over the windows and the returned value is ``sqrt(<target|rho|target>)``.
    With ``method="average"`` it is the density-weighted mean of the pure-state
    fidelities.  Windows are integrated by tensor Gauss-Legendre rules, doubled
    from 32 nodes per axis until the fidelity changes by less than ``tol``.
    """
    if t_R < 0:
        raise ValueError(f"t_R must be non-negative, got {t_R}")
    inputs = scheme.inputs
    g = scheme.gram()
    component = scheme.selected_component()
    event_slots, rem = assign_slots(component.occupation, scheme.pattern, scheme.splitter_mode)
    scale = 1.0 if scheme.splitter_mode is None else abs(splitter_factor()) ** 2
    to_target = np.array([overlap(p.shape, target) for p in inputs])

    def evaluate(times, weights):
        xi = conditioned_amplitudes(component, event_slots, rem, inputs, times)
        density = _density(xi, g) * scale
        amp2 = np.abs(np.conj(to_target) @ xi) ** 2 * scale
        norm = weights @ density
        if not norm > _ZERO_DENSITY * max(1.0, weights.sum()):
            raise ZeroNorm("detection density vanishes over the resolution windows")
        if method == "mixed":
            return math.sqrt(max(0.0, (weights @ amp2) / norm))
        if method == "average":
            fid = np.sqrt(amp2 / np.where(density > 0, density, np.inf))
            return float(weights @ (density * fid) / norm)
        raise ValueError(f"unknown smearing method {method!r}")

    centers = scheme.pattern.times
    if t_R == 0:
        return evaluate(np.array([centers]), np.ones(1))

    breaks = _discontinuities(inputs)
    previous = None
    n = 32
    while n <= max_nodes:
        axes = [_window_nodes(c, t_R, n, breaks) for c in centers]
        grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
        times = np.stack([gr.ravel() for gr in grids], axis=1)
        weights = np.prod([w.ravel() for w in wgrids], axis=0)
        value = evaluate(times, weights)
        if previous is not None and abs(value - previous) < tol:
            return value
        previous = value
        n *= 2
    raise QuadratureNotConverged(
        f"resolution-window fidelity not converged to {tol:g} with {max_nodes} nodes per axis"
    )
