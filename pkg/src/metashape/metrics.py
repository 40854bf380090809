"""Fidelity, the end-to-end shaping pipeline and parameter sweeps."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .postselect import condition, smear_resolution, split_and_condition
from .shapes import overlap


def fidelity(out, target):
    """``|<out|target>|`` for a normalized superposition and a target shape."""
    to_target = np.array([overlap(s, target) for s in out.basis])
    return float(abs(np.conj(out.coeffs) @ to_target))


def run_scheme(s):
    """Expand, select, condition and score one scheme."""
    component = s.selected_component()
    g = s.gram()
    if s.splitter_mode is None:
        res = condition(component, s.pattern, s.inputs, g)
    else:
        res = split_and_condition(component, s.splitter_mode, s.pattern, s.inputs, g)
    return replace(res, fidelity=fidelity(res.output_shape, s.target))


def _map(fn, values, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, values))
    return [fn(v) for v in values]


def sweep_splitting(s, s_t_values, reoptimize_times=False, threads=1, budget=400, seed=0):
    """Fidelity against the co-polarization coefficient.

    Detection times stay fixed unless ``reoptimize_times`` is set, in which case
    they are re-optimized at every point (starting from the nominal times).
    """
    def point(s_t):
        scheme = s.with_params({"s_t": s_t})
        if reoptimize_times:
            from .optimize import optimize_times
            report = optimize_times(scheme, budget=budget, seed=seed)
            return float(s_t), report.best_fidelity
        return float(s_t), run_scheme(scheme).fidelity

    return _map(point, list(s_t_values), threads)


def sweep_resolution(s, t_R_values, method="mixed", threads=1):
    """Fidelity against detector resolution ``t_R / t_0`` with ``t_0 = 1/Gamma_0``.

    ``t_0`` is the inverse linewidth of the target shape.
    """
    t0 = 1.0 / s.target.gamma

    def point(ratio):
        return float(ratio), smear_resolution(s, s.target, ratio * t0, method=method)

    return _map(point, list(t_R_values), threads)
