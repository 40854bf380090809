"""Derivative-free search for high-fidelity operating points.

Differential evolution with synchronous generations explores the box of free
parameters, then a bounded Nelder-Mead simplex polishes the best point with
whatever evaluation budget is left.  Linewidth-like parameters can be searched
in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sopt

from .errors import MetashapeError
from .metrics import run_scheme
from .postselect import DetectionEvent, DetectionPattern
from .scheme import ShapingScheme
from .interference import PhotonInput
from .shapes import exp_decay, gaussian

FAILED = -math.inf
_PENALTY = 1e3


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    bounds: tuple
    initial: float
    log: bool = False

    def __post_init__(self):
        lo, hi = (float(b) for b in self.bounds)
        object.__setattr__(self, "bounds", (lo, hi))
        if not lo < hi:
            raise ValueError(f"{self.name}: lower bound {lo} must be below upper bound {hi}")
        if not lo <= self.initial <= hi:
            raise ValueError(f"{self.name}: initial {self.initial} outside [{lo}, {hi}]")
        if self.log and lo <= 0:
            raise ValueError(f"{self.name}: log-scaled bounds must be positive")

    def to_unit(self, value):
        return math.log(value) if self.log else float(value)

    def from_unit(self, x):
        lo, hi = self.bounds
        value = math.exp(x) if self.log else float(x)
        return min(hi, max(lo, value))

    def unit_bounds(self):
        return tuple(self.to_unit(b) for b in self.bounds)


@dataclass
class OptimizationReport:
    param_names: list
    best_params: list
    best_fidelity: float
    best_P_sel: float
    best_objective: float
    evaluations: int
    failed_evaluations: int = 0
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {
            "param_names": self.param_names,
            "best_params": self.best_params,
            "best_fidelity": self.best_fidelity,
            "best_P_sel": self.best_P_sel,
            "best_objective": self.best_objective,
            "evaluations": self.evaluations,
            "failed_evaluations": self.failed_evaluations,
            "trace": [list(t) for t in self.trace],
        }

    def trace_csv(self):
        lines = ["evaluation,objective"]
        lines += [f"{i},{v:.12g}" for i, v in self.trace]
        return "\n".join(lines) + "\n"


class _BudgetExhausted(Exception):
    pass


class _Objective:
    def __init__(self, template, params, p_min, kappa, budget, hook):
        self.template = template
        self.params = params
        self.p_min = p_min
        self.kappa = kappa
        self.budget = budget
        self.hook = hook
        self.count = 0
        self.failed = 0
        self.best = None  # (objective, values, fidelity, p_sel)
        self.trace = []

    def score(self, x):
        if self.count >= self.budget:
            raise _BudgetExhausted
        values = [p.from_unit(xi) for p, xi in zip(self.params, x)]
        self.count += 1
        if self.hook is not None:
            self.hook(dict(zip((p.name for p in self.params), values)))
        try:
            scheme = self.template.with_params(dict(zip((p.name for p in self.params), values)))
            res = run_scheme(scheme)
        except (MetashapeError, ArithmeticError, ValueError):
            self.failed += 1
            return FAILED
        obj = res.fidelity
        if self.p_min is not None:
            obj -= self.kappa * max(0.0, self.p_min - res.selection_probability)
        if self.best is None or obj > self.best[0]:
            self.best = (obj, values, res.fidelity, res.selection_probability)
            self.trace.append((self.count, obj))
        return obj

    def __call__(self, x):
        obj = self.score(x)
        return _PENALTY if obj == FAILED else -obj


def optimize_scheme(template, params, p_min=None, budget=20000, seed=0, kappa=10.0,
                    hook=None, polish_fraction=0.2, popsize=15):
    """Maximize fidelity (optionally with a selection-probability floor).

    ``p_min=None`` maximizes the fidelity itself; otherwise the objective is
    ``fidelity - kappa * max(0, p_min - P_sel)``.  ``budget`` caps the number
    of scheme evaluations; a budget of 0 or 1 just scores the initial point.
    Evaluations that raise count as failures with objective ``-inf``.
    """
    params = list(params)
    if not params:
        raise ValueError("at least one free parameter is required")
    names = [p.name for p in params]
    budget = max(1, int(budget))
    obj = _Objective(template, params, p_min, kappa, budget, hook)
    x0 = np.array([p.to_unit(p.initial) for p in params])
    bounds = [p.unit_bounds() for p in params]
    obj(x0)

    dim = len(params)
    de_budget = int(budget * (1 - polish_fraction))
    popsize = max(5, min(popsize, de_budget // (4 * dim) if dim else popsize))
    if budget > 1:
        try:
            if de_budget >= 4 * dim * 5:
                generations = max(1, de_budget // (popsize * dim) - 1)
                sopt.differential_evolution(
                    obj, bounds, x0=x0, seed=seed, popsize=popsize, maxiter=generations,
                    tol=0, atol=0, polish=False, updating="deferred", init="latinhypercube",
                )
            start = np.array([p.to_unit(v) for p, v in zip(params, obj.best[1])])
            remaining = budget - obj.count
            if remaining > 0:
                sopt.minimize(
                    obj, start, method="Nelder-Mead", bounds=bounds,
                    options={"maxfev": remaining, "xatol": 1e-9, "fatol": 1e-12,
                             "adaptive": dim > 4},
                )
        except _BudgetExhausted:
            pass

    best_obj, values, fid, p_sel = obj.best if obj.best else (FAILED, list(map(float, x0)), 0.0, 0.0)
    return OptimizationReport(names, list(values), fid, p_sel, best_obj, obj.count,
                              obj.failed, list(obj.trace))


def optimize_times(scheme, budget=400, seed=0, span=2.0):
    """Re-optimize only the detection times around their current values."""
    params = [
        ParameterSpec(f"events.{i}.time", (t - span, t + span), t)
        for i, t in enumerate(scheme.pattern.times)
    ]
    return optimize_scheme(scheme, params, budget=budget, seed=seed)


# Table of ED -> Gaussian conversions over different components and exit modes.
TABLE1_ROWS = (
    {"s_t": 0.801, "component": (1, 1, 1, 0), "output_mode": 0, "P_sel": 0.0886, "fidelity": 0.997},
    {"s_t": 0.615, "component": (1, 1, 1, 0), "output_mode": 1, "P_sel": 0.0510, "fidelity": 0.997},
    {"s_t": 0.994, "component": (1, 1, 1, 0), "output_mode": 2, "P_sel": 0.280, "fidelity": 0.983},
    {"s_t": 0.621, "component": (2, 1, 0, 0), "output_mode": 0, "P_sel": 0.0498, "fidelity": 0.996},
    {"s_t": 0.726, "component": (1, 2, 0, 0), "output_mode": 0, "P_sel": 0.0545, "fidelity": 0.995},
)

_ED_START = ((1.42, 0.0), (1.27, -1.19), (1.27, 1.19))


def table1_template(row):
    """ED inputs, Gaussian target at ``tau_0 = 2`` and the row's detection layout.

    Doubly occupied modes go through a 50/50 splitter: when the heralded photon
    shares the mode it exits port e1, otherwise both photons are detected.
    """
    occ = tuple(row["component"])
    out = row["output_mode"]
    doubled = [m for m, k in enumerate(occ) if k == 2]
    splitter = doubled[0] if doubled else None
    modes = []
    for m, k in enumerate(occ):
        modes += [m] * (k - (1 if m == out else 0))
    events = tuple(DetectionEvent(m, 1.0 + 0.5 * i) for i, m in enumerate(modes))
    pattern = DetectionPattern(events, out, tuple(m for m, k in enumerate(occ) if k == 0))
    inputs = tuple(PhotonInput(i, exp_decay(g, 0.0, w)) for i, (g, w) in enumerate(_ED_START))
    return ShapingScheme(row["s_t"], inputs, occ, pattern, gaussian(1.0, 2.0),
                         splitter_mode=splitter, name=f"table1 {occ} -> b{out + 1}")


def table1_params(template):
    params = [ParameterSpec(f"inputs.{i}.gamma", (0.1, 20.0), template.inputs[i].shape.gamma, log=True)
              for i in range(3)]
    params += [ParameterSpec(f"inputs.{i}.detuning", (-6.0, 6.0), template.inputs[i].shape.detuning)
               for i in range(3)]
    params += [ParameterSpec(f"events.{i}.time", (0.0, 10.0), t)
               for i, t in enumerate(template.pattern.times)]
    return params


TARGET_CENTER_BOUNDS = (0.5, 6.0)


def _chain(first, second):
    """Join two consecutive runs; ``second`` started from ``first``'s optimum."""
    offset = first.evaluations
    trace = list(first.trace) + [(i + offset, v) for i, v in second.trace if v > first.best_objective]
    return OptimizationReport(second.param_names, list(second.best_params), second.best_fidelity,
                              second.best_P_sel, second.best_objective,
                              first.evaluations + second.evaluations,
                              first.failed_evaluations + second.failed_evaluations, trace)


def reproduce_table1(row, budget=20000, seed=0, margin=0.002, free_target=True, split=0.75):
    """Optimize the free shapes and times at the row's fixed ``s_t`` and layout.

    The selection-probability floor sits ``margin`` below the listed value.
    With ``free_target`` a fraction ``split`` of the budget is spent with the
    target peak at ``tau_0 = 2``; the rest continues from that optimum with
    the peak time free as well.
    """
    template = table1_template(row)
    p_min = row["P_sel"] - margin
    if not free_target or budget < 4:
        return optimize_scheme(template, table1_params(template), p_min=p_min,
                               budget=budget, seed=seed)
    first = optimize_scheme(template, table1_params(template), p_min=p_min,
                            budget=int(budget * split), seed=seed)
    start = template.with_params(dict(zip(first.param_names, first.best_params)))
    specs = table1_params(start) + [
        ParameterSpec("target.center", TARGET_CENTER_BOUNDS, start.target.center)
    ]
    second = optimize_scheme(start, specs, p_min=p_min, budget=budget - first.evaluations, seed=seed)
    return _chain(first, second)
