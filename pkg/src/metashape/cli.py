"""Command-line front end.

    metashape run CONFIG            one scheme -> result.json, shape.csv, shape.svg
    metashape reproduce NAME        fig2 | fig3-er | fig3-ed | fig4a | fig4b | table1
    metashape optimize CONFIG       optimizer report JSON + convergence CSV

Exit status: 0 success, 1 computation failure, 2 configuration failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config, load_preset
from .errors import MetashapeError
from .metrics import run_scheme, sweep_resolution, sweep_splitting
from .optimize import TABLE1_ROWS, optimize_scheme, reproduce_table1
from .postselect import density_csv, joint_density_map
from .shapes import eval_shape
from .svg import line_plot

EXIT_OK, EXIT_COMPUTE, EXIT_CONFIG = 0, 1, 2

FIGURE_PRESETS = {"fig2": "fig2", "fig3-er": "fig3_er", "fig3-ed": "fig3_ed"}
SWEEP_SCHEMES = ("fig2", "fig3_er", "fig3_ed")
SPLITTING_SPAN = 0.10
SWEEP_POINTS = 41
RESOLUTION_MAX = 1.0
DENSITY_POINTS = 61


class ComputeError(Exception):
    pass


def _num(x):
    return format(float(x), ".12g")


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(data):
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def shape_table(result, target, window):
    tau = np.linspace(window.t_min, window.t_max, window.points)
    out = result.output_shape(tau)
    tgt = eval_shape(target, tau)
    lines = ["tau,re_out,im_out,abs2_out,re_target,im_target,abs2_target"]
    for t, a, b in zip(tau, out, tgt):
        lines.append(",".join(_num(v) for v in (t, a.real, a.imag, abs(a) ** 2,
                                                  b.real, b.imag, abs(b) ** 2)))
    return tau, out, tgt, "\n".join(lines) + "\n"


def density_table(config):
    """Joint detection density on a square grid over the output window."""
    s = config.scheme
    axis = np.linspace(config.output.t_min, config.output.t_max, DENSITY_POINTS)
    grids = np.meshgrid(*([axis] * len(s.pattern.events)), indexing="ij")
    times = np.stack([g.ravel() for g in grids], axis=1)
    density = joint_density_map(s.selected_component(), s.pattern, s.inputs, s.gram(), times,
                                splitter_mode=s.splitter_mode)
    return density_csv(times, density)


def state_dump(scheme, result=None):
    g = scheme.gram()
    state = {
        "scheme": scheme.to_dict(),
        "network": scheme.network.to_json(),
        "gram": [[[float(z.real), float(z.imag)] for z in row] for row in g],
        "components": [{"occupation": list(c.occupation), "probability": c.probability}
                       for c in scheme.components()],
    }
    if result is not None:
        state["result"] = result.to_dict()
    return state


def _run_one(config, out_dir, dump_state):
    scheme = config.scheme
    try:
        result = run_scheme(scheme)
        density = density_table(config)
    except (MetashapeError, ArithmeticError, ValueError) as exc:
        raise ComputeError(f"{config.name}: {exc}") from None
    tau, out, tgt, shape_csv = shape_table(result, scheme.target, config.output)
    doc = {"name": config.name, "description": config.description,
           "scheme": scheme.to_dict(), "result": result.to_dict()}
    svg = line_plot(
        [("|f_out|", tau, np.abs(out)), ("|f_target|", tau, np.abs(tgt))],
        "time (1/Gamma_0)", "amplitude modulus",
        title=f"{config.name}: F = {result.fidelity:.4f}, P_sel = {result.selection_probability:.4f}",
    )
    write_atomic(out_dir / "result.json", _json(doc))
    write_atomic(out_dir / "shape.csv", shape_csv)
    write_atomic(out_dir / "shape.svg", svg)
    write_atomic(out_dir / "density.csv", density)
    if dump_state:
        write_atomic(out_dir / "state.json", _json(state_dump(scheme, result)))
    print(f"{config.name}: fidelity {result.fidelity:.6f}  P_sel {result.selection_probability:.6f}"
          f"  -> {out_dir}")
    return result


def _sweep_csv(points):
    return "x,fidelity\n" + "".join(f"{_num(x)},{_num(f)}\n" for x, f in points)


def _write_sweep(out_dir, stem, points, xlabel, title):
    xs, fs = zip(*points)
    write_atomic(out_dir / f"{stem}.csv", _sweep_csv(points))
    write_atomic(out_dir / f"{stem}.svg", line_plot([("fidelity", xs, fs)], xlabel, "fidelity",
                                                    title=title))


def splitting_values(s_t, span=SPLITTING_SPAN, points=SWEEP_POINTS):
    values = s_t * (1 + np.linspace(-span, span, points))
    return [float(v) for v in values if 0 < v < 1]


def resolution_values(max_ratio=RESOLUTION_MAX, points=SWEEP_POINTS):
    return [float(v) for v in np.linspace(0.0, max_ratio, points)]


def _fig4(which, out_dir, threads, seed):
    curves = []
    for name in SWEEP_SCHEMES:
        config = load_preset(name)
        s = config.scheme
        try:
            if which == "fig4a":
                spec = config.sweeps.get("splitting", {})
                values = splitting_values(s.s_t, spec.get("relative_span", SPLITTING_SPAN),
                                          spec.get("points", SWEEP_POINTS))
                points = sweep_splitting(s, values, spec.get("reoptimize_times", False),
                                         threads=threads, seed=seed)
                xlabel = "co-polarization coefficient s_t"
            else:
                spec = config.sweeps.get("resolution", {})
                values = resolution_values(spec.get("max_ratio", RESOLUTION_MAX),
                                           spec.get("points", SWEEP_POINTS))
                points = sweep_resolution(s, values, spec.get("method", "mixed"), threads=threads)
                xlabel = "t_R / t_0"
        except (MetashapeError, ArithmeticError, ValueError) as exc:
            raise ComputeError(f"{which}/{name}: {exc}") from None
        _write_sweep(out_dir, f"{which}_{name}", points, xlabel, f"{which}: {name}")
        curves.append((name, points))
        print(f"{which}/{name}: {len(points)} points, fidelity {min(f for _, f in points):.4f}"
              f" .. {max(f for _, f in points):.4f}")
    series = [(name, [x for x, _ in pts], [f for _, f in pts]) for name, pts in curves]
    xs = "t_R / t_0" if which == "fig4b" else "s_t"
    write_atomic(out_dir / f"{which}.svg", line_plot(series, xs, "fidelity", title=which))


def _component_label(occ):
    return "|" + ",".join(str(k) for k in occ) + ">"


def _table1(out_dir, budget, seed):
    buf = io.StringIO()
    table = csv.writer(buf, lineterminator="\n")
    table.writerow(["s_t", "component", "P_sel_percent", "output", "F_percent"])
    reports = []
    for i, row in enumerate(TABLE1_ROWS):
        try:
            rep = reproduce_table1(row, budget=budget, seed=seed)
        except (MetashapeError, ArithmeticError, ValueError) as exc:
            raise ComputeError(f"table1 row {i + 1}: {exc}") from None
        table.writerow([row["s_t"], _component_label(row["component"]), f"{100 * rep.best_P_sel:.2f}",
                        f"b{row['output_mode'] + 1}", f"{100 * rep.best_fidelity:.2f}"])
        reports.append({"row": {**row, "component": list(row["component"])}, "report": rep.to_dict()})
        print(f"table1 row {i + 1}: s_t {row['s_t']}  {_component_label(row['component'])} -> "
              f"b{row['output_mode'] + 1}  P_sel {100 * rep.best_P_sel:.2f}%  "
              f"F {100 * rep.best_fidelity:.2f}%")
    write_atomic(out_dir / "table1.csv", buf.getvalue())
    write_atomic(out_dir / "table1_reports.json", _json(reports))


def _optimize(config, out_dir, seed, dump_state):
    opt = config.optimizer
    seed = opt.seed if seed is None else seed
    try:
        rep = optimize_scheme(config.scheme, opt.params, p_min=opt.p_min, budget=opt.budget,
                              seed=seed, kappa=opt.kappa)
    except (MetashapeError, ArithmeticError, ValueError) as exc:
        raise ComputeError(f"{config.name}: {exc}") from None
    doc = {"name": config.name, "seed": seed, "budget": opt.budget, **rep.to_dict()}
    write_atomic(out_dir / "optimize_report.json", _json(doc))
    write_atomic(out_dir / "optimize_trace.csv", rep.trace_csv())
    if dump_state:
        best = config.scheme.with_params(dict(zip(rep.param_names, rep.best_params)))
        write_atomic(out_dir / "state.json", _json(state_dump(best)))
    print(f"{config.name}: best fidelity {rep.best_fidelity:.6f}  P_sel {rep.best_P_sel:.6f}"
          f"  after {rep.evaluations} evaluations -> {out_dir}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default="metashape-out", type=Path,
                        help="directory for result files (default: %(default)s)")
    common.add_argument("--dump-state", action="store_true",
                        help="also write state.json with the scheme, Gram matrix and components")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--seed", type=int, default=None, help="optimizer seed override")

    parser = argparse.ArgumentParser(prog="metashape", description="Temporal shaping of single photons by heralded multi-photon interference.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="condition one scheme from a config file")
    p.add_argument("config")
    p = sub.add_parser("reproduce", parents=[common], help="regenerate a bundled figure or table")
    p.add_argument("name", choices=sorted([*FIGURE_PRESETS, "fig4a", "fig4b", "table1"]))
    p.add_argument("--budget", type=int, default=20000, help="evaluations per table row")
    p = sub.add_parser("optimize", parents=[common], help="search parameters named in a config")
    p.add_argument("config")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = args.out_dir
    try:
        if args.command == "run":
            _run_one(load_config(args.config), out_dir, args.dump_state)
        elif args.command == "optimize":
            config = load_config(args.config)
            if config.optimizer is None:
                raise ConfigError("config has no optimizer section", where="optimizer")
            _optimize(config, out_dir, args.seed, args.dump_state)
        elif args.name in FIGURE_PRESETS:
            _run_one(load_preset(FIGURE_PRESETS[args.name]), out_dir, args.dump_state)
        elif args.name == "table1":
            _table1(out_dir, args.budget, 0 if args.seed is None else args.seed)
        else:
            _fig4(args.name, out_dir, args.threads, 0 if args.seed is None else args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ComputeError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
