"""Command-line entry point: ``bellforge <command> [options]``.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 numerical violation.
Options may also come from ``--config FILE`` (``key=value`` lines, keys
named like the long flags); flags given on the command line win.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bell_model import (
    BellExpression,
    NumericalViolation,
    bell3,
    embedding_agreement,
    builtin_expression,
    chsh_rescale,
    evaluate,
    first_difference,
    parse_expression,
    quantum_table,
    reduce_bell2_to_bell3,
)
from .lhv import lhv_bound, lhv_min, with_lhv_bound
from .measurement import parse_angle, settings_from_angles
from .optimize import (
    PRESETS,
    OptimizerConfig,
    ThresholdOutOfRange,
    maximize_settings,
    preset_settings,
    scan_family,
    verify_gisin_sweep,
    werner_threshold,
)
from .sampling import estimate, sample_table
from .states import embed_biseparable, make_ghz, make_two_qubit_schmidt, make_w, parse_state_spec

CSV_COLUMNS = ("param_1", "param_2", "bell_value", "classical_bound", "violated")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    state: str | None = None
    expr: str | None = None
    expr_file: str | None = None
    preset: str | None = None
    theta: str | None = None
    phi: str | None = None
    angles: str | None = None
    optimize: bool = False
    family: str | None = None
    grid: str | None = None
    beta: str | None = None
    samples: int | None = None
    shots: int | None = None
    restarts: int | None = None
    max_iterations: int | None = None
    seed: int | None = None
    out: str | None = None
    gnuplot: str | None = None
    perturb: bool = False

    @classmethod
    def field_names(cls) -> set[str]:
        return {f.name for f in dataclasses.fields(cls)} - {"command"}


_INT_KEYS = {"samples", "shots", "restarts", "max_iterations", "seed"}
_BOOL_KEYS = {"optimize", "perturb"}


def read_config_file(path: str) -> dict[str, object]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    out: dict[str, object] = {}
    allowed = RunConfig.field_names()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in allowed:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        if key in _INT_KEYS:
            try:
                out[key] = int(value)
            except ValueError:
                raise UsageError(f"{path}:{lineno}: {key} must be an integer") from None
        elif key in _BOOL_KEYS:
            out[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, state=False, expr=False, opt=False, out=False):
        p.add_argument("--config", help="key=value file supplying defaults")
        p.add_argument("--seed", type=int)
        if state:
            p.add_argument("--state", help="state family, e.g. ghz:xi=pi/4")
        if expr:
            g = p.add_mutually_exclusive_group()
            g.add_argument("--expr", help="bell1, bell2 or bell3")
            g.add_argument("--expr-file", help="expression in term-per-line text format")
        if opt:
            p.add_argument("--restarts", type=int)
            p.add_argument("--max-iterations", type=int)
        if out:
            p.add_argument("--out", help="output CSV path")
        return p

    common(sub.add_parser("lhv-bound", help="local bound by enumeration"), expr=True)

    p = common(sub.add_parser("evaluate", help="Bell value of a state"), state=True, expr=True, opt=True)
    p.add_argument("--preset", help="THM1, FIG1, THM2 or BELL3")
    p.add_argument("--theta", help="free theta of a preset")
    p.add_argument("--phi", help="free phi of the BELL3 preset")
    p.add_argument("--angles", help="comma-separated theta,phi per setting per party")
    p.add_argument("--optimize", action="store_true", default=None, help="maximize over all angles")

    p = common(sub.add_parser("scan", help="optimized Bell value along a state family"),
               expr=True, opt=True, out=True)
    p.add_argument("--family", help="ghz, w, pair or acin")
    p.add_argument("--grid", help="start:stop:points for xi")
    p.add_argument("--beta", help="comma-separated beta values for the w family")
    p.add_argument("--samples", type=int, help="random states for the acin family")
    p.add_argument("--gnuplot", help="also write a gnuplot script here")

    p = common(sub.add_parser("sample", help="finite-shot estimate of a Bell value"),
               state=True, expr=True, out=True)
    p.add_argument("--preset")
    p.add_argument("--theta")
    p.add_argument("--phi")
    p.add_argument("--angles")
    p.add_argument("--shots", type=int)

    common(sub.add_parser("werner", help="visibility threshold of the Werner state"), expr=True, opt=True)

    p = common(sub.add_parser("reduce-check", help="check the bell2 -> bell3 reduction"))
    p.add_argument("--samples", type=int)
    p.add_argument("--perturb", action="store_true", default=None, help="negative control")

    p = common(sub.add_parser("gisin-sweep", help="random pure states vs bell2"), opt=True, out=True)
    p.add_argument("--samples", type=int)
    return parser


def resolve(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    given = {k: v for k, v in vars(ns).items() if v is not None and k not in ("command", "config")}
    merged = read_config_file(ns.config) if ns.config else {}
    merged.update(given)
    return RunConfig(command=ns.command, **merged)


def load_expression(cfg: RunConfig, default: str | None = None) -> BellExpression:
    if cfg.expr_file:
        try:
            text = Path(cfg.expr_file).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {cfg.expr_file}: {exc}") from exc
        return with_lhv_bound(parse_expression(text, name=Path(cfg.expr_file).stem))
    name = cfg.expr or default
    if name is None:
        raise UsageError("--expr or --expr-file is required")
    return builtin_expression(name)


def optimizer_config(cfg: RunConfig, **defaults) -> OptimizerConfig:
    base = OptimizerConfig(**defaults)
    changes = {k: getattr(cfg, k) for k in ("restarts", "max_iterations", "seed") if getattr(cfg, k) is not None}
    return base.replace(**changes)


def parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:points, got {text!r}")
    start, stop = parse_angle(parts[0]), parse_angle(parts[1])
    points = int(parts[2])
    if points < 1:
        raise UsageError("grid needs at least one point")
    return np.linspace(start, stop, points)


def fmt(x) -> str:
    return f"{x:.9g}"


def write_rows(path: str, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            w.writerows(rows)
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def _settings_for(cfg: RunConfig, n: int):
    if cfg.angles:
        try:
            vals = [parse_angle(a) for a in cfg.angles.split(",")]
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if len(vals) != 4 * n:
            raise UsageError(f"--angles needs {4 * n} values for {n} parties, got {len(vals)}")
        return settings_from_angles(vals, n)
    if cfg.preset:
        theta = parse_angle(cfg.theta) if cfg.theta else 0.0
        phi = parse_angle(cfg.phi) if cfg.phi else 0.0
        return preset_settings(cfg.preset, theta, phi)
    raise UsageError("give --preset or --angles")


def _state_and_expr(cfg: RunConfig):
    if not cfg.state:
        raise UsageError("--state is required")
    default_expr = None
    if cfg.preset:
        key = cfg.preset.upper()
        if key not in PRESETS:
            raise UsageError(f"unknown preset {cfg.preset!r}")
        default_expr = PRESETS[key][0]().name
    state = parse_state_spec(cfg.state)
    return state, load_expression(cfg, default_expr)


def cmd_lhv_bound(cfg: RunConfig, out) -> int:
    expr = load_expression(cfg)
    res = lhv_bound(expr)
    print(f"bound={res.bound}, strategies={res.strategy_count}", file=out)
    print(f"min={lhv_min(expr)}, maximizers={len(res.maximizers)}", file=out)
    for s in res.maximizers:
        print("  " + " ".join(f"{'ABC'[p]}=({a},{b})" for p, (a, b) in enumerate(s)), file=out)
    return 0


def cmd_evaluate(cfg: RunConfig, out) -> int:
    state, expr = _state_and_expr(cfg)
    bound = float(expr.classical_bound)
    if cfg.optimize:
        res = maximize_settings(state, expr, optimizer_config(cfg))
        value = res.best_value
        print("angles=" + ",".join(fmt(a) for a in res.best_angles), file=out)
    else:
        value = evaluate(expr, quantum_table(state, _settings_for(cfg, expr.num_parties)))
    print(f"B={value:.10f}, classical_bound={fmt(bound)}, violated={str(value > bound + 1e-9).lower()}", file=out)
    return 0


def _family_maker(family: str, beta: float | None = None):
    if family == "ghz":
        return make_ghz
    if family == "w":
        return lambda xi: make_w(beta, xi)
    if family == "pair":
        return lambda xi: embed_biseparable(make_two_qubit_schmidt(xi), "C")
    if family == "schmidt":
        return make_two_qubit_schmidt
    raise UsageError(f"unknown family {family!r}")


def _gnuplot_script(csv_path: str, bound: float) -> str:
    return (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set xlabel 'xi'\nset ylabel 'Bell value'\n"
        f"plot '{csv_path}' using (column(1)):3 with linespoints title 'optimized', "
        f"{fmt(bound)} with lines title 'local bound'\n"
    )


def cmd_scan(cfg: RunConfig, out) -> int:
    family = (cfg.family or "ghz").lower()
    expr = load_expression(cfg, "bell3" if family == "schmidt" else "bell2")
    bound = float(expr.classical_bound)
    opt = optimizer_config(cfg, restarts=4)
    rows = []
    if family == "acin":
        report = verify_gisin_sweep(cfg.samples or 200, opt, include_controls=False)
        for s in report.samples:
            rows.append([s.index, str(s.entanglement), fmt(s.value), fmt(bound), str(s.violated).lower()])
    else:
        grid = parse_grid(cfg.grid or "0:pi/2:101")
        if family == "w":
            betas = [parse_angle(b) for b in (cfg.beta or "pi/2").split(",")]
            for j, beta in enumerate(betas):
                for xi, res in scan_family(_family_maker("w", beta), expr, grid, opt, stream=(2, j)):
                    rows.append([fmt(beta), fmt(xi), fmt(res.best_value), fmt(bound),
                                 str(res.best_value > bound + 1e-9).lower()])
        else:
            for xi, res in scan_family(_family_maker(family), expr, grid, opt, stream=(1,)):
                rows.append([fmt(xi), "", fmt(res.best_value), fmt(bound),
                             str(res.best_value > bound + 1e-9).lower()])
    if cfg.out:
        write_rows(cfg.out, rows)
        print(f"wrote {len(rows)} rows to {cfg.out}", file=out)
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(rows)
    if cfg.gnuplot:
        try:
            Path(cfg.gnuplot).write_text(_gnuplot_script(cfg.out or "scan.csv", bound))
        except OSError as exc:
            raise IOError(f"cannot write {cfg.gnuplot}: {exc}") from exc
    return 0


def cmd_sample(cfg: RunConfig, out) -> int:
    state, expr = _state_and_expr(cfg)
    exact = quantum_table(state, _settings_for(cfg, expr.num_parties))
    shots = cfg.shots if cfg.shots is not None else 10000
    if shots < 1:
        raise UsageError("--shots must be >= 1")
    emp = sample_table(exact, shots, np.random.default_rng(cfg.seed or 0))
    value, se = estimate(expr, emp)
    print(f"B_hat={value:.10f}, stderr={se:.3e}, exact={evaluate(expr, exact):.10f}, shots_per_setting={shots}",
          file=out)
    if cfg.out:
        n = expr.num_parties
        try:
            with open(cfg.out, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["settings", "outcomes", "count"])
                for idx in np.ndindex(emp.counts.shape):
                    w.writerow(["".join(str(i + 1) for i in idx[:n]), "".join(map(str, idx[n:])),
                                int(emp.counts[idx])])
        except OSError as exc:
            raise IOError(f"cannot write {cfg.out}: {exc}") from exc
    return 0


def cmd_werner(cfg: RunConfig, out) -> int:
    expr = load_expression(cfg, "bell3")
    try:
        res = werner_threshold(expr, optimizer_config(cfg, restarts=8))
    except ThresholdOutOfRange as exc:
        print(f"out-of-range: {exc}", file=out)
        return 4
    print(f"V_max={res.v_max:.7f}", file=out)
    print(f"bracket=[{res.lower:.7f}, {res.upper:.7f}] values=[{res.value_lower:.7f}, {res.value_upper:.7f}] "
          f"bound={fmt(res.classical_bound)}", file=out)
    if expr.terms == bell3().terms:
        b_mid = 0.5 * (res.value_lower + res.value_upper)
        print(f"rescaled B'={chsh_rescale(b_mid):.7f} (local bound 2)", file=out)
    return 0


def cmd_reduce_check(cfg: RunConfig, out) -> int:
    reduced = reduce_bell2_to_bell3()
    target = bell3()
    if cfg.perturb:
        t0 = reduced.terms[0]
        bumped = dataclasses.replace(t0, coefficient=t0.coefficient + 1)
        reduced = BellExpression(2, (bumped,) + reduced.terms[1:], reduced.classical_bound, reduced.name)
    diff = first_difference(reduced, target)
    ok = diff is None
    print(f"symbolic: {'pass' if ok else 'fail'}" + ("" if ok else f" (first difference: {diff})"), file=out)
    worst = embedding_agreement(cfg.samples or 50, cfg.seed or 0)
    ok2 = worst <= 1e-12
    print(f"embedding: {'pass' if ok2 else 'fail'} (max deviation {worst:.2e} over {cfg.samples or 50} draws)",
          file=out)
    return 0 if ok and ok2 else 1


def cmd_gisin_sweep(cfg: RunConfig, out) -> int:
    opt = optimizer_config(cfg, restarts=4)
    report = verify_gisin_sweep(cfg.samples or 200, opt)
    print(f"samples={len(report.samples)} classes={report.class_counts} "
          f"min_margin={report.min_margin:.3e} failures={len(report.failures)}", file=out)
    for c in report.controls:
        print(f"control {c.entanglement}: B={c.value:.9f} violated={str(c.violated).lower()}", file=out)
    for f in report.failures:
        print(f"FAIL index={f.index} mu={np.round(f.mu, 6).tolist()} phase={f.phase:.6f} "
              f"class={f.entanglement} B={f.value:.12f}", file=out)
    if cfg.out:
        write_rows(cfg.out, [[s.index, str(s.entanglement), fmt(s.value), "3", str(s.violated).lower()]
                             for s in report.samples])
    return 0 if report.ok else 1


COMMANDS = {
    "lhv-bound": cmd_lhv_bound,
    "evaluate": cmd_evaluate,
    "scan": cmd_scan,
    "sample": cmd_sample,
    "werner": cmd_werner,
    "reduce-check": cmd_reduce_check,
    "gisin-sweep": cmd_gisin_sweep,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = resolve(argv)
        return COMMANDS[cfg.command](cfg, out)
    except SystemExit as exc:  # argparse
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except NumericalViolation as exc:
        print(f"numerical violation: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
