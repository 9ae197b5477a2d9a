"""Batch command-line front end.

Configuration is a flat ``key=value`` text file with dotted section
prefixes (``params.alpha=0.8``, ``grid.nx=64``, ``solve.system=gauged``).
Blank lines and ``#`` comments are ignored; unknown keys are rejected.
Command-line flags and ``--set key=value`` override the file.

Exit codes: 0 success, 1 input or validation error, 2 documented refusal,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
import numpy as np
import scipy

from . import __version__, lie, reductions, studies, symcheck
from .errors import NumericalError, TFKSError, ValidationError
from .frac_ops import TimeSeries
from .model import (GridSpec, ModelParams, residual_gauged, residual_original, residual_to_csv,
                    trajectory_to_csv)
from .pde_solver import SolverConfig, solve_gauged, solve_original

ENV_OUTPUT = "TFKS_OUTPUT_DIR"
COMMANDS = ("solve", "reduce", "symmetry", "algebra", "convergence")

SECTION_DEFAULTS: dict[str, dict[str, object]] = {
    "solve": {"system": "gauged", "path": "gauge", "source": "march", "initial": "bump",
              "amplitude": 0.2, "laplacian": "local", "V0": 1.0, "A": 1.0, "tolerance": 1e-8},
    "reduce": {"case": "I", "speed": 0.0, "formal": False, "v0": 0.5, "w0": 0.0, "T": 1.0,
               "dt": 1e-3, "slope0": 0.0, "amplitude": 0.01, "profile": "gaussian",
               "zeta_max": 3.0, "nzeta": 121},
    "symmetry": {"regime": "generic", "generator": "all", "levels": "101,201,401", "nx": 32},
    "convergence": {"study": "caputo", "alpha": 0.5, "levels": "", "target_low": math.nan,
                    "target_high": math.nan},
}
TOP_DEFAULTS: dict[str, object] = {"output_dir": "", "seed": 0}


def _dataclass_defaults(cls) -> dict[str, object]:
    return {f.name: f.default for f in dataclasses.fields(cls) if f.init}


_TYPED_SECTIONS = {"params": ModelParams, "grid": GridSpec, "solver": SolverConfig}


def known_keys() -> dict[str, object]:
    keys: dict[str, object] = dict(TOP_DEFAULTS)
    for section, cls in _TYPED_SECTIONS.items():
        for name, default in _dataclass_defaults(cls).items():
            keys[f"{section}.{name}"] = default
    for section, defaults in SECTION_DEFAULTS.items():
        for name, default in defaults.items():
            keys[f"{section}.{name}"] = default
    return keys


def _coerce(key: str, raw: str, default: object) -> object:
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ValidationError(f"config key {key}: cannot parse {raw!r} as {type(default).__name__}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass
class RunConfig:
    params: ModelParams
    grid: GridSpec
    solver: SolverConfig
    sections: dict[str, dict[str, object]]
    output_dir: str
    seed: int
    raw: dict[str, str] = field(default_factory=dict)

    def section(self, name: str) -> dict[str, object]:
        return self.sections[name]

    def to_text(self) -> str:
        """Every resolved key in sorted order."""
        flat = {"output_dir": self.output_dir, "seed": self.seed}
        for section, obj in (("params", self.params), ("grid", self.grid), ("solver", self.solver)):
            for name in _dataclass_defaults(type(obj)):
                flat[f"{section}.{name}"] = getattr(obj, name)
        for section, values in self.sections.items():
            for name, value in values.items():
                flat[f"{section}.{name}"] = value
        lines = []
        for key in sorted(flat):
            value = flat[key]
            if isinstance(value, float):
                value = repr(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def build_config(raw: dict[str, str]) -> RunConfig:
    keys = known_keys()
    unknown = sorted(set(raw) - set(keys))
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
    values = {k: _coerce(k, v, keys[k]) for k, v in raw.items()}
    typed = {}
    for section, cls in _TYPED_SECTIONS.items():
        kwargs = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith(section + ".")}
        for name, value in kwargs.items():
            if isinstance(value, int) and not isinstance(value, bool):
                default = keys[f"{section}.{name}"]
                if isinstance(default, float):
                    kwargs[name] = float(value)
        typed[section] = cls(**kwargs)
    sections = {}
    for section, defaults in SECTION_DEFAULTS.items():
        sec = dict(defaults)
        for name in defaults:
            key = f"{section}.{name}"
            if key in values:
                sec[name] = values[key]
        sections[section] = sec
    return RunConfig(typed["params"], typed["grid"], typed["solver"], sections,
                     str(values.get("output_dir", "")), int(values.get("seed", 0)),
                     dict(raw))


# ---------------------------------------------------------------------------
# output helpers


def _versions() -> list[str]:
    return [f"tfks {__version__}", f"python {platform.python_version()}",
            f"numpy {np.__version__}", f"scipy {scipy.__version__}", f"mpmath {mpmath.__version__}"]


def write_manifest(out: Path, command: str, cfg: RunConfig, summary: list[str], wall: float) -> None:
    lines = [f"command: {command}",
             f"rerun: tfks {command} --config config.cfg --out <dir>",
             *(f"version: {v}" for v in _versions()),
             *(f"result: {s}" for s in summary),
             "config:"]
    lines += [f"  {line}" for line in cfg.to_text().splitlines()]
    lines.append(f"wall_time_s: {wall:.3f}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    explicit = "".join(f"{k}={cfg.raw[k]}\n" for k in sorted(cfg.raw) if k != "output_dir")
    (out / "config.cfg").write_text(explicit, encoding="utf-8")


def _gnuplot_surface(csv_name: str, title: str) -> str:
    return (f"set datafile separator ','\n"
            f"set key autotitle columnhead\n"
            f"set title '{title}'\n"
            f"set xlabel 't'\nset ylabel 'x'\n"
            f"splot '{csv_name}' using 1:2:3 with points pt 7 ps 0.3 title 'field1', \\\n"
            f"      '{csv_name}' using 1:2:4 with points pt 7 ps 0.3 title 'field2'\n")


def _gnuplot_curves(csv_name: str, xcol: int, ycols: list[tuple[int, str]], xlabel: str,
                    logscale: bool = False) -> str:
    head = "set datafile separator ','\nset key autotitle columnhead\n"
    if logscale:
        head += "set logscale xy\n"
    head += f"set xlabel '{xlabel}'\n"
    plots = ", \\\n     ".join(f"'{csv_name}' using {xcol}:{c} with linespoints title '{t}'"
                                for c, t in ycols)
    return head + "plot " + plots + "\n"


def _resolve_out(cfg: RunConfig, command: str, flag: str | None) -> Path:
    if flag:
        out = Path(flag)
    elif cfg.output_dir:
        out = Path(cfg.output_dir)
    else:
        out = Path(os.environ.get(ENV_OUTPUT, "tfks_output")) / command
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# commands


def _initial_fields(cfg: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    g = cfg.grid
    sec = cfg.section("solve")
    amp = float(sec["amplitude"])
    s = (g.x - g.x0) / (g.x1 - g.x0)
    kind = sec["initial"]
    if g.boundary == "dirichlet":
        base = np.sin(math.pi * s)
    else:
        k = 2.0 * math.pi if g.boundary == "periodic" else math.pi
        base = np.cos(k * s)
    if kind == "bump":
        if g.boundary == "dirichlet":
            return base.copy(), 0.5 * base
        return 1.0 + amp * base, 1.0 + 0.5 * amp * base
    if kind == "flat":
        if g.boundary == "dirichlet":
            raise ValidationError("flat initial data is incompatible with dirichlet boundaries")
        return np.ones(g.nx), 0.5 * np.ones(g.nx)
    if kind == "random":
        rng = np.random.default_rng(cfg.seed)
        coef = rng.uniform(-amp, amp, size=(2, 3))
        modes = np.array([np.cos(2.0 * math.pi * (m + 1) * s) for m in range(3)]) \
            if g.boundary != "dirichlet" else np.array([np.sin(math.pi * (m + 1) * s) for m in range(3)])
        offset = 0.0 if g.boundary == "dirichlet" else 1.0
        return offset + coef[0] @ modes, offset + coef[1] @ modes
    raise ValidationError(f"unknown solve.initial {kind!r}; expected bump, flat or random")


def cmd_solve(cfg: RunConfig, out: Path) -> list[str]:
    sec = cfg.section("solve")
    p, g = cfg.params, cfg.grid
    system, path, source = sec["system"], sec["path"], sec["source"]
    if system not in ("gauged", "original"):
        raise ValidationError(f"solve.system must be gauged or original, got {system!r}")
    summary: list[str] = []
    lap_mode = sec["laplacian"]

    def residual(traj):
        if traj.frame == "gauged":
            return residual_gauged(traj, p)
        return residual_original(traj, p, laplacian_mode=lap_mode)

    if source == "exact":
        sol = reductions.ExactLinearSolution(float(sec["V0"]), float(sec["A"]), p)
        traj = reductions.exact_linear_solution(sol).trajectory(
            g, "gauged" if system == "gauged" else "original")
        runs = {"": traj}
    elif source == "march":
        u0, c0 = _initial_fields(cfg)
        if system == "gauged":
            runs = {"": solve_gauged(p, g, u0, c0, cfg.solver)}
        elif path == "both":
            runs = {"_gauge": solve_original(p, g, u0, c0, cfg.solver, path="gauge"),
                    "_direct": solve_original(p, g, u0, c0, cfg.solver, path="direct")}
        else:
            runs = {"": solve_original(p, g, u0, c0, cfg.solver, path=path)}
    else:
        raise ValidationError(f"solve.source must be march or exact, got {source!r}")

    worst = 0.0
    for suffix, traj in runs.items():
        report = residual(traj)
        (out / f"traj{suffix}.csv").write_text(trajectory_to_csv(traj))
        (out / f"residual{suffix}.csv").write_text(residual_to_csv(report, g))
        (out / f"plot{suffix}.gp").write_text(_gnuplot_surface(f"traj{suffix}.csv", f"{system}{suffix}"))
        sup1, sup2 = report.sup
        worst = max(worst, sup1, sup2)
        summary.append(f"residual{suffix} sup eq1={sup1:.6e} eq2={sup2:.6e}")
    if len(runs) == 2:
        a, b = runs.values()
        diff = float(max(np.max(np.abs(a.first - b.first)), np.max(np.abs(a.second - b.second))))
        summary.append(f"gauge vs direct sup difference={diff:.6e}")
    if source == "exact":
        tol = float(sec["tolerance"])
        summary.append(f"exact-solution residual {'below' if worst < tol else 'above'} tolerance {tol:g}")
        if not worst < tol:
            raise NumericalError(f"exact-solution residual {worst:.3e} exceeds tolerance {tol:g}")
    return summary


def _time_curves_csv(v: TimeSeries, w: TimeSeries) -> str:
    lines = ["t,field1,field2,frame"]
    lines += [f"{t:.17g},{a:.17g},{b:.17g},gauged" for t, a, b in zip(v.times, v.values, w.values)]
    return "\n".join(lines) + "\n"


def _profile_csv(var: str, x: np.ndarray, V: np.ndarray, W: np.ndarray) -> str:
    lines = [f"t,{var},field1,field2,frame"]
    lines += [f"0,{a:.17g},{b:.17g},{c:.17g},gauged" for a, b, c in zip(x, V, W)]
    return "\n".join(lines) + "\n"


def _newton_csv(history: list[float]) -> str:
    return "iteration,residual\n" + "".join(f"{i},{r:.17g}\n" for i, r in enumerate(history))


def cmd_reduce(cfg: RunConfig, out: Path) -> list[str]:
    sec = cfg.section("reduce")
    p, g = cfg.params, cfg.grid
    case = reductions.ReductionCase(reductions.parse_case(str(sec["case"])),
                                    speed=float(sec["speed"]), formal=bool(sec["formal"]))
    record = reductions.reduce(case, p)
    text = record.to_text()
    (out / "reduced.txt").write_text(text)
    sys.stdout.write(text)
    tag = case.tag
    summary = [f"case {tag.value} ({tag.name})"]
    CaseTag = reductions.CaseTag
    if tag in (CaseTag.GenericTranslation, CaseTag.UntemperedTranslation, CaseTag.DegenerateLinear):
        if tag is CaseTag.DegenerateLinear:
            n = int(round(float(sec["T"]) / float(sec["dt"])))
            v = TimeSeries(0.0, float(sec["dt"]), np.full(n + 1, float(sec["v0"])))
        else:
            v = reductions.solve_fractional_logistic(p, float(sec["v0"]), float(sec["T"]),
                                                     float(sec["dt"]), slope0=float(sec["slope0"]))
        w = reductions.solve_w_ode(v, p, float(sec["w0"]))
        (out / "curves.csv").write_text(_time_curves_csv(v, w))
        (out / "plot.gp").write_text(_gnuplot_curves("curves.csv", 1, [(2, "v"), (3, "w")], "t"))
        summary.append(f"v(T)={v.values[-1]:.12g} w(T)={w.values[-1]:.12g}")
    elif tag is CaseTag.SteadyState or (tag is CaseTag.TravelingWave and case.formal):
        if not math.isfinite(p.K0) or p.kappa == 0:
            raise ValidationError("profile solves need finite K0 and kappa > 0")
        rng = np.random.default_rng(cfg.seed)
        amp = float(sec["amplitude"])
        gv = p.K0 * (1.0 + amp * rng.uniform(-1.0, 1.0, g.nx))
        gw = (p.K0 / p.kappa) * (1.0 + amp * rng.uniform(-1.0, 1.0, g.nx))
        if tag is CaseTag.SteadyState:
            res = reductions.solve_steady_state(p, g, gv, gw, cfg.solver.newton_tol,
                                                cfg.solver.newton_max_iter)
            var = "x"
        else:
            res = record.solver(g, gv, gw, cfg.solver.newton_tol, cfg.solver.newton_max_iter)
            var = "xi"
        (out / "profiles.csv").write_text(_profile_csv(var, g.x, res.V, res.W))
        (out / "newton.csv").write_text(_newton_csv(res.residual_history))
        (out / "plot.gp").write_text(_gnuplot_curves("profiles.csv", 2, [(3, "V"), (4, "W")], var))
        summary.append(f"newton iterations={res.iterations} residual={res.residual:.6e}")
    elif tag is CaseTag.TravelingWave:
        amp = float(sec["amplitude"])
        base_v = p.K0 if math.isfinite(p.K0) else 1.0
        base_w = base_v / p.kappa if p.kappa > 0 else 0.0

        def V(s):
            return base_v * (1.0 + amp * np.sin(s))

        def W(s):
            return base_w * (1.0 + amp * np.cos(s))

        e1, e2 = record.evaluator(V, W, g.x, g.T, g.nt)
        lines = ["t,xi,eq1,eq2"]
        for k, tk in enumerate(np.linspace(0.0, g.T, g.nt)):
            for i, xi in enumerate(g.x):
                lines.append(f"{tk:.17g},{xi:.17g},{e1[k, i]:.17g},{e2[k, i]:.17g}")
        (out / "tw_residual.csv").write_text("\n".join(lines) + "\n")
        summary.append(f"test-profile residual sup eq1={np.max(np.abs(e1)):.6e} eq2={np.max(np.abs(e2)):.6e}")
    else:  # SimilarityScaling
        if p.D_c != 0:
            summary.append("D_c != 0: the chemical equation does not close in zeta; no curves written")
        else:
            profile = sec["profile"]
            shapes = {"gaussian": lambda z: np.exp(-z * z), "constant": lambda z: 1.0 + 0.0 * z,
                      "quadratic": lambda z: z * z}
            if profile not in shapes:
                raise ValidationError(f"reduce.profile must be one of {sorted(shapes)}")
            zmax = float(sec["zeta_max"])
            zeta = np.linspace(-zmax, zmax, int(sec["nzeta"]))
            Vz = shapes[profile](zeta)
            Wz = reductions.solve_similarity_w(shapes[profile], p, zeta)
            (out / "curves.csv").write_text(_profile_csv("zeta", zeta, Vz, Wz))
            (out / "plot.gp").write_text(_gnuplot_curves("curves.csv", 2, [(3, "V"), (4, "W")], "zeta"))
            summary.append(f"W(0)={Wz[len(zeta) // 2]:.12g}")
    return summary


def _levels(text) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in str(text).split(",") if s.strip())
    except ValueError:
        raise ValidationError(f"cannot parse refinement levels {text!r}") from None


def cmd_symmetry(cfg: RunConfig, out: Path) -> list[str]:
    sec = cfg.section("symmetry")
    regimes = [r.value for r in lie.Regime] if sec["regime"] == "all" else [sec["regime"]]
    custom = any(k.startswith("params.") for k in cfg.raw)
    levels = _levels(sec["levels"])
    rows = []
    for reg in regimes:
        setups = symcheck.standard_studies(reg, cfg.params if custom else None, levels, int(sec["nx"]))
        if sec["generator"] != "all":
            setups = [s for s in setups if s.name == sec["generator"]]
            if not setups:
                raise ValidationError(f"no generator named {sec['generator']!r} in regime {reg}")
        rows += [symcheck.run_study(s, cfg.solver) for s in setups]
    text = symcheck.table_text(rows)
    (out / "symmetry.csv").write_text(symcheck.table_csv(rows))
    (out / "symmetry.txt").write_text(text)
    sys.stdout.write(text)
    return [f"{r.setup.regime} {r.setup.name}: {r.verdict}" for r in rows]


def cmd_algebra(regime: str, lam: float) -> str:
    alg = lie.algebra(regime, lam)
    return lie.describe(alg)


def cmd_convergence(cfg: RunConfig, out: Path) -> list[str]:
    sec = cfg.section("convergence")
    name = sec["study"]
    if name not in studies.STUDIES:
        raise ValidationError(f"unknown study {name!r}; expected one of {sorted(studies.STUDIES)}")
    kwargs = {}
    levels = _levels(sec["levels"])
    if levels:
        kwargs["levels"] = levels
    if name == "caputo":
        kwargs["alpha"] = float(sec["alpha"])
    result = studies.STUDIES[name](**kwargs)
    lo, hi = float(sec["target_low"]), float(sec["target_high"])
    if math.isfinite(lo) or math.isfinite(hi):
        result = dataclasses.replace(result, target=(lo if math.isfinite(lo) else -math.inf,
                                                     hi if math.isfinite(hi) else math.inf))
    (out / "convergence.csv").write_text(result.to_csv())
    (out / "plot.gp").write_text(_gnuplot_curves("convergence.csv", 1, [(2, "error")], "step", True))
    lo, hi = result.target
    line = (f"{result.name}: fitted order {result.order:.4f}, target [{lo:g}, {hi:g}], "
            f"finest error {result.errors[-1]:.6e}")
    print(line)
    if not result.in_window:
        raise NumericalError(f"fitted order {result.order:.4f} outside the target window [{lo:g}, {hi:g}]")
    return [line]


_RUNNERS = {"solve": cmd_solve, "reduce": cmd_reduce, "symmetry": cmd_symmetry,
            "convergence": cmd_convergence}


# ---------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tfks", description="Tempered fractional Keller-Segel toolkit.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="flat key=value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--out", help=f"output directory (default: ${ENV_OUTPUT}/<command>)")
        p.add_argument("--sweep", action="append", default=[], metavar="KEY=V1,V2",
                       help="run the cartesian product of values, one subdirectory per job")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
        return p

    s = common(sub.add_parser("solve", help="march the system and write trajectory/residual CSVs"))
    s.add_argument("--system", choices=("gauged", "original"))
    s.add_argument("--path", choices=("gauge", "direct", "both"))
    s.add_argument("--exact", action="store_true", help="evaluate the closed-form solution instead")

    r = common(sub.add_parser("reduce", help="print a reduced system and solve it where possible"))
    r.add_argument("--case")
    r.add_argument("--speed", type=float)
    r.add_argument("--formal", action="store_true")

    y = common(sub.add_parser("symmetry", help="numerical symmetry refinement table"))
    y.add_argument("--regime")
    y.add_argument("--generator")

    a = sub.add_parser("algebra", help="print the symmetry algebra of a regime")
    a.add_argument("--regime", default="generic")
    a.add_argument("--lam", type=float, default=0.5)

    c = common(sub.add_parser("convergence", help="empirical order study"))
    c.add_argument("--study")
    return ap


_FLAG_KEYS = {
    "solve": {"system": "solve.system", "path": "solve.path"},
    "reduce": {"case": "reduce.case", "speed": "reduce.speed"},
    "symmetry": {"regime": "symmetry.regime", "generator": "symmetry.generator"},
    "convergence": {"study": "convergence.study"},
}


def _raw_config(ns) -> dict[str, str]:
    raw: dict[str, str] = {}
    if ns.config:
        path = Path(ns.config)
        if not path.is_file():
            raise ValidationError(f"config file {path} not found")
        raw.update(parse_config_text(path.read_text(), str(path)))
    for flag, key in _FLAG_KEYS.get(ns.command, {}).items():
        value = getattr(ns, flag, None)
        if value is not None:
            raw[key] = str(value)
    if ns.command == "solve" and ns.exact:
        raw["solve.source"] = "exact"
    if ns.command == "reduce" and ns.formal:
        raw["reduce.formal"] = "true"
    for item in ns.set:
        if "=" not in item:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    return raw


def run_once(command: str, raw: dict[str, str], out_flag: str | None) -> tuple[Path, list[str]]:
    start = time.perf_counter()
    cfg = build_config(raw)
    out = _resolve_out(cfg, command, out_flag)
    summary = _RUNNERS[command](cfg, out)
    write_manifest(out, command, cfg, summary, time.perf_counter() - start)
    return out, summary


def _sweep_jobs(raw: dict[str, str], sweeps: list[str]) -> list[tuple[str, dict[str, str]]]:
    axes = []
    for item in sweeps:
        if "=" not in item:
            raise ValidationError(f"--sweep expects KEY=V1,V2,..., got {item!r}")
        key, values = item.split("=", 1)
        vals = [v.strip() for v in values.split(",") if v.strip()]
        if not vals:
            raise ValidationError(f"--sweep {key} has no values")
        axes.append((key.strip(), vals))
    jobs = []
    for i, combo in enumerate(itertools.product(*(vals for _, vals in axes))):
        job = dict(raw)
        label = []
        for (key, _), value in zip(axes, combo):
            job[key] = value
            label.append(f"{key}={value}")
        jobs.append((f"job_{i:03d}_" + "_".join(label), job))
    return jobs


def _job_entry(args):
    command, raw, out = args
    try:
        path, summary = run_once(command, raw, out)
        return 0, str(path), summary
    except TFKSError as exc:
        return exc.exit_code, out, [f"error: {exc}"]


def main(argv: list[str] | None = None) -> int:
    try:
        ns = _parser().parse_args(argv)
        if ns.command == "algebra":
            sys.stdout.write(cmd_algebra(ns.regime, ns.lam))
            return 0
        raw = _raw_config(ns)
        if not ns.sweep:
            out, _ = run_once(ns.command, raw, ns.out)
            print(f"wrote {out}")
            return 0
        if ns.jobs < 1:
            raise ValidationError("--jobs must be >= 1")
        root = _resolve_out(build_config(raw), ns.command, ns.out)
        jobs = [(ns.command, job, str(root / name)) for name, job in _sweep_jobs(raw, ns.sweep)]
        if ns.jobs == 1:
            results = [_job_entry(j) for j in jobs]
        else:
            with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
                results = list(pool.map(_job_entry, jobs))
        code = 0
        for status, path, summary in results:
            print(f"{path}: {'ok' if status == 0 else 'failed'}; " + "; ".join(summary))
            code = max(code, status)
        return code
    except TFKSError as exc:
        print(f"tfks: error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
