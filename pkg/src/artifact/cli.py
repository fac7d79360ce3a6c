"""Command-line front end.

A run is described by a flat config file with a single ``[command]`` header::

    [sweep]
    n = 2
    kappa = 1
    beta = 0.5, 30
    L = 1e2, 1e3, 1e4

Every command writes CSV files (plus a plain-text plotting stub) into the
output directory and prints one summary line per result row.
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance, experiments, hardy
from .eigen import (EigenError, ModelSpace, check_lemma21, count_curve, dirichlet_eigen,
                    effective_potential, first_dirichlet_eigen)
from .ode import IntegrationError, TailFitError, eval_warping, riccati_tail_fit, solve_warping
from .profiles import ProfileError, ProfileKind, eval_profile, make_profile

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ACCEPTANCE = 0, 1, 2, 3

COMMANDS = ("warp", "eigen", "count", "sweep", "hardy", "transplant", "verify")

# which command reaches which library operation (checked by a self-test)
COMMAND_OPS = {
    "make_profile": ("warp", "eigen", "count", "sweep", "hardy", "transplant"),
    "eval_profile": ("warp",),
    "solve_warping": ("warp", "eigen", "count", "sweep", "hardy", "transplant"),
    "eval_warping": ("warp",),
    "riccati_tail_fit": ("warp", "verify"),
    "effective_potential": ("eigen",),
    "first_dirichlet_eigen": ("eigen", "transplant", "verify"),
    "check_lemma21": ("eigen", "verify"),
    "count_eigenvalues_below": ("verify",),
    "count_curve": ("count", "sweep"),
    "hardy_test_quotient": ("hardy", "verify"),
    "hardy_first_eigenvalue": ("hardy", "verify"),
    "hardy_weight": ("hardy", "verify"),
    "verify_hardy_inequality": ("hardy", "verify"),
    "verify_prop22": ("verify",),
    "transplant_check": ("transplant", "verify"),
    "threshold_sweep": ("sweep", "verify"),
}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


# ------------------------------------------------------------------ schema

def _int(s: str) -> int:
    return int(s)


def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"{s!r} is not finite")
    return v


def _floats(s: str) -> list[float]:
    items = [x.strip() for x in s.split(",")]
    if not all(items):
        raise ValueError("empty list item")
    return [_float(x) for x in items]


def _ints(s: str) -> list[int]:
    return [int(x.strip()) for x in s.split(",")]


def _kind(s: str) -> str:
    return ProfileKind(s).value


@dataclass(frozen=True)
class Key:
    parse: object
    required: bool = False
    default: object = None
    check: object = None        # value -> error message or None
    type_name: str = "number"


def _positive(v):
    vals = v if isinstance(v, list) else [v]
    return None if all(x > 0 for x in vals) else "must be positive"


def _nonneg(v):
    vals = v if isinstance(v, list) else [v]
    return None if all(x >= 0 for x in vals) else "must be nonnegative"


def _dim(v):
    return None if v >= 2 else "must be >= 2"


def _stretch(v):
    return None if all(x > 2 for x in v) else "must exceed 2"


def _increasing(v):
    if any(x <= 0 for x in v):
        return "must be positive"
    return None if all(b > a for a, b in zip(v, v[1:])) else "must be strictly increasing"


def _criteria(v):
    return None if all(x in acceptance.CRITERIA for x in v) else "criteria must be in 1..9"


INT, FLOAT, FLOATS = "integer", "number", "comma-separated numbers"
_N = Key(_int, True, check=_dim, type_name=INT)
_PROFILE = {
    "kappa": Key(_float, True, check=_positive),
    "beta": Key(_float, True, check=_nonneg),
    "r_join": Key(_float, True, check=_positive),
}
COMMON = {
    "tol": Key(_float, False, 1e-8),
    "seed": Key(_int, False, 0, type_name=INT),
    "output_dir": Key(str, False, None, type_name="path"),
}
SCHEMAS = {
    "warp": {**_PROFILE,
             "r_max": Key(_float, True, check=_positive),
             "kind": Key(_kind, False, ProfileKind.MODEL_LOWER_BOUND.value, type_name="profile kind"),
             "fit_lo": Key(_float, False, None, _positive),
             "fit_hi": Key(_float, False, None, _positive)},
    "eigen": {"n": _N, **_PROFILE,
              "L": Key(_float, True, check=_positive),
              "index": Key(_int, False, 0, _nonneg, INT)},
    "count": {"n": _N, **_PROFILE,
              "L": Key(_floats, True, check=_increasing, type_name=FLOATS),
              "E": Key(_float, False, None),
              "eps_origin": Key(_float, False, 0.01, _positive)},
    "sweep": {"n": _N,
              "kappa": Key(_float, True, check=_positive),
              "beta": Key(_floats, True, check=_nonneg, type_name=FLOATS),
              "L": Key(_floats, True, check=_increasing, type_name=FLOATS),
              "eps_origin": Key(_float, False, 0.01, _positive)},
    "hardy": {"delta": Key(_floats, True, check=_positive, type_name=FLOATS),
              "k": Key(_floats, False, None, _stretch, FLOATS),
              "R": Key(_floats, False, [1.0], _positive, FLOATS),
              "n": Key(_int, False, None, _dim, INT),
              "kappa": Key(_float, False, 1.0, _positive),
              "beta": Key(_float, False, 0.0, _nonneg),
              "r_join": Key(_float, False, 1.0, _positive),
              "bumps": Key(_int, False, 0, _nonneg, INT),
              "r_max": Key(_float, False, 50.0, _positive)},
    "transplant": {"n": _N, **_PROFILE,
                   "target_kappa": Key(_float, True, check=_positive),
                   "target_beta": Key(_float, True, check=_nonneg),
                   "target_r_join": Key(_float, True, check=_positive),
                   "r_w": Key(_float, True, check=_positive),
                   "R": Key(_float, True, check=_positive)},
    "verify": {"criteria": Key(_ints, False, sorted(acceptance.CRITERIA), _criteria, "integers")},
}


@dataclass
class ExperimentConfig:
    command: str
    parameters: dict
    output_dir: Path = Path("out")
    tol: float = 1e-8
    seed: int = 0


def check_tol(tol: float) -> str | None:
    return None if 1e-14 < tol < 1e-4 else f"tol={tol} outside (1e-14, 1e-4)"


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every problem found."""
    cp = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                   interpolation=None, default_section="\0")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError:
        raise ConfigError(["missing [command] header"]) from None
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc.message.splitlines()[0]}"]) from None
    sections = cp.sections()
    if not sections:
        raise ConfigError(["missing [command] header"])
    if len(sections) > 1:
        raise ConfigError([f"expected one [command] header, got {', '.join(sections)}"])
    command = sections[0]
    if command not in SCHEMAS:
        raise ConfigError([f"unknown command {command!r} (choose from {', '.join(COMMANDS)})"])

    schema = {**SCHEMAS[command], **COMMON}
    raw = dict(cp[command])
    errors = [f"unknown key {k!r} for [{command}]" for k in raw if k not in schema]
    values = {}
    for name, key in schema.items():
        if name not in raw:
            if key.required:
                errors.append(f"missing required key {name!r}")
            else:
                values[name] = key.default
            continue
        try:
            v = key.parse(raw[name])
        except ValueError:
            errors.append(f"{name}: expected {key.type_name}, got {raw[name]!r}")
            continue
        msg = key.check(v) if key.check else None
        if msg:
            errors.append(f"{name} {msg}")
        values[name] = v
    if isinstance(values.get("tol"), float) and check_tol(values["tol"]):
        errors.append(check_tol(values["tol"]))
    errors += _cross_checks(command, values)
    if errors:
        raise ConfigError(errors)
    tol, seed, out = values.pop("tol"), values.pop("seed"), values.pop("output_dir")
    return ExperimentConfig(command, values, Path(out) if out else Path("out"), tol, seed)


def _profile_error(kappa, beta, r_join) -> str | None:
    if not all(isinstance(v, float) for v in (kappa, beta, r_join)):
        return None             # already reported
    try:
        make_profile(kappa, beta, r_join)
    except ProfileError as exc:
        return str(exc)
    return None


def _cross_checks(command: str, v: dict) -> list[str]:
    errs = []
    if command in ("warp", "eigen", "count", "transplant"):
        errs.append(_profile_error(v.get("kappa"), v.get("beta"), v.get("r_join")))
    if command == "transplant":
        errs.append(_profile_error(v.get("target_kappa"), v.get("target_beta"), v.get("target_r_join")))
    if command == "hardy" and v.get("bumps"):
        if v.get("n") is None:
            errs.append("bumps requires n")
        errs.append(_profile_error(v.get("kappa"), v.get("beta"), v.get("r_join")))
    if command == "hardy" and isinstance(v.get("k"), list) and isinstance(v.get("delta"), list):
        if len(v["k"]) not in (1, len(v["delta"])):
            errs.append("k must be a single value or one value per delta")
    if command == "warp" and (v.get("fit_lo") is None) != (v.get("fit_hi") is None):
        errs.append("fit_lo and fit_hi must be given together")
    if command == "count" and isinstance(v.get("L"), list) and len(v["L"]) < 1:
        errs.append("L must not be empty")
    if command == "sweep" and isinstance(v.get("L"), list) and len(v["L"]) >= 1:
        if v["L"][-1] / v["L"][0] < 100 * (1 - 1e-12):
            errs.append("L must span at least two decades")
    return [e for e in errs if e]


# ------------------------------------------------------------------- running

@dataclass
class Table:
    name: str
    header: list
    rows: list = field(default_factory=list)
    status: list = field(default_factory=list)      # one entry per row, "ok" or an error

    def add(self, row, status="ok"):
        self.rows.append(row)
        self.status.append(status)

    @property
    def failed(self) -> bool:
        return any(s != "ok" for s in self.status)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / f"{self.name}.csv"
        if self.failed:
            experiments.write_csv(path, self.header + ["status"],
                                  [r + [s] for r, s in zip(self.rows, self.status)])
        else:
            experiments.write_csv(path, self.header, self.rows)
        return path


@dataclass
class RunReport:
    exit_code: int
    files: list
    lines: list


SOLVER_ERRORS = (EigenError, IntegrationError, TailFitError, RuntimeError, FloatingPointError)


def _blank(n):
    return [""] * n


def _profile(p: dict, prefix: str = "", kind=ProfileKind.MODEL_LOWER_BOUND):
    return make_profile(p[prefix + "kappa"], p[prefix + "beta"], p[prefix + "r_join"], kind)


def _cmd_warp(cfg: ExperimentConfig, threads: int):
    p = cfg.parameters
    prof = make_profile(p["kappa"], p["beta"], p["r_join"], p["kind"])
    w = solve_warping(prof, p["r_max"], min(cfg.tol, 1e-10))
    t = Table("warp", ["t", "log_j", "s", "curvature"])
    for ti, lj, si in zip(w.grid, w.log_j, w.s):
        t.add([float(ti), float(lj), float(si), eval_profile(prof, float(ti))])
    lj, s = eval_warping(w, w.r_max)
    lines = [f"warp r_max={w.r_max!r} log_j={lj!r} s={s!r} points={w.grid.size}"]
    tables = [t]
    if p["fit_lo"] is not None:
        fit = Table("tail_fit", ["t_lo", "t_hi", "kappa_hat", "beta_hat"])
        try:
            k_hat, b_hat = riccati_tail_fit(w, p["fit_lo"], p["fit_hi"])
            fit.add([p["fit_lo"], p["fit_hi"], k_hat, b_hat])
            lines.append(f"tail_fit kappa_hat={k_hat!r} beta_hat={b_hat!r}")
        except (TailFitError, ValueError) as exc:
            fit.add([p["fit_lo"], p["fit_hi"], "", ""], f"error: {exc}")
            lines.append(f"tail_fit failed: {exc}")
        tables.append(fit)
    return tables, lines


def _cmd_eigen(cfg: ExperimentConfig, threads: int):
    p = cfg.parameters
    m = ModelSpace(p["n"], solve_warping(_profile(p), p["L"], min(cfg.tol, 1e-10)))
    if p["index"] == 0:
        res = first_dirichlet_eigen(m, p["L"], cfg.tol)
    else:
        res = dirichlet_eigen(m, p["L"], cfg.tol, p["index"])
    lemma = check_lemma21(res) if p["index"] == 0 else None
    summary = Table("eigen", ["n", "kappa", "beta", "r_join", "L", "index", "eigenvalue",
                              "node_count", "boundary_residual", "lemma21", "potential_at_L"])
    summary.add([p["n"], p["kappa"], p["beta"], p["r_join"], p["L"], p["index"], res.eigenvalue,
                 res.node_count, res.boundary_residual,
                 "" if lemma is None else int(lemma.passed), effective_potential(m, p["L"])])
    fn = Table("eigenfunction", ["r", "h1"])
    for r, h in res.h_samples:
        fn.add([float(r), float(h)])
    line = f"eigen n={p['n']} L={p['L']!r} index={p['index']} eigenvalue={res.eigenvalue!r}"
    if lemma is not None:
        line += f" lemma21={'pass' if lemma.passed else 'fail'}"
    return [summary, fn], [line]


def _cmd_count(cfg: ExperimentConfig, threads: int):
    p = cfg.parameters
    m = ModelSpace(p["n"], solve_warping(_profile(p), p["L"][-1], min(cfg.tol, 1e-10)))
    E = p["E"] if p["E"] is not None else m.essential_bottom - 1e-9
    t = Table("count", ["n", "kappa", "beta", "L", "E", "count", "classification"])
    curve = count_curve(m, E, p["L"], p["eps_origin"])
    lines = []
    for L, c in curve.points:
        t.add([p["n"], p["kappa"], p["beta"], L, E, c, curve.classification.value])
        lines.append(f"count n={p['n']} beta={p['beta']!r} L={L!r} count={c}")
    return [t], lines


def _sweep_cell(args):
    n, kappa, beta, L_list, eps, tol = args
    try:
        return experiments.sweep_rows(experiments.threshold_sweep(n, kappa, [beta], L_list, eps, tol)), "ok"
    except SOLVER_ERRORS + (ValueError,) as exc:
        return None, f"error: {type(exc).__name__}: {exc}"


def _pool_map(fn, cells, threads: int):
    if threads <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, cells))       # map keeps config order


def _cmd_sweep(cfg: ExperimentConfig, threads: int):
    p = cfg.parameters
    cells = [(p["n"], p["kappa"], b, p["L"], p["eps_origin"], min(cfg.tol, 1e-10)) for b in p["beta"]]
    t = Table("sweep", list(experiments.SWEEP_HEADER))
    lines = []
    for (n, kappa, beta, L_list, *_), (rows, status) in zip(cells, _pool_map(_sweep_cell, cells, threads)):
        if rows is None:
            for L in L_list:
                t.add([n, kappa, beta, L, "", "", experiments.predicted_side(beta, n).value], status)
            lines.append(f"sweep n={n} beta={beta!r} {status}")
            continue
        for row in rows:
            t.add(row)
        lines.append(f"sweep n={n} beta={beta!r} counts={[r[4] for r in rows]} "
                     f"classification={rows[0][5]} predicted={rows[0][6]}")
    return [t], lines


def _hardy_cell(args):
    delta, k, R = args
    try:
        prob = hardy.HardyProblem(R, k, delta)
        num, bound = hardy.hardy_test_quotient(prob)
        return [delta, k, R, num, bound, hardy.hardy_first_eigenvalue(prob)], "ok"
    except SOLVER_ERRORS as exc:
        return [delta, k, R, "", "", ""], f"error: {type(exc).__name__}: {exc}"


def _cmd_hardy(cfg: ExperimentConfig, threads: int):
    p = cfg.parameters
    ks = p["k"]
    cells = []
    for i, delta in enumerate(p["delta"]):
        if ks is None:
            k = float(math.ceil(hardy.minimal_stretch(delta)) + 1)
        else:
            k = ks[i] if len(ks) > 1 else ks[0]
        cells += [(delta, k, R) for R in p["R"]]
    t = Table("hardy", ["delta", "k", "R", "numerator", "bound", "lambda1"])
    lines = []
    for row, status in _pool_map(_hardy_cell, cells, threads):
        t.add(row, status)
        if status == "ok":
            lines.append(f"hardy delta={row[0]!r} k={row[1]!r} R={row[2]!r} numerator={row[3]!r} "
                         f"bound={row[4]!r} lambda1={row[5]!r}")
        else:
            lines.append(f"hardy delta={row[0]!r} k={row[1]!r} R={row[2]!r} {status}")
    tables = [t]
    if p["bumps"]:
        tables.append(_hardy_bumps(cfg, lines))
    return tables, lines


def _hardy_bumps(cfg: ExperimentConfig, lines: list):
    p = cfg.parameters
    prof = make_profile(p["kappa"], p["beta"], p["r_join"], ProfileKind.RADIAL_CURVATURE)
    man = hardy.make_manifold(p["n"], prof, p["r_max"], min(cfg.tol, 1e-10))
    rng = np.random.default_rng(cfg.seed)
    t = Table("hardy_inequality", ["n", "kappa", "beta", "center", "width", "amplitude",
                                   "weight_at_center", "lhs", "rhs_interior", "rhs_boundary",
                                   "holds"])
    for _ in range(p["bumps"]):
        u = acceptance.draw_bump(rng, 2.0, p["r_max"])
        c = hardy.verify_hardy_inequality(man, 1.0, u)
        t.add([p["n"], p["kappa"], p["beta"], u.center, u.width, u.amplitude,
               hardy.hardy_weight(man, u.center), c.lhs, c.rhs_interior, c.rhs_boundary,
               int(c.holds())])
    held = sum(r[-1] for r in t.rows)
    lines.append(f"hardy_inequality n={p['n']} bumps={p['bumps']} holds={held}/{p['bumps']}")
    return t


def _cmd_transplant(cfg: ExperimentConfig, threads: int):
    p = cfg.parameters
    rep = experiments.transplant_check(
        p["n"], _profile(p), _profile(p, "target_", ProfileKind.RADIAL_CURVATURE), p["r_w"], p["R"],
        cfg.tol)
    t = Table("transplant", list(experiments.TRANSPLANT_HEADER))
    t.add(experiments.transplant_row(rep))
    return [t], [f"transplant quotient={rep.quotient!r} lambda_d={rep.lambda_d_model!r} "
                 f"margin={rep.margin!r} correction={rep.correction!r} "
                 f"passed={rep.passed()}"]


def _criterion_cell(args):
    number, seed, tol = args
    return acceptance.run_criterion(number, seed, tol)


def _cmd_verify(cfg: ExperimentConfig, threads: int):
    tol = min(cfg.tol, 1e-9)
    cells = [(k, cfg.seed, tol) for k in cfg.parameters["criteria"]]
    results = _pool_map(_criterion_cell, cells, threads)
    summary = Table("acceptance", ["criterion", "name", "passed", "detail"])
    tables, lines = [summary], []
    for res in results:
        summary.add([res.number, res.name, int(res.passed), res.detail])
        lines.append(res.line())
        if res.header:
            t = Table(f"criterion_{res.number}", list(res.header))
            for row in res.rows:
                t.add(list(row))
            tables.append(t)
    failed = not all(r.passed for r in results)
    return tables, lines, failed


HANDLERS = {"warp": _cmd_warp, "eigen": _cmd_eigen, "count": _cmd_count, "sweep": _cmd_sweep,
            "hardy": _cmd_hardy, "transplant": _cmd_transplant}


PLOT_HINTS = {
    "warp": ("t", "s", None),
    "tail_fit": None,
    "eigen": None,
    "eigenfunction": ("r", "h1", None),
    "count": ("L", "count", None),
    "sweep": ("L", "count", "beta"),
    "hardy": ("R", "lambda1", "delta"),
    "hardy_inequality": ("center", "lhs", None),
    "transplant": None,
    "acceptance": None,
}


def _plot_stub(tables) -> str:
    lines = ["# plotting stub: column references for any plotting tool"]
    for t in tables:
        lines.append(f"file {t.name}.csv")
        lines.append(f"  columns: {', '.join(t.header)}")
        hint = PLOT_HINTS.get(t.name)
        if hint:
            x, y, group = hint
            lines.append(f"  plot: x={x} y={y}" + (f" one series per {group}" if group else ""))
    return "\n".join(lines) + "\n"


def run(config: ExperimentConfig, threads: int = 1, echo=print) -> RunReport:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    failed = False
    try:
        if config.command == "verify":
            tables, lines, failed = _cmd_verify(config, threads)
        else:
            tables, lines = HANDLERS[config.command](config, threads)
    except (experiments.HypothesisError, ProfileError) as exc:
        echo(f"{config.command}: hypothesis not met: {exc}")
        return RunReport(EXIT_CONFIG, [], [str(exc)])
    except SOLVER_ERRORS + (ValueError,) as exc:
        msg = f"{config.command} failed for {config.parameters}: {type(exc).__name__}: {exc}"
        echo(msg)
        return RunReport(EXIT_SOLVER, [], [msg])
    files = [t.write(out) for t in tables]
    stub = out / f"plot_{config.command}.txt"
    stub.write_text(_plot_stub(tables))
    files.append(stub)
    for line in lines:
        echo(line)
    if failed:
        code = EXIT_ACCEPTANCE
    elif any(t.failed for t in tables):
        code = EXIT_SOLVER
    else:
        code = EXIT_OK
    return RunReport(code, files, lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="experiment config file")
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("--tol", type=float, help="solver tolerance (overrides the config)")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for independent cells")
    ap.add_argument("--seed", type=int, help="seed for randomized draws (overrides the config)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.tol is not None:
        if check_tol(args.tol):
            print(f"config error: {check_tol(args.tol)}", file=sys.stderr)
            return EXIT_CONFIG
        cfg.tol = args.tol
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.output_dir = Path(args.out)
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, args.threads).exit_code


def entry() -> None:
    sys.exit(main())
