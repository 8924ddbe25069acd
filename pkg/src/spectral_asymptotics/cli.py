"""Command-line front end.

Every command writes a CSV table (header comment ``# spectral-asymptotics v1
<command>``) or, with ``--format json``, a summary holding the parameters,
headline numbers, tolerance metadata and the same rows.  Exit codes: 0 ok,
1 analysis error (divergence, budget, failed fit), 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _backend, asymderiv, heattrace, ideals, tauberian
from .errors import ConfigError, SpectralError, UsageError
from .rvfun import RVSpec, gamma
from .spectrum import Primes, build_spectrum, counterexample_blocks, parse_descriptor

COMMANDS = ("trace", "fit", "tauberian", "ideals", "derivatives", "primes", "counterexample", "report")
FORMAT_VERSION = "v1"
CLI_MAX_TERMS = 10**7
CLI_REL_TOL = 1e-12


class _UsageExit(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageExit(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    command: str
    spectrum: dict | None = None
    law: dict | None = None
    t_grid: np.ndarray | None = None
    lam_grid: np.ndarray | None = None
    eps_grid: np.ndarray | None = None
    output: str = "-"
    fmt: str = "csv"
    max_terms: int = CLI_MAX_TERMS
    rel_tol: float = CLI_REL_TOL
    seed: int = 0
    options: dict = field(default_factory=dict)


# ----------------------------------------------------------------- parsing


def parse_grid(text: str, name: str) -> np.ndarray:
    """``start:stop:per_decade`` (geometric), ``a,b,c`` (explicit) or a single number."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, per = float(parts[0]), float(parts[1]), int(parts[2])
            if not (0 < start < stop) or per < 1:
                raise UsageError(f"grid {name} = {text!r} is not strictly increasing from a positive start")
            return tauberian.geometric_grid(start, stop, per)
        values = np.array([float(v) for v in text.split(",") if v.strip()])
    except UsageError:
        raise
    except ValueError:
        raise UsageError(f"grid {name} = {text!r} is malformed") from None
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise UsageError(f"grid {name} = {text!r} is empty or not finite")
    d = np.diff(values)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise UsageError(f"grid {name} = {text!r} is not strictly monotone")
    return values


def _int_list(text: str, name: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{name} = {text!r} must be a comma-separated list of integers") from None


def _float_list(text: str, name: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{name} = {text!r} must be a comma-separated list of numbers") from None


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file of option values; flags override it")
    common.add_argument("--spectrum", help="spectrum descriptor, e.g. primes:1000000 or JSON")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    common.add_argument("--max-terms", type=int, default=CLI_MAX_TERMS)
    common.add_argument("--rel-tol", type=float, default=CLI_REL_TOL)
    common.add_argument("--seed", type=int, default=0)

    law = _Parser(add_help=False)
    law.add_argument("--p", type=float, default=None, help="index p of the law")
    law.add_argument("--r", type=float, default=0.0, help="log exponent r")
    law.add_argument("--k", type=int, default=None, help="log depth (default 1 when r != 0)")
    law.add_argument("--C", type=float, default=1.0, help="amplitude")
    law.add_argument("--mode", choices=("shifted", "raw"), default="shifted", help="iterated-log mode")

    parser = _Parser(prog="spectral-asymptotics", description="Heat-trace asymptotics of model spectra.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("trace", parents=[common], help="heat traces and trace norms on a t-grid")
    p.add_argument("--t", default=None)
    p.add_argument("--power", default="0", help="comma-separated powers n")

    p = sub.add_parser("fit", parents=[common], help="fit C t^-p (ln 1/t)^r to the heat trace")
    p.add_argument("--t", default="1e-5:1e-2:40")
    p.add_argument("--fix-p", type=float, default=None)
    p.add_argument("--synthetic", type=int, default=0, help="round-trip sweep over this many random laws")

    p = sub.add_parser("tauberian", parents=[common, law], help="Karamata ratio series")
    p.add_argument("--t", default="1e-5:1e-2:40")
    p.add_argument("--lam", default="1e2:1e6:10")
    p.add_argument("--c", type=float, default=None, help="liminf constant to check")
    p.add_argument("--slack", type=float, default=tauberian.DEFAULT_SLACK)

    p = sub.add_parser("ideals", parents=[common], help="Schatten/weak/Macaev prefix diagnostics")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--n", type=int, default=10**6, help="number of eigenvalue slots")
    p.add_argument("--inverse", action="store_true", help="use 1/|lam| as singular values")
    p.add_argument("--eps", default=None, help="eps grid for the zeta scan instead of prefix rows")

    p = sub.add_parser("derivatives", parents=[common], help="finite-difference checks of trace derivatives")
    p.add_argument("--t", default=None)
    p.add_argument("--n", default="1", help="comma-separated orders 1..4")
    p.add_argument("--h", type=float, default=None)

    p = sub.add_parser("primes", parents=[common], help="prime counting from the sieve")
    p.add_argument("--limit", type=int, default=10**6)
    p.add_argument("--lam", default=None)

    p = sub.add_parser("counterexample", parents=[common], help="block counterexample data")
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--c", default="2,3", help="constants for violation witnesses")

    p = sub.add_parser("report", parents=[common], help="trace.csv and fit.json for one spectrum")
    p.add_argument("--t", default="1e-4:1e-2:40")
    p.add_argument("--out-dir", default=".")
    return parser


def parse_config(argv: list[str]) -> RunConfig:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if getattr(ns, "config", None):
        try:
            with open(ns.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {ns.config!r}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[ns.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(loaded) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        sub.set_defaults(**loaded)
        ns = parser.parse_args(argv)
    return _to_config(ns)


def _to_config(ns) -> RunConfig:
    d = vars(ns).copy()
    cfg = RunConfig(command=d.pop("command"))
    d.pop("config", None)
    spectrum = d.pop("spectrum", None)
    if spectrum is not None:
        try:
            cfg.spectrum = spectrum if isinstance(spectrum, dict) else parse_descriptor(spectrum)
            build_spectrum(cfg.spectrum)
        except (SpectralError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid spectrum descriptor {spectrum!r}: {exc}") from None
    cfg.output = d.pop("out")
    cfg.fmt = d.pop("fmt")
    cfg.max_terms = d.pop("max_terms")
    cfg.rel_tol = d.pop("rel_tol")
    cfg.seed = d.pop("seed")
    if cfg.max_terms < 1 or not cfg.rel_tol > 0:
        raise UsageError("budgets must be positive: --max-terms >= 1 and --rel-tol > 0")
    if "t" in d:
        t = d.pop("t")
        if t is None:
            raise UsageError(f"{cfg.command} needs a t-grid: --t start:stop:per_decade or a list")
        cfg.t_grid = parse_grid(str(t), "--t")
    if d.get("lam") is not None:
        cfg.lam_grid = parse_grid(str(d.pop("lam")), "--lam")
    if d.get("eps") is not None:
        cfg.eps_grid = parse_grid(str(d.pop("eps")), "--eps")
    if cfg.command == "tauberian":
        if d.get("p") is None:
            raise UsageError("tauberian needs a law: --p (and optionally --r, --k, --C, --mode)")
        r = d.pop("r")
        k = d.pop("k")
        cfg.law = {"C": d.pop("C"), "p": d.pop("p"), "r": r, "k": (1 if r else 0) if k is None else k, "mode": d.pop("mode")}
    cfg.options = d
    return cfg


def _needs_spectrum(cfg: RunConfig):
    if cfg.spectrum is None:
        raise UsageError(f"{cfg.command} needs --spectrum")
    return build_spectrum(cfg.spectrum)


# ------------------------------------------------------------------ output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return x


@dataclass
class Result:
    columns: list[str]
    rows: list[list[Any]]
    headline: dict
    tail_certified: bool = True
    tolerances: dict = field(default_factory=dict)


def render_csv(command: str, res: Result) -> str:
    lines = [f"# spectral-asymptotics {FORMAT_VERSION} {command}", ",".join(res.columns)]
    lines += [",".join(_fmt(v) for v in row) for row in res.rows]
    return "\n".join(lines) + "\n"


def render_json(cfg: RunConfig, res: Result) -> str:
    summary = {
        "command": cfg.command,
        "parameters": _parameters(cfg),
        "headline_numbers": res.headline,
        "tolerances": res.tolerances,
        "tail_certified": bool(res.tail_certified),
        "columns": res.columns,
        "rows": res.rows,
    }
    return json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n"


def _parameters(cfg: RunConfig) -> dict:
    out = {"spectrum": cfg.spectrum, "law": cfg.law, "max_terms": cfg.max_terms, "rel_tol": cfg.rel_tol, "seed": cfg.seed}
    for name in ("t_grid", "lam_grid", "eps_grid"):
        g = getattr(cfg, name)
        if g is not None:
            out[name] = g
    out.update(cfg.options)
    return out


def _write(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- commands


def _cmd_trace(cfg: RunConfig) -> Result:
    s = _needs_spectrum(cfg)
    powers = _int_list(cfg.options["power"], "--power")
    rows, certified, worst_tail = [], True, 0.0
    for t in cfg.t_grid:
        for n in powers:
            tv = heattrace.trace_power(s, float(t), n, rel_tol=cfg.rel_tol, max_terms=cfg.max_terms)
            certified &= tv.certified
            worst_tail = max(worst_tail, tv.tail_bound / max(tv.norm_value, 1e-300))
            rows.append([float(t), n, tv.value.real, tv.value.imag, tv.norm_value, tv.truncation_index, tv.tail_bound, tv.certified])
    return Result(
        ["t", "n", "re", "im", "norm", "truncation_index", "tail_bound", "certified"],
        rows,
        {"points": len(rows), "max_relative_tail": worst_tail},
        certified,
        {"rel_tol": cfg.rel_tol},
    )


def _trace_samples(s, grid, cfg):
    out = []
    for t in grid:
        tv = heattrace.trace_power(s, float(t), 0, rel_tol=cfg.rel_tol, max_terms=cfg.max_terms)
        out.append((float(t), tv.value.real, tv.tail_bound, tv.certified))
    return out


def _cmd_fit(cfg: RunConfig) -> Result:
    if cfg.options.get("synthetic"):
        return _synthetic_sweep(cfg)
    s = _needs_spectrum(cfg)
    samples = _trace_samples(s, cfg.t_grid, cfg)
    fit = tauberian.fit_prc([(t, v) for t, v, _, _ in samples], fix_p=cfg.options.get("fix_p"))
    return Result(
        ["t", "theta", "tail_bound"],
        [[t, v, tb] for t, v, tb, _ in samples],
        {"p_hat": fit.p_hat, "r_hat": fit.r_hat, "C_hat": fit.C_hat, "residual": fit.residual, "n_points": fit.n_points},
        all(c for *_, c in samples),
        {"rel_tol": cfg.rel_tol, "fit_residual_rms": fit.residual},
    )


def _synthetic_sweep(cfg: RunConfig) -> Result:
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.t_grid
    rows, worst = [], 0.0
    for _ in range(int(cfg.options["synthetic"])):
        p, r, C = rng.uniform(0.3, 4.0), rng.uniform(-2.0, 2.0), rng.uniform(0.1, 10.0)
        theta = C * gamma(1 + p) * grid ** (-p) * np.log(1 / grid) ** r
        fit = tauberian.fit_prc(np.column_stack([grid, theta]))
        err = max(abs(fit.p_hat - p), abs(fit.r_hat - r), abs(fit.C_hat - C) / C)
        worst = max(worst, err)
        rows.append([p, r, C, fit.p_hat, fit.r_hat, fit.C_hat, err])
    return Result(
        ["p", "r", "C", "p_hat", "r_hat", "C_hat", "max_err"],
        rows,
        {"laws": len(rows), "worst_error": worst},
        True,
        {"seed": cfg.seed},
    )


def _law(cfg: RunConfig) -> RVSpec:
    L = cfg.law
    try:
        return RVSpec(C=L["C"], p=L["p"], r=L["r"], k=L["k"], log_mode=L["mode"])
    except (SpectralError, ValueError) as exc:
        raise UsageError(f"invalid law: {exc}") from None


def _cmd_tauberian(cfg: RunConfig) -> Result:
    s = _needs_spectrum(cfg)
    spec = _law(cfg)
    t_dec = cfg.t_grid[::-1] if cfg.t_grid[0] < cfg.t_grid[-1] else cfg.t_grid
    lam = cfg.lam_grid if cfg.lam_grid[0] < cfg.lam_grid[-1] else cfg.lam_grid[::-1]
    fwd = tauberian.karamata_forward(s, spec, t_dec)
    inv = tauberian.karamata_inverse(s, spec, lam)
    rows = [["forward", float(t), float(v)] for t, v in zip(t_dec, fwd)]
    rows += [["inverse", float(x), float(v)] for x, v in zip(lam, inv)]
    headline = {
        "forward_last": float(fwd[-1]),
        "forward_target": gamma(1.0 + spec.p) * spec.C,
        "inverse_last": float(inv[-1]),
        "inverse_target": spec.C,
    }
    if cfg.options.get("c") is not None:
        rep = tauberian.liminf_check(s, spec, cfg.options["c"], t_dec, lam, slack=cfg.options["slack"])
        headline["liminf"] = {
            "min_lambda_ratio": rep.min_lambda_ratio,
            "min_t_ratio": rep.min_t_ratio,
            "threshold": rep.threshold,
            "verdict": rep.verdict,
        }
    return Result(["kind", "x", "ratio"], rows, headline, True, {"rel_tol": cfg.rel_tol, "slack": cfg.options["slack"]})


def _cmd_ideals(cfg: RunConfig) -> Result:
    s = _needs_spectrum(cfg)
    p = cfg.options["p"]
    if cfg.eps_grid is not None:
        eps = cfg.eps_grid if cfg.eps_grid[0] > cfg.eps_grid[-1] else cfg.eps_grid[::-1]
        scan = ideals.zeta_eps_scan(s, p, eps)
        return Result(
            ["eps", "scan_value", "tail_bound"],
            [[pt.eps, pt.value, pt.tail_bound] for pt in scan],
            {"last_scan_value": scan[-1].value},
            True,
            {"power_sum_rel_tol": 1e-10},
        )
    runs = ideals.singular_value_runs(s, cfg.options["n"], cfg.options["inverse"])
    rep = ideals.ideal_report(p=p, runs=runs)
    table = ideals.prefix_table(ideals.RunProfile(runs[0], runs[1], p))
    headline = {
        "depth": rep.depth,
        "schatten_partial": rep.schatten_partial,
        "weak_quasinorm": rep.weak_quasinorm,
        "macaev_norm": rep.macaev_norm,
        "verdicts": {k: v.value for k, v in rep.verdicts.items()},
        "log_elasticity": {k: ev.log_elasticity for k, ev in rep.evidence.items()},
    }
    return Result(
        ["n", "schatten_partial", "weak_quasinorm", "macaev_norm"],
        [[int(r[0]), r[1], r[2], r[3]] for r in table],
        headline,
        True,
        {"verdict_elasticity": [ideals.BOUNDED_ELASTICITY, ideals.DIVERGING_ELASTICITY]},
    )


def _cmd_derivatives(cfg: RunConfig) -> Result:
    s = _needs_spectrum(cfg)
    orders = _int_list(cfg.options["n"], "--n")
    rows, worst = [], 0.0
    for t in cfg.t_grid:
        for n in orders:
            chk = asymderiv.fd_derivative_check(s, float(t), n, cfg.options.get("h"))
            worst = max(worst, chk.rel_err)
            rows.append([chk.t, chk.n, chk.analytic, chk.numeric, chk.rel_err])
    return Result(["t", "n", "analytic", "numeric", "rel_err"], rows, {"max_rel_err": worst}, True, {"rel_tol": cfg.rel_tol})


def _cmd_primes(cfg: RunConfig) -> Result:
    s = build_spectrum(cfg.spectrum) if cfg.spectrum else Primes(cfg.options["limit"])
    if not isinstance(s, Primes):
        raise UsageError("primes needs a primes spectrum")
    lam = cfg.lam_grid if cfg.lam_grid is not None else np.array([float(s.limit)])
    counts = s.counting_array(lam)
    rows = [[float(x), int(c)] for x, c in zip(lam, counts)]
    return Result(["lam", "count"], rows, {"limit": s.limit, "prime_count": s.available_slots}, True, {})


def _cmd_counterexample(cfg: RunConfig) -> Result:
    levels = cfg.options["levels"]
    blocks = counterexample_blocks(levels)
    bounds = ideals.counterexample_boundaries(levels)
    rows = [
        [b.ell, b.k_ell, str(b.value), float(b.value), b.multiplicity, str(row.partial_sum), row.macaev_ratio]
        for b, row in zip(blocks, bounds)
    ]
    wit = ideals.counterexample_witnesses(levels, _float_list(cfg.options["c"], "--c"))
    headline = {
        "macaev_at_boundaries_max": max(r.macaev_ratio for r in bounds),
        "macaev_limit": 1.0 / (2.0 * math.log(2.0)),
        "witnesses": [{"c": w.c, "n": w.n, "value": str(w.value), "bound": str(w.bound), "holds": w.holds} for w in wit],
    }
    return Result(
        ["ell", "k_ell", "value", "value_float", "multiplicity", "partial_sum", "macaev_ratio"],
        rows,
        headline,
        True,
        {"arithmetic": "exact rationals"},
    )


def _cmd_report(cfg: RunConfig) -> Result:
    s = _needs_spectrum(cfg)
    out_dir = cfg.options["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    samples = _trace_samples(s, cfg.t_grid, cfg)
    trace = Result(
        ["t", "theta", "tail_bound", "certified"],
        [[t, v, tb, c] for t, v, tb, c in samples],
        {},
        all(c for *_, c in samples),
    )
    fit = tauberian.fit_prc([(t, v) for t, v, _, _ in samples])
    headline = {"p_hat": fit.p_hat, "r_hat": fit.r_hat, "C_hat": fit.C_hat, "residual": fit.residual}
    fit_res = Result(["t", "theta"], [[t, v] for t, v, _, _ in samples], headline, trace.tail_certified, {"rel_tol": cfg.rel_tol})
    _write(os.path.join(out_dir, "trace.csv"), render_csv("report", trace))
    _write(os.path.join(out_dir, "fit.json"), render_json(cfg, fit_res))
    return fit_res


_DISPATCH = {
    "trace": _cmd_trace,
    "fit": _cmd_fit,
    "tauberian": _cmd_tauberian,
    "ideals": _cmd_ideals,
    "derivatives": _cmd_derivatives,
    "primes": _cmd_primes,
    "counterexample": _cmd_counterexample,
    "report": _cmd_report,
}


def run(cfg: RunConfig) -> int:
    """Dispatch ``cfg``; returns the exit code.  Analysis errors go to stderr."""
    try:
        res = _DISPATCH[cfg.command](cfg)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SpectralError, ArithmeticError, OverflowError, ValueError) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return 1
    text = render_json(cfg, res) if cfg.fmt == "json" else render_csv(cfg.command, res)
    _write(cfg.output, text)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        _backend.apply_thread_cap()
        cfg = parse_config(argv)
    except _UsageExit as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
