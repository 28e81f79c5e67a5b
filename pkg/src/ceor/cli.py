"""Command-line entry point.

    ceor zeta   --s "0.5+14.134725i"
    ceor zeros  --from 0 --to 100 [--csv zeros.csv]
    ceor count  --from 0 --to 100
    ceor ceor   --t-min 10 --t-max 30 --samples 2000 --seed 42 --out r.json [--trace trace.csv]
    ceor sweep  --from 0 --to 50 [--extend 10] --out sweep.json [--csv tiles.csv]
    ceor decode [--model toy.json] --p 0.9 --k 3 --max-len 5

Every subcommand accepts ``--config file.json``; explicit flags override the
file, which overrides built-in defaults.  The seed falls back to ``CEOR_SEED``.

Exit status: 0 success, 1 usage error, 2 numeric/domain error, 3 when a CEOR
run stops on a negative score sum (counterexample report written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .ce_engine import CeParams, StopReason
from .decoding import DecodeParams, MarkovModel, beam_decode, load_toy_model
from .errors import CeorError
from .rh_search import StripRegion, Tolerances, empirical_frequency, run_ceor
from .strip_sweep import extend_sweep, sweep_region
from .zero_locator import count_zeros_region, find_zeros_online, zeros_to_csv
from .zeta_eval import ZetaEvalConfig, format_complex, parse_complex, zeta

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_COUNTEREXAMPLE = 3

_CE_DEFAULTS = {
    "samples": 2000,
    "rho": 0.01,
    "v": 10.0,
    "c": 0.7,
    "l": 5,
    "max_rounds": 50,
    "eps_zero": 1e-6,
    "eps_line": 0.02,
    "refine_radius": 0.1,
    "jitter": 0.0,
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "zeta": {"s": None, "series_terms": 64, "abs_tolerance": 1e-12},
    "zeros": {"t_from": 0.0, "t_to": 100.0, "step": 0.05},
    "count": {"t_from": 0.0, "t_to": 100.0},
    "ceor": {"t_min": 10.0, "t_max": 30.0, "sigma_min": 0.0, "sigma_max": 1.0, **_CE_DEFAULTS},
    "sweep": {"t_from": 0.0, "t_to": 10.0, "extend": 0, **_CE_DEFAULTS},
    "decode": {"model": None, "start": None, "p": 0.9, "k": 3, "max_len": 5, "end_token": None},
}
# settings that only say where output goes and never enter a report
_IO_KEYS = {"out", "csv", "trace", "config", "threads"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_ce_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", "-M", dest="samples", type=int, help="samples per round (M)")
    p.add_argument("--rho", type=float, help="elite quantile")
    p.add_argument("--v", type=float, help="favourability factor")
    p.add_argument("--c", type=float, help="smoothing constant")
    p.add_argument("--l", type=int, help="stability window")
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--eps-zero", type=float, help="|zeta| threshold for an off-line zero")
    p.add_argument("--eps-line", type=float, help="half-width of the critical-line band")
    p.add_argument("--refine-radius", type=float)
    p.add_argument("--jitter", type=float, help="elite resampling jitter (0 = copy elites verbatim)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ceor", description="Cross-entropy search of the zeta critical strip.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file of settings; flags override it")
    common.add_argument("--out", type=Path, help="write the JSON report here")
    common.add_argument("--seed", type=int, help="RNG seed (fallback: $CEOR_SEED, then 0)")
    common.add_argument("--threads", type=int, help="worker cap (default: CPU count)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("zeta", parents=[common], help="evaluate zeta(s)")
    p.add_argument("--s", help='complex argument, e.g. "0.5+14.134725i"')
    p.add_argument("--series-terms", type=int)
    p.add_argument("--abs-tolerance", type=float)

    for name, helptext in (("zeros", "list critical-line zeros"), ("count", "compare scan and smooth counts")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--from", dest="t_from", type=float)
        p.add_argument("--to", dest="t_to", type=float)
        if name == "zeros":
            p.add_argument("--step", type=float)
            p.add_argument("--csv", type=Path, help="write t,residual,bracket_width rows")

    p = sub.add_parser("ceor", parents=[common], help="run the CE search on one region")
    p.add_argument("--t-min", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--sigma-min", type=float)
    p.add_argument("--sigma-max", type=float)
    p.add_argument("--trace", type=Path, help="per-sample CSV trace")
    _add_ce_flags(p)

    p = sub.add_parser("sweep", parents=[common], help="unit-tile sweep with per-tile CE runs")
    p.add_argument("--from", dest="t_from", type=float)
    p.add_argument("--to", dest="t_to", type=float)
    p.add_argument("--extend", type=int, help="append this many tiles after the initial sweep")
    p.add_argument("--csv", type=Path, help="per-tile CSV")
    _add_ce_flags(p)

    p = sub.add_parser("decode", parents=[common], help="top-p + beam decoding demo")
    p.add_argument("--model", type=Path, help="Markov model JSON (default: bundled toy model)")
    p.add_argument("--start", nargs="+", help="start tokens (default: the model's start)")
    p.add_argument("--p", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--max-len", type=int)
    p.add_argument("--end-token")
    return parser


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    """Merge built-in defaults, the ``--config`` file and explicit flags."""
    cmd = args.command
    resolved = dict(DEFAULTS[cmd])
    if args.config is not None:
        try:
            loaded = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(resolved) - {"seed"} - _IO_KEYS
        if unknown:
            raise UsageError(f"unknown config keys for {cmd}: {sorted(unknown)}")
        resolved.update({k: v for k, v in loaded.items() if k not in _IO_KEYS})
    for key, value in vars(args).items():
        if key in resolved and value is not None:
            resolved[key] = str(value) if isinstance(value, Path) else value
    if args.seed is not None:
        resolved["seed"] = args.seed
    elif "seed" not in resolved:
        env = os.environ.get("CEOR_SEED")
        try:
            resolved["seed"] = int(env) if env else 0
        except ValueError:
            raise UsageError(f"CEOR_SEED must be an integer, got {env!r}") from None
    return resolved


def _ce_objects(cfg: dict) -> tuple[CeParams, Tolerances]:
    params = CeParams(
        M=int(cfg["samples"]),
        rho=float(cfg["rho"]),
        v=float(cfg["v"]),
        c=float(cfg["c"]),
        l=int(cfg["l"]),
        max_rounds=int(cfg["max_rounds"]),
        seed=int(cfg["seed"]),
    ).validate()
    tol = Tolerances(float(cfg["eps_zero"]), float(cfg["eps_line"]), float(cfg["refine_radius"]))
    return params, tol


def _write(path: Optional[Path], text: str) -> None:
    if path is not None:
        path.write_text(text, encoding="utf-8", newline="\n")


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _cmd_zeta(cfg: dict, args) -> int:
    if cfg["s"] is None:
        raise UsageError("zeta: --s is required")
    s = parse_complex(cfg["s"]) if isinstance(cfg["s"], str) else complex(cfg["s"])
    value = zeta(s, ZetaEvalConfig(int(cfg["series_terms"]), float(cfg["abs_tolerance"])))
    print(format_complex(value, 15))
    _write(args.out, _dump({"command": "zeta", "config": cfg, "s": format_complex(s, 17),
                            "re": value.real, "im": value.imag}))
    return EXIT_OK


def _cmd_zeros(cfg: dict, args) -> int:
    zeros = find_zeros_online(float(cfg["t_from"]), float(cfg["t_to"]), float(cfg["step"]))
    print(len(zeros))
    for z in zeros:
        print(f"{z.t:.12f}")
    _write(args.csv, zeros_to_csv(zeros))
    _write(args.out, _dump({"command": "zeros", "config": cfg, "count": len(zeros),
                            "zeros": [{"t": z.t, "residual": z.residual, "bracket_width": z.bracket_width}
                                      for z in zeros]}))
    return EXIT_OK


def _cmd_count(cfg: dict, args) -> int:
    rc = count_zeros_region(float(cfg["t_from"]), float(cfg["t_to"]))
    doc = {"command": "count", "config": cfg, "t_lo": rc.t_lo, "t_hi": rc.t_hi, "n_online": rc.n_online,
           "n_formula": rc.n_formula, "consistent": rc.consistent}
    print(f"n_online={rc.n_online} n_formula={rc.n_formula} consistent={str(rc.consistent).lower()}")
    _write(args.out, _dump(doc))
    return EXIT_OK


def _cmd_ceor(cfg: dict, args) -> int:
    params, tol = _ce_objects(cfg)
    region = StripRegion(float(cfg["t_min"]), float(cfg["t_max"]), float(cfg["sigma_min"]), float(cfg["sigma_max"]))
    trace = None
    try:
        if args.trace is not None:
            trace = args.trace.open("w", encoding="utf-8", newline="")
        report = run_ceor(region, params, tol, jitter=float(cfg["jitter"]), trace=trace)
    finally:
        if trace is not None:
            trace.close()
    doc = {"command": "ceor", "config": cfg, **report.to_dict()}
    doc["frequency"] = empirical_frequency(report.tracker)
    _write(args.out, _dump(doc))
    print(f"stop_reason={report.stop_reason.value} rounds={len(report.rounds)} "
          f"zeros={len(report.zeros)} counterexamples={len(report.counterexamples)} "
          f"mu/n={report.tracker.mu}/{report.tracker.n}")
    for z in report.zeros:
        print(f"{z.t:.12f}")
    return EXIT_COUNTEREXAMPLE if report.stop_reason is StopReason.NEGATIVE_SUM else EXIT_OK


def _cmd_sweep(cfg: dict, args) -> int:
    params, tol = _ce_objects(cfg)
    workers = args.threads or os.cpu_count() or 1
    report = sweep_region(float(cfg["t_from"]), float(cfg["t_to"]), params, tol,
                          jitter=float(cfg["jitter"]), workers=workers)
    if int(cfg["extend"]) > 0:
        report = extend_sweep(report, int(cfg["extend"]), workers=workers)
    _write(args.out, _dump({"command": "sweep", "config": cfg, **report.to_dict()}))
    _write(args.csv, report.to_csv())
    print(f"tiles={len(report.tiles)} total_online={report.total_online} total_formula={report.total_formula} "
          f"one_shot={report.one_shot_online} consistent={str(report.consistent).lower()}")
    return EXIT_OK


def _cmd_decode(cfg: dict, args) -> int:
    model = MarkovModel.from_json(cfg["model"]) if cfg["model"] else load_toy_model()
    try:
        start = [model.token_id(str(t)) for t in cfg["start"]] if cfg["start"] else list(model.start)
        end = model.token_id(str(cfg["end_token"])) if cfg["end_token"] is not None else None
    except ValueError as exc:
        raise UsageError(f"decode: unknown token ({exc})") from None
    params = DecodeParams(float(cfg["p"]), int(cfg["k"]), int(cfg["max_len"]), end)
    paths = beam_decode(model, start, params)
    rows = []
    for path in paths:
        text = " ".join(model.vocab[t] for t in path.tokens)
        rows.append({"tokens": [model.vocab[t] for t in path.tokens], "prob": path.prob,
                     "log_prob": path.log_path_prob, "raw_log_prob": path.raw_log_prob})
        print(f"{path.prob:.10f}  {text}")
    _write(args.out, _dump({"command": "decode", "config": {**cfg, "model": str(cfg["model"]) if cfg["model"] else None},
                            "paths": rows}))
    return EXIT_OK


_COMMANDS = {
    "zeta": _cmd_zeta,
    "zeros": _cmd_zeros,
    "count": _cmd_count,
    "ceor": _cmd_ceor,
    "sweep": _cmd_sweep,
    "decode": _cmd_decode,
}


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
        return _COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    except (CeorError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(dispatch())
