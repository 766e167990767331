"""Command-line front end: ``wtgf <subcommand> [options]``.

Every command writes one JSON report with the keys ``command``, ``config``,
``results`` and ``diagnostics``.  Floats are rounded to 9 significant digits;
each rate also carries ``bits_hex`` (``float.hex``) so it can be compared
bit-for-bit with a library call using the echoed config.  Wall times live
only under ``diagnostics``, so ``results`` is byte-identical across runs with
the same inputs.

Exit codes: 0 success, 2 invalid input, 3 infeasible or refused computation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as B
from .channels import (
    DIRECTIONS,
    ErasureParams,
    ParallelSourcesChannel,
    StateChannel,
    WtgfChannel,
    classify_pair,
    make_erasure_wtgf,
)
from .errors import BudgetExceeded, HypothesisError, ModelError, SchemeInfeasible
from .optimize import MODES, RateReport, SearchConfig, maximize
from .probkit import JointPmf, Kernel
from .specfile import SpecError, parse_channel_spec

EXIT_OK, EXIT_INVALID, EXIT_REFUSED = 0, 2, 3
SIG_DIGITS = 9


class Refused(Exception):
    """The computation was declined or produced no feasible answer."""

    def __init__(self, message: str, payload=None):
        super().__init__(message)
        self.payload = payload


# ---------------------------------------------------------------------------
# report encoding


def fmt(x: float):
    """A float rounded to 9 significant digits (non-finite values become strings)."""
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return float(f"{x:.{SIG_DIGITS}g}") + 0.0


def to_json(obj):
    """Recursively convert results to JSON-ready values with 9-digit floats."""
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return bool(obj) if isinstance(obj, np.bool_) else obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist())
    if isinstance(obj, JointPmf):
        return {"variables": [n for n, _ in obj.variables], "mass": to_json(obj.mass)}
    if isinstance(obj, Kernel):
        return {"inputs": list(obj.input_names), "outputs": list(obj.output_names), "table": to_json(obj.table)}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_json(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if f.name != "joint"}
    if isinstance(obj, dict):
        return {str(k): to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_json(v) for v in obj]
    raise TypeError(f"cannot encode {type(obj).__name__}")


def rate_payload(rv: B.RateValue) -> dict:
    return {
        "bits": None if rv.bits is None else fmt(rv.bits),
        "bits_hex": None if rv.bits is None else float(rv.bits).hex(),
        "feasible": rv.feasible,
        "binding_constraint": rv.binding_constraint,
        "terms": to_json(rv.terms),
    }


def report_payload(rep: RateReport) -> dict:
    return {
        "objective": rep.objective,
        "best_bits": None if rep.best_bits is None else fmt(rep.best_bits),
        "bits_hex": None if rep.best_bits is None else float(rep.best_bits).hex(),
        "feasible": rep.feasible,
        "label": rep.label,
        "branch": rep.branch,
        "rate": rate_payload(rep.rate_value) if rep.rate_value is not None else None,
        "caps": to_json(rep.caps),
        "evaluations": rep.evaluations,
        "per_restart_bests": to_json(rep.per_restart_bests),
        "best_factors": to_json(rep.best_factors),
    }


# ---------------------------------------------------------------------------
# argument parsing


def parse_caps(text: str | None) -> dict:
    """``"Q=3,U=2"`` -> ``{"Q": 3, "U": 2}``."""
    if not text:
        return {}
    caps = {}
    for part in text.split(","):
        name, sep, value = part.partition("=")
        name = name.strip()
        if not sep or name not in ("Q", "U", "V", "T"):
            raise ValueError(f"bad cap {part!r}; use NAME=INT with NAME in Q, U, V, T")
        try:
            caps[name] = int(value)
        except ValueError:
            raise ValueError(f"cap {name} needs an integer, got {value!r}") from None
    return caps


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a fraction: {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--channel", help="channel file (JSON)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=64)
    common.add_argument("--grid", type=_fraction, default=Fraction(1, 8), help="grid step, e.g. 1/8")
    common.add_argument("--caps", default="", help="auxiliary alphabet caps, e.g. Q=3,U=2")
    common.add_argument("--mode", choices=MODES, default="random_restart")
    common.add_argument("--out", help="write the report here instead of standard output")
    common.add_argument("--tolerance", type=float, default=1e-9, help="row-sum tolerance for channel files")
    common.add_argument("--max-sweeps", type=int, default=200)
    common.add_argument("--full-caps", action="store_true", help="use the full cardinality bounds")
    common.add_argument("--u-equals-x", action="store_true", help="force U = X")
    common.add_argument("--grid-budget", type=int, default=10**7)

    p = _Parser(prog="wtgf", description="Secrecy and secret-key rate bounds for wiretap channels "
                                         "with generalized feedback.")
    p.add_argument("--version", action="version", version=f"wtgf {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("classify", parents=[common], help="degradedness and less-noisy verdicts")
    s = sub.add_parser("inner-kg", parents=[common], help="maximize the key-generation inner bound")
    s.add_argument("--branch", choices=("both", "kg1", "kg2"), default="both")
    sub.add_parser("sk-inner", parents=[common], help="maximize the secret-key inner bound")
    s = sub.add_parser("outer", parents=[common], help="best-found outer bound (parallel channels)")
    s.add_argument("--kind", choices=("secrecy", "sk"), default="secrecy")
    s = sub.add_parser("special-case", parents=[common], help="closed-form capacity of a special case")
    s.add_argument("--case", choices=B.SPECIAL_CASES, required=True)
    s.add_argument("--assume-hypothesis", action="store_true", help="skip the channel-class check")
    s.add_argument("--probes", type=int, default=512)
    sub.add_parser("thm5", parents=[common], help="perfect output feedback rate")
    sub.add_parser("thm6", parents=[common], help="causal state information rate")
    s = sub.add_parser("erasure", parents=[common], help="erasure model with public state feedback")
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--delta-e", type=float, required=True)
    for name, helptext in (("simulate", "run block-Markov sessions"),
                           ("leakage", "exact or Monte Carlo leakage of a tiny code")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--n", type=int, required=True, help="blocklength")
        s.add_argument("--b", type=int, required=True, help="number of blocks")
        s.add_argument("--r0", type=float, default=0.0)
        s.add_argument("--r1", type=float, default=0.0)
        s.add_argument("--eps1", type=float, default=0.10)
        s.add_argument("--eps1-tilde", type=float, default=0.15)
        s.add_argument("--eps2", type=float, default=0.10)
        s.add_argument("--eps2-tilde", type=float, default=0.15)
        s.add_argument("--eps-prime", type=float, default=0.05)
        s.add_argument("--aux", choices=("wiretap", "search"), default="wiretap",
                       help="wiretap: U = X uniform with Q, V, T constant; search: best inner_kg1 factors")
        s.add_argument("--codebook-seed", type=int, default=None, help="defaults to --seed")
    s = sub.choices["simulate"]
    s.add_argument("--sessions", type=int, default=1)
    s.add_argument("--deterministic", action="store_true", help="lowest-index encoder tie-breaks")
    s.add_argument("--trace", help="write one JSON line per block of every session")
    s = sub.choices["leakage"]
    s.add_argument("--method", choices=("exact", "mc", "both"), default="exact")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--deterministic-encoder", action="store_true",
                   help="acknowledge lowest-index tie-breaks (required for exact enumeration)")
    return p


def search_config(args) -> SearchConfig:
    return SearchConfig(seed=args.seed, restarts=args.restarts, grid_step=args.grid, max_sweeps=args.max_sweeps,
                        aux_cardinalities=parse_caps(args.caps), mode=args.mode, full_caps=args.full_caps,
                        u_equals_x=args.u_equals_x, grid_budget=args.grid_budget)


def _load(args, *kinds):
    if not args.channel:
        raise ValueError(f"{args.command} needs --channel")
    ch = parse_channel_spec(args.channel, args.tolerance)
    if kinds and not isinstance(ch, kinds):
        names = " or ".join(k.__name__ for k in kinds)
        raise ModelError(f"{args.command} needs a {names}, the channel file holds a {type(ch).__name__}")
    return ch


# ---------------------------------------------------------------------------
# commands


def _classify_payload(rep) -> dict:
    return {
        "degraded_y_to_z": rep.degraded_y_to_z,
        "degraded_z_to_y": rep.degraded_z_to_y,
        "less_noisy": {d: {"verdict": v.verdict, "reason": v.reason, "witness": to_json(v.witness)}
                       for d, v in rep.less_noisy_verdicts.items()},
        "degrading_map": to_json(rep.degrading_map),
    }


def cmd_classify(args, cfg):
    ch = _load(args, WtgfChannel, ParallelSourcesChannel)
    probes = 512
    if isinstance(ch, WtgfChannel):
        rep = classify_pair(ch.marginal_kernel("Y"), ch.marginal_kernel("Z"), probes, args.seed)
        return {"channel": _classify_payload(rep), "directions": list(DIRECTIONS)}
    main = classify_pair(ch.main_marginal("Yc"), ch.main_marginal("Zc"), probes, args.seed)
    src = classify_pair(ch.source_kernel("Ys"), ch.source_kernel("Zs"), probes, args.seed,
                        input_pmf=ch.yhats_pmf())
    return {"channel": _classify_payload(main), "source": _classify_payload(src),
            "same_side_information": ch.same_side_information(), "directions": list(DIRECTIONS)}


def _maximize(objective, ch, cfg) -> RateReport:
    rep = maximize(objective, ch, cfg)
    if not rep.feasible:
        raise Refused("no feasible point found", report_payload(rep))
    return rep


def cmd_inner_kg(args, cfg):
    ch = _load(args, WtgfChannel, ParallelSourcesChannel)
    objective = {"both": "inner_kg", "kg1": "inner_kg1", "kg2": "inner_kg2"}[args.branch]
    return _maximize(objective, ch, cfg)


def cmd_sk_inner(args, cfg):
    return _maximize("sk_inner", _load(args, WtgfChannel, ParallelSourcesChannel), cfg)


def cmd_outer(args, cfg):
    return _maximize(f"outer_{args.kind}", _load(args, ParallelSourcesChannel), cfg)


def cmd_special_case(args, cfg):
    ps = _load(args, ParallelSourcesChannel)
    rep = B.special_case_capacity(args.case, ps, cfg, assume_hypothesis=args.assume_hypothesis,
                                  probes=args.probes)
    if not rep.feasible:
        raise Refused("no feasible point found", report_payload(rep))
    return rep


def cmd_thm5(args, cfg):
    return _maximize("thm5", _load(args, WtgfChannel), cfg)


def cmd_thm6(args, cfg):
    return _maximize("thm6", _load(args, StateChannel), cfg)


def cmd_erasure(args, cfg):
    p = ErasureParams(args.delta, args.delta_e)
    closed = B.erasure_rates(p)
    ch = make_erasure_wtgf(p)
    construction = {}
    for branch, fn in (("kg1", B.rate_kg1), ("kg2", B.rate_kg2)):
        w = B.erasure_mixing_weight(p, branch)
        construction[branch] = {"weight": fmt(w), **rate_payload(fn(ch, B.erasure_factorization(ch, w)))}
    return {
        "delta": fmt(p.delta),
        "delta_e": fmt(p.delta_e),
        "inner_kg": fmt(closed["inner_kg"]),
        "inner_kg_hex": float(closed["inner_kg"]).hex(),
        "capacity": fmt(closed["capacity"]),
        "capacity_hex": float(closed["capacity"]).hex(),
        "construction": construction,
    }


def _scheme(args, cfg):
    from .simkit import build_codebook, derive_scheme_rates

    ch = _load(args, WtgfChannel)
    if args.aux == "search":
        f = _maximize("inner_kg1", ch, cfg).best_factors
    else:
        nx = ch.x.size
        f = B.FactorizationKG.wiretap(ch, np.eye(nx) / nx)
    rates = derive_scheme_rates(f, ch, args.n, args.b, r0=args.r0, r1=args.r1, eps1=args.eps1,
                                eps1_tilde=args.eps1_tilde, eps2=args.eps2, eps2_tilde=args.eps2_tilde,
                                eps_prime=args.eps_prime)
    seed = args.seed if args.codebook_seed is None else args.codebook_seed
    cb = build_codebook(rates, f, seed, ch)
    scheme = {
        "rates": to_json(rates),
        "sizes": to_json(cb.sizes),
        "message_rate": to_json(rates.message_rate()),
        "codebook_seed": seed,
        "typicality": {"encoder": fmt(cb.enc_delta), "decoder": fmt(cb.dec_delta), "codebook": fmt(cb.cb_delta)},
    }
    return ch, cb, scheme


def cmd_simulate(args, cfg):
    from .simkit import run_session

    if args.sessions < 1:
        raise ValueError("--sessions must be at least 1")
    ch, cb, scheme = _scheme(args, cfg)
    traces = [run_session(cb, ch, seed=args.seed + i, deterministic=args.deterministic)
              for i in range(args.sessions)]
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for tr in traces:
                for rec in tr.export():
                    fh.write(json.dumps(to_json({"session_seed": tr.seed, **rec}), sort_keys=True) + "\n")
    ok = sum(tr.success for tr in traces)
    return {
        "scheme": scheme,
        "sessions": args.sessions,
        "session_seeds": [args.seed, args.seed + args.sessions - 1],
        "successes": ok,
        "success_rate": fmt(ok / args.sessions),
        "keys_agree": sum(tr.keys_agree for tr in traces),
    }


def cmd_leakage(args, cfg):
    from .simkit import exact_leakage_tiny, monte_carlo_leakage

    if args.method in ("exact", "both") and not args.deterministic_encoder:
        raise Refused("exact leakage enumerates a lowest-index tie-break encoder; pass --deterministic-encoder")
    ch, cb, scheme = _scheme(args, cfg)
    out = {"scheme": scheme}
    if args.method in ("exact", "both"):
        res = exact_leakage_tiny(cb, ch, deterministic_encoder=args.deterministic_encoder)
        out["exact"] = {**to_json(res), "bits_hex": float(res.exact_bits).hex()}
    if args.method in ("mc", "both"):
        if args.trials < 1:
            raise ValueError("--trials must be at least 1")
        res = monte_carlo_leakage(cb, ch, args.trials, args.seed)
        out["monte_carlo"] = {**to_json(res), "bits_hex": float(res.exact_bits).hex()}
    return out


COMMANDS = {
    "classify": cmd_classify,
    "inner-kg": cmd_inner_kg,
    "sk-inner": cmd_sk_inner,
    "outer": cmd_outer,
    "special-case": cmd_special_case,
    "thm5": cmd_thm5,
    "thm6": cmd_thm6,
    "erasure": cmd_erasure,
    "simulate": cmd_simulate,
    "leakage": cmd_leakage,
}


# ---------------------------------------------------------------------------
# entry point


def _config_echo(args, cfg) -> dict:
    echo = {k: to_json(v) for k, v in sorted(vars(args).items()) if k not in ("command", "out")}
    echo["search"] = to_json(cfg.echo()) if cfg is not None else None
    return echo


def _emit(report: dict, out) -> None:
    text = json.dumps(report, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def execute(argv=None) -> int:
    """Run one command line; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    report = {"command": list(argv if argv is not None else sys.argv[1:]),
              "config": None, "results": None, "diagnostics": {}}
    t0 = time.perf_counter()
    code = EXIT_OK
    cfg = None
    try:
        cfg = search_config(args)
        report["config"] = _config_echo(args, cfg)
        res = COMMANDS[args.command](args, cfg)
        if isinstance(res, RateReport):
            report["results"] = report_payload(res)
            report["diagnostics"].update(to_json(res.diagnostics))
            report["diagnostics"]["search_wall_time"] = fmt(res.wall_time)
        else:
            report["results"] = res
    except (HypothesisError, SchemeInfeasible, BudgetExceeded, Refused) as exc:
        code = EXIT_REFUSED
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, Refused):
            report["results"] = exc.payload
        witness = getattr(exc, "witness", None)
        if witness is not None:
            report["error"]["witness"] = to_json(witness)
    except (SpecError, ModelError, ValueError) as exc:
        code = EXIT_INVALID
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    report["diagnostics"]["wall_time"] = fmt(time.perf_counter() - t0)
    report["exit_code"] = code
    if report["config"] is None and cfg is None:
        report["config"] = {k: to_json(v) for k, v in sorted(vars(args).items()) if k not in ("command", "out")}
    try:
        _emit(report, args.out)
    except OSError as exc:
        print(f"wtgf: cannot write report: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if "error" in report:
        print(f"wtgf: {report['error']['type']}: {report['error']['message']}", file=sys.stderr)
    return code


def main(argv=None) -> None:
    sys.exit(execute(argv))


if __name__ == "__main__":
    main()
