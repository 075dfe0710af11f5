"""Command-line front end.

Exit status: 0 success, 1 unreadable config, 2 bad input or impossible
request, 3 internal consistency failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import __version__
from .collapse import (
    DetectionRecord, Detector, hk_region, hk_region_grid, hk_state, von_neumann_state,
)
from .config import ConfigError, RunConfig, load_config
from .core import state_to_records, states_equal
from .eor import (
    detector_outcome, enumerate_multiplicative_functionals, er1_evaluate, er3_evaluate,
    hardy_contradiction_report, measurement_event, prediction_time,
)
from .errors import HardyError, InvariantError
from .experiment import (
    OBSERVABLES, SCHEMA_VERSION, CanonicalTag, canonical_state, evolve, parse_schedule,
    run_report,
)
from .spacetime import (
    LAB, Boost, Event, RegionRule, in_info_region, interval_class, two_cone_region,
)
from .twotime import vaidman_report

EXIT_CONFIG, EXIT_PRECONDITION, EXIT_INVARIANT = 1, 2, 3


def _header(command: str) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command}


def cmd_evolve(args, cfg: RunConfig) -> dict:
    schedule = parse_schedule(args.steps)
    state = evolve(schedule)
    matches = {tag.value: states_equal(state, canonical_state(tag), tol=cfg.tol)
               for tag in CanonicalTag if tag.stage == state.stage}
    return {**_header("evolve"), "steps": [s.value for s in schedule],
            "stage": state.stage.to_dict(), "records": state_to_records(state), "matches": matches}


def cmd_abl(args, cfg: RunConfig) -> dict:
    rep = vaidman_report()
    out = {**_header("abl"), **rep.to_dict()}
    out["certain_outcomes"] = [f"{e.observable}={e.certain_value}" for e in rep.entries]
    out["certain_outcome_probabilities"] = [
        e.probabilities[e.outcome_values.index(e.certain_value)] if e.certain_value is not None else None
        for e in rep.entries]
    return out


def cmd_sample(args, cfg: RunConfig) -> dict:
    return {**_header("sample"), **run_report(args.n, cfg.seed)}


def _outcomes(text: str, cfg: RunConfig):
    names = [s.strip() for s in text.split(",") if s.strip()] if text else []
    return [detector_outcome(n, cfg.geometry) for n in names]


def cmd_eor(args, cfg: RunConfig) -> dict:
    obs = OBSERVABLES[args.observable]
    outcomes = _outcomes(args.outcomes, cfg)
    g = cfg.geometry
    if args.criterion == "er1":
        if args.beta is not None:
            frame = Boost(args.beta)
        else:
            frame = {"U+": cfg.f_minus, "U-": cfg.f_plus}.get(obs.name, LAB)
        now = args.now if args.now is not None else prediction_time(obs, frame, outcomes, g)
        claim = er1_evaluate(obs, measurement_event(obs, g, frame), frame, now, outcomes, g, cfg.tol)
        extra = {"frame_beta": frame.beta, "now": now}
    else:
        apexes = (g["U+"], g["U-"]) if not obs.is_local else (measurement_event(obs, g),)
        rule = args.rule if len(apexes) == 2 else None
        claim = er3_evaluate(obs, apexes, rule, outcomes, performed=args.performed, tol=cfg.tol)
        extra = {"region_rule": rule}
    return {**_header("eor"), "criterion": args.criterion.upper(), "observable": obs.name,
            "outcomes": [o.name for o in outcomes], **extra,
            "claim": None if claim is None else claim.to_dict()}


def cmd_collapse(args, cfg: RunConfig) -> dict:
    g = cfg.geometry
    if args.model == "vn":
        frame = Boost(args.beta if args.beta is not None else 0.0)
        dets = [DetectionRecord(g["D+"], Detector.D_PLUS), DetectionRecord(g["D-"], Detector.D_MINUS)]
        state = von_neumann_state(args.t, dets, frame)
        extra = {"preferred_frame_beta": frame.beta, "t": args.t}
    else:
        if args.grid:
            return {**_header("collapse"), "model": "hk",
                    **hk_region_grid(g["D+"], g["D-"], (args.t_min, args.t_max),
                                     (args.z_min, args.z_max), args.grid, args.grid)}
        q = Event(args.t, args.z)
        state = hk_state(q, g["D+"], g["D-"])
        extra = {"query": q.as_dict(), "region": hk_region(q, g["D+"], g["D-"]).value}
    return {**_header("collapse"), "model": args.model, **extra,
            "stage": state.stage.to_dict(), "records": state_to_records(state)}


def cmd_regions(args, cfg: RunConfig) -> dict:
    g = cfg.geometry
    e = Event(args.t, args.z)
    region = two_cone_region(e, g["U+"], g["U-"])
    return {**_header("regions"), "event": e.as_dict(),
            "interval_from_U+": interval_class(g["U+"], e).value,
            "interval_from_U-": interval_class(g["U-"], e).value,
            "info_region_U+": in_info_region(e, g["U+"]),
            "info_region_U-": in_info_region(e, g["U-"]),
            "two_cone_region": region.value,
            "in_union": region in RegionRule.UNION.regions,
            "in_intersection": region in RegionRule.INTERSECTION.regions,
            "hk_region": hk_region(e, g["D+"], g["D-"]).value}


def cmd_contradiction(args, cfg: RunConfig) -> dict:
    rep = hardy_contradiction_report(cfg.geometry, cfg.f_minus, cfg.f_plus,
                                     product_rule=not args.no_product_rule, tol=cfg.tol)
    return {**_header("contradiction"), **rep.to_dict()}


def cmd_theorem(args, cfg: RunConfig) -> dict:
    fs = enumerate_multiplicative_functionals(args.dim)
    return {**_header("theorem"), "dim": args.dim, "count": len(fs),
            "records": [{"singled_out": f.singled_out, "atom_values": list(f.atom_values)} for f in fs]}


def build_parser() -> argparse.ArgumentParser:
    def add_globals(parser, default):
        parser.add_argument("--config", default=default, help="YAML run configuration")
        parser.add_argument("--seed", type=int, default=default, help="64-bit RNG seed")
        parser.add_argument("--beta", type=float, default=default,
                            help="frame velocity for er1 / von Neumann collapse")
        parser.add_argument("--format", choices=("json", "table"), default=default)
        parser.add_argument("--tol", type=float, default=default,
                            help="certainty and comparison tolerance")

    p = argparse.ArgumentParser(prog="hardysim", description="Hardy two-interferometer toolkit")
    p.add_argument("--version", action="version", version=__version__)
    add_globals(p, None)
    # the same flags are accepted after the subcommand name
    common = argparse.ArgumentParser(add_help=False)
    add_globals(common, argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    def command(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help, parents=[common])

    s = command("evolve", help="evolve |s+>|s-> through a schedule")
    s.add_argument("--steps", required=True, help="comma list of bs1+,bs1-,ann,bs2+,bs2-")
    s.set_defaults(func=cmd_evolve)

    s = command("abl", help="pre/post-selected probabilities for U+, U-, U+U-")
    s.set_defaults(func=cmd_abl)

    s = command("sample", help="Monte Carlo run outcomes")
    s.add_argument("-n", type=int, default=160000)
    s.set_defaults(func=cmd_sample)

    s = command("eor", help="evaluate an element-of-reality criterion")
    s.add_argument("--criterion", choices=("er1", "er3"), required=True)
    s.add_argument("--observable", choices=("U+", "U-", "U+U-"), required=True)
    s.add_argument("--rule", choices=("intersection", "union"), default="intersection")
    s.add_argument("--outcomes", default="", help="comma list of fired detectors, e.g. D+,D-")
    s.add_argument("--now", type=float, help="er1 prediction time in the chosen frame")
    s.add_argument("--performed", action="store_true", help="the measurement is actually made")
    s.set_defaults(func=cmd_eor)

    s = command("collapse", help="state under von Neumann or Hellwig-Kraus collapse")
    s.add_argument("--model", choices=("vn", "hk"), required=True)
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--z", type=float, default=0.0)
    s.add_argument("--grid", type=int, help="hk only: export an N x N region grid")
    s.add_argument("--t-min", type=float, default=-1.0)
    s.add_argument("--t-max", type=float, default=3.0)
    s.add_argument("--z-min", type=float, default=-3.0)
    s.add_argument("--z-max", type=float, default=3.0)
    s.set_defaults(func=cmd_collapse)

    s = command("regions", help="classify an event against the cones")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--z", type=float, required=True)
    s.set_defaults(func=cmd_regions)

    s = command("contradiction", help="Hardy's derivation")
    s.add_argument("--no-product-rule", action="store_true")
    s.set_defaults(func=cmd_contradiction)

    s = command("theorem", help="enumerate product-rule functionals")
    s.add_argument("--dim", type=int, required=True)
    s.set_defaults(func=cmd_theorem)
    return p


def _table(report: dict) -> str:
    lines = []
    records = report.get("records")
    for k, v in report.items():
        if k != "records":
            lines.append(f"{k}: {json.dumps(v, ensure_ascii=False)}")
    if isinstance(records, list) and records:
        cols = list(records[0])
        rows = [[str(r.get(c, "")) for c in cols] for r in records]
        widths = [max(len(c), *(len(r[i]) for r in rows)) for i, c in enumerate(cols)]
        lines.append("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
        lines += ["  ".join(x.ljust(w) for x, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "table":
        return _table(report)
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(seed=args.seed, tol=args.tol, format=args.format)
        report = args.func(args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (HardyError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    sys.stdout.write(render(report, cfg.format))
    return 0


if __name__ == "__main__":
    sys.exit(main())
