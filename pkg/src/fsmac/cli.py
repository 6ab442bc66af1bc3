"""Command-line front end: ``fsmac <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 budget exceeded, 4 a checked
invariant failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import additive, bounds, montecarlo
from .causal import BudgetExceeded
from .channel import ChannelValidationError, load_channel, noise_from_json, validate
from .regions import RateRegion, check_subadditive, check_superadditive, hausdorff

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_VIOLATION = 0, 2, 3, 4
KIND_NAMES = {"inner": "inner", "multi": "multi_letter", "multi_letter": "multi_letter", "outer": "outer"}


class InputError(ValueError):
    pass


def parse_range(text: str) -> list[int]:
    """``"3"`` -> [3]; ``"1-3"`` -> [1, 2, 3]; ``"1,4"`` -> [1, 4]."""
    out: list[int] = []
    try:
        for part in text.split(","):
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-", 1))
                if hi < lo:
                    raise InputError(f"empty range {part!r}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"cannot parse block-length list {text!r}") from exc
    if any(n < 1 for n in out):
        raise InputError("block lengths must be at least 1")
    return sorted(set(out))


def parse_rates(text: str) -> tuple[float, float]:
    try:
        r = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise InputError(f"cannot parse rate pair {text!r}") from exc
    if len(r) != 2:
        raise InputError(f"--rates needs two comma-separated values, got {text!r}")
    if any(v < 0 or not math.isfinite(v) for v in r):
        raise InputError(f"rates must be finite and nonnegative, got {text!r}")
    return r  # type: ignore[return-value]


def dump(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _table(headers: list[str], rows: list[list]) -> str:
    def fmt(v):
        return f"{v:.6f}" if isinstance(v, float) else str(v)
    cells = [headers] + [[fmt(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)


def _config(args) -> bounds.OptimizerConfig:
    kw = {k: getattr(args, k) for k in ("directions", "restarts", "mode", "seed", "tolerance", "budget")
          if getattr(args, k, None) is not None}
    return bounds.OptimizerConfig(**kw)


def _require_seed_for_ascent(channel, ns, cfg, args) -> None:
    if args.seed is not None:
        return
    for n in ns:
        if bounds._choose_mode(channel, n, cfg) == "ascent":
            raise InputError(f"--seed is required: n={n} runs the stochastic ascent search")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    channel = load_channel(args.channel)
    problems = validate(channel)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return EXIT_INPUT
    print(f"ok: {channel.name or Path(args.channel).stem} |S|={channel.s_size} |X1|={channel.x1_size} "
          f"|X2|={channel.x2_size} |Y|={channel.y_size} feedback={'yes' if channel.has_feedback else 'no'}")
    return EXIT_OK


def _compute_bounds(channel, ns, kinds, cfg):
    fns = {"inner": bounds.compute_inner, "multi_letter": bounds.compute_multi_letter,
           "outer": bounds.compute_outer}
    return {k: [fns[k](channel, n, cfg) for n in ns] for k in kinds}


def cmd_bounds(args) -> int:
    channel = load_channel(args.channel)
    ns = parse_range(args.n)
    kinds = [KIND_NAMES[k] for k in args.kinds.split(",")] if args.kinds else (
        ["inner", "multi_letter"] + ([] if channel.has_feedback else ["outer"]))
    if "outer" in kinds and channel.has_feedback:
        raise InputError("the outer bound needs a channel without feedback")
    cfg = _config(args)
    _require_seed_for_ascent(channel, ns, cfg, args)
    results = _compute_bounds(channel, ns, kinds, cfg)
    out = Path(args.out)
    rows = []
    for i, n in enumerate(ns):
        row = [n] + [results[k][i].sum_face for k in kinds]
        if "inner" in results and "outer" in results:
            row.append(hausdorff(results["inner"][i].region, results["outer"][i].region))
        rows.append(row)
        for k in kinds:
            r = results[k][i]
            dump(r.to_json(), out / f"bounds_{k}_n{n}.json")
            (out / f"bounds_{k}_n{n}.csv").write_text(r.region.to_csv())
    headers = ["n"] + [f"{k}_sum" for k in kinds] + (["hausdorff"] if "inner" in results and "outer" in results else [])
    print(_table(headers, rows))
    return EXIT_OK


def _load_bound_region(path: str) -> tuple[int, RateRegion, str]:
    with open(path) as fh:
        d = json.load(fh)
    if "region" in d:
        return int(d["n"]), RateRegion.from_json(d["region"]), d.get("kind", "")
    region = RateRegion.from_json(d)
    if "n" not in region.meta:
        raise InputError(f"{path}: region file carries no block length 'n'")
    return int(region.meta["n"]), region, region.meta.get("kind", "")


def _print_additivity(report) -> None:
    rows = [[f"{t.n}+{t.m}", t.total, t.violation, "ok" if t.ok else "VIOLATION"] for t in report.triples]
    print(f"{report.kind} (tolerance {report.tolerance:g})")
    print(_table(["n+m", "N", "slack", "status"], rows))


def cmd_lemmas(args) -> int:
    tol = args.tolerance if args.tolerance is not None else 1e-6
    reports = []
    if args.regions:
        loaded = [_load_bound_region(p) for p in args.regions]
        ns = [n for n, _, _ in loaded]
        if len(set(ns)) != len(ns):
            raise InputError(f"duplicate block lengths in region files: {ns}")
        if len(loaded) < 2:
            raise InputError("additivity checks need regions for at least two block lengths")
        kind = args.check or ("subadditive" if all(k == "outer" for _, _, k in loaded) else "superadditive")
        seq = [(n, r) for n, r, _ in loaded]
        fn = check_subadditive if kind == "subadditive" else check_superadditive
        reports.append(fn(seq, tol))
    else:
        if not args.channel or not args.n:
            raise InputError("give --regions files or --channel with --n")
        channel = load_channel(args.channel)
        ns = parse_range(args.n)
        if len(ns) < 2:
            raise InputError("additivity checks need at least two block lengths")
        cfg = _config(args)
        _require_seed_for_ascent(channel, ns, cfg, args)
        kinds = [] if args.check == "subadditive" else ["inner"]
        if args.check != "superadditive" and not channel.has_feedback:
            kinds.append("outer")
        if not kinds:
            raise InputError("the outer bound, and so the subadditivity check, needs a channel without feedback")
        res = _compute_bounds(channel, ns, kinds, cfg)
        if "inner" in res:
            reports.append(check_superadditive([(r.n, r.region) for r in res["inner"]], tol))
        if "outer" in res:
            reports.append(check_subadditive([(r.n, r.region) for r in res["outer"]], tol))
    for rep in reports:
        _print_additivity(rep)
    if args.out:
        dump([r.to_json() for r in reports], Path(args.out) / "lemmas.json")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_VIOLATION


def _noise_from_args(args):
    if args.channel:
        channel = load_channel(args.channel)
        meta = channel.meta.get("additive")
        if not meta:
            raise InputError(f"{args.channel} is not an additive channel (no 'additive' metadata)")
        return int(meta["q"]), noise_from_json(meta["noise"])
    if args.q is None or args.noise is None:
        raise InputError("give --channel, or --q together with --noise")
    text = args.noise
    if Path(text).is_file():
        return args.q, noise_from_json(json.loads(Path(text).read_text()))
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"--noise must be a JSON noise description or file, got {text!r}") from exc
    if isinstance(d, (int, float)):
        if args.q != 2:
            raise InputError("a scalar --noise is a binary flip probability and needs --q 2")
        d = {"type": "iid", "pmf": [1.0 - float(d), float(d)]}
    return args.q, noise_from_json(d)


def cmd_additive(args) -> int:
    q, noise = _noise_from_args(args)
    rate = additive.entropy_rate(noise)
    cap = additive.capacity_sum_rate(q, noise)
    region = additive.additive_region(q, noise)
    report: dict = {"q": q, "noise": noise.to_json(), "entropy_rate": rate.to_json(), "sum_capacity": cap,
                    "region": region.to_json()}
    rows = [["entropy_rate", rate.value], ["sum_capacity", cap]]
    status = EXIT_OK
    if args.n:
        inv = [additive.verify_feedback_invariance(q, noise, n, budget=args.budget or 10**6)
               for n in parse_range(args.n)]
        report["feedback_invariance"] = [r.to_json() for r in inv]
        for r in inv:
            rows.append([f"n={r.n} max_sum_feedback/n", r.max_faces[2] / r.n])
            rows.append([f"n={r.n} bound/n", r.bound / r.n])
            rows.append([f"n={r.n} invariance", "ok" if r.ok else "VIOLATION"])
        if not all(r.ok for r in inv):
            status = EXIT_VIOLATION
    if args.source_rate is not None:
        verdict = additive.separation_check(args.source_rate, q, noise)
        report["separation"] = verdict.to_json()
        rows.append(["source_rate", float(args.source_rate)])
        rows.append(["separation", verdict.status])
    print(_table(["quantity", "value"], rows))
    if args.out:
        dump(report, Path(args.out) / "additive.json")
    return status


def cmd_zerocap(args) -> int:
    channel = load_channel(args.channel)
    reports = [additive.zero_capacity_iff(channel, n, budget=args.budget or 10**6,
                                          tol=args.tolerance if args.tolerance is not None else additive.ZERO_TOL)
               for n in parse_range(args.n)]
    print(_table(["n", "max_no_feedback", "max_feedback", "zero_nofb", "zero_fb"],
                 [[r.n, r.max_no_feedback, r.max_feedback, r.zero_no_feedback, r.zero_feedback]
                  for r in reports]))
    if args.out:
        dump([r.to_json() for r in reports], Path(args.out) / "zerocap.json")
    return EXIT_OK if all(r.consistent for r in reports) else EXIT_VIOLATION


def cmd_simulate(args) -> int:
    if args.seed is None:
        raise InputError("--seed is required for simulate")
    channel = load_channel(args.channel)
    rates = parse_rates(args.rates)
    ns = parse_range(args.n)
    decoder_s0 = None
    if args.decoder_state is not None:
        w = np.zeros(channel.s_size)
        if not 0 <= args.decoder_state < channel.s_size:
            raise InputError(f"--decoder-state must lie in [0, {channel.s_size})")
        w[args.decoder_state] = 1.0
        decoder_s0 = w
    rows, out = [], Path(args.out) if args.out else None
    for n in ns:
        res = montecarlo.estimate_pe(channel, None, n, rates, args.trials, args.seed, args.refresh, decoder_s0)
        lo, hi = res.ci
        rows.append([n, res.config["messages"][0], res.config["messages"][1], res.trials, res.errors,
                     res.pe, lo, hi])
        if out:
            dump(res.to_json(), out / f"simulate_n{n}.json")
    print(_table(["n", "M1", "M2", "trials", "errors", "pe", "ci_lo", "ci_hi"], rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fsmac", description="Rate regions and coding simulations for "
                                "finite-state multiple access channels.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, channel_required=True):
        sp.add_argument("--channel", required=channel_required, help="channel JSON file")
        sp.add_argument("--out", default=None, help="output directory for JSON/CSV artifacts")

    def optimizer(sp):
        sp.add_argument("--directions", type=int)
        sp.add_argument("--restarts", type=int)
        sp.add_argument("--mode", choices=bounds.MODES)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--tolerance", type=float)
        sp.add_argument("--budget", type=int, help="maximum number of enumerated policy pairs")

    sp = sub.add_parser("validate", help="check a channel file")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("bounds", help="inner, multi-letter and outer regions")
    common(sp)
    sp.add_argument("--n", required=True, help="block length, list or range such as 1-3")
    sp.add_argument("--kinds", help="comma list of inner,multi,outer (default: all that apply)")
    optimizer(sp)
    sp.set_defaults(func=cmd_bounds, out="results")

    sp = sub.add_parser("lemmas", help="super/sub-additivity checks")
    common(sp, channel_required=False)
    sp.add_argument("--n")
    sp.add_argument("--regions", nargs="+", help="BoundResult or region JSON files")
    sp.add_argument("--check", choices=("superadditive", "subadditive"))
    optimizer(sp)
    sp.set_defaults(func=cmd_lemmas)

    sp = sub.add_parser("additive", help="additive mod-q MAC formula and checks")
    common(sp, channel_required=False)
    sp.add_argument("--q", type=int)
    sp.add_argument("--noise", help="flip probability (q=2), JSON noise object, or noise file")
    sp.add_argument("--n", help="also verify feedback invariance at these block lengths")
    sp.add_argument("--source-rate", type=float)
    sp.add_argument("--budget", type=int)
    sp.set_defaults(func=cmd_additive)

    sp = sub.add_parser("zerocap", help="zero-capacity check with and without feedback")
    common(sp)
    sp.add_argument("--n", required=True)
    sp.add_argument("--tolerance", type=float)
    sp.add_argument("--budget", type=int)
    sp.set_defaults(func=cmd_zerocap)

    sp = sub.add_parser("simulate", help="random code-tree error probability")
    common(sp)
    sp.add_argument("--n", required=True)
    sp.add_argument("--rates", required=True, help="R1,R2 in bits per channel use")
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--refresh", type=int, default=100, help="trials per fresh codebook")
    sp.add_argument("--decoder-state", type=int, help="initial state assumed by the decoder")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ChannelValidationError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, ValueError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
