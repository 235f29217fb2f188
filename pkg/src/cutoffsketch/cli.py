"""Command-line front end.

Subcommands::

    cutoffsketch estimate  [--variant V] (--s S | --epsilon E --delta D) [input]
    cutoffsketch size      --variant V --epsilon E --delta D --m M [--n N] [--f0 F]
    cutoffsketch simulate  CONFIG.json
    cutoffsketch sets      (--s S | --epsilon E --delta D) [--geometric fast|debug] [input]

Element streams are one UTF-8 token per line; each token is hashed to a
stable 64-bit id with BLAKE2b.  Set streams have one set per line, either
``range lo hi`` or ``cuboid a1 b1 a2 b2 ...``.

Output is JSON (default) or ``key=value`` lines, always in a fixed field
order.  Exit codes: 0 success, 1 usage, 2 input, 3 abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from typing import Iterable, TextIO

from . import harness
from .delphic import CuboidSet, RangeSet, run_set_stream
from .sizing import SIZING_VARIANTS, SizingParams, bucket_limit
from .sketch import VARIANTS, SketchConfig, Status, make_sketch

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_ABORT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def token_id(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "big")


def read_tokens(fh) -> list[int]:
    """Hash one token per line; blank or undecodable lines are errors."""
    ids = []
    for lineno, raw in enumerate(fh, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise InputError(f"line {lineno}: not valid UTF-8 ({exc.reason})") from None
        token = raw.rstrip("\r\n")
        if not token.strip():
            raise InputError(f"line {lineno}: empty token")
        ids.append(token_id(token))
    return ids


def parse_set_line(line: str, lineno: int):
    parts = line.split()
    if not parts:
        raise InputError(f"line {lineno}: empty line")
    kind, *nums = parts
    try:
        vals = [int(v) for v in nums]
    except ValueError:
        raise InputError(f"line {lineno}: bounds must be integers") from None
    try:
        if kind == "range":
            if len(vals) != 2:
                raise InputError(f"line {lineno}: range takes exactly two bounds")
            return RangeSet(*vals)
        if kind == "cuboid":
            if not vals or len(vals) % 2:
                raise InputError(f"line {lineno}: cuboid takes pairs of bounds")
            return CuboidSet(tuple(zip(vals[::2], vals[1::2])))
    except ValueError as exc:
        raise InputError(f"line {lineno}: {exc}") from None
    raise InputError(f"line {lineno}: unknown set kind {kind!r}")


def read_sets(fh) -> list:
    return [parse_set_line(line, i) for i, line in enumerate(fh, start=1)]


def _fmt_value(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def emit(record: dict, fmt: str, out: TextIO) -> None:
    if fmt == "json":
        out.write(json.dumps({k: _fmt_value(v) for k, v in record.items()}) + "\n")
        return
    for k, v in record.items():
        v = _fmt_value(v)
        if v is None:
            v = "null"
        elif isinstance(v, bool):
            v = str(v).lower()
        elif isinstance(v, (list, dict)):
            v = json.dumps(v)
        out.write(f"{k}={v}\n")


def _open_input(path: str | None):
    if path is None or path == "-":
        return sys.stdin.buffer
    try:
        return open(path, "rb")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc.strerror}") from None


def _resolve_s(args, sizing_variant: str, m: int) -> tuple[int, str | None]:
    have_s = args.s is not None
    have_ed = args.epsilon is not None or args.delta is not None
    if have_s == have_ed:
        raise UsageError("give exactly one of --s or --epsilon/--delta")
    if have_s:
        if args.s < 1:
            raise UsageError("--s must be at least 1")
        return args.s, None
    if args.epsilon is None or args.delta is None:
        raise UsageError("--epsilon and --delta go together")
    try:
        res = bucket_limit(SizingParams(args.epsilon, args.delta, max(m, 1), args.n, sizing_variant))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return res.s, res.formula


def cmd_estimate(args, out) -> int:
    fh = _open_input(args.input)
    try:
        stream = read_tokens(fh)
    finally:
        if fh is not sys.stdin.buffer:
            fh.close()
    m = args.m if args.m is not None else len(stream)
    sizing_variant = "Tracking" if args.tracking else args.variant
    s, _ = _resolve_s(args, sizing_variant, m)
    sketch = make_sketch(SketchConfig(args.variant, s, seed=args.seed, trace=args.trace))
    tracking = []
    if args.tracking:
        for a in stream:
            sketch.step(a)
            if sketch.status is Status.ABORTED:
                break
            tracking.append(sketch.report(args.n, m).estimate)
    else:
        sketch.feed(stream)
    rep = sketch.report(args.n, m)
    record = {
        "command": "estimate",
        "variant": args.variant,
        "s": s,
        "seed": args.seed,
        "estimate": rep.estimate,
        "final_cutoff": rep.final_cutoff,
        "final_list_size": rep.final_list_size,
        "status": rep.status.value,
        "steps_processed": rep.steps_processed,
    }
    if args.tracking:
        record["tracking"] = tracking
    if args.trace and rep.transcript is not None:
        record["trace"] = [[r.t, r.score, r.cutoff, len(r.members)] for r in rep.transcript]
    emit(record, args.format, out)
    return EXIT_ABORT if rep.status is Status.ABORTED else EXIT_OK


def cmd_size(args, out) -> int:
    try:
        params = SizingParams(args.epsilon, args.delta, args.m, args.n, args.variant)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = bucket_limit(params)
    record = {
        "command": "size",
        "variant": res.variant,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "m": args.m,
        "n": args.n,
        "s": res.s,
        "formula": res.formula,
    }
    if args.f0 is not None:
        record["p0_exponent"] = res.p0_exponent(args.f0)
    emit(record, args.format, out)
    return EXIT_OK


_STREAM_KINDS = {
    "all_distinct": (harness.AllDistinct, ("f0",)),
    "repeated": (harness.Repeated, ("f0", "reps")),
    "zipf": (harness.Zipf, ("f0", "exponent", "m")),
}


def _stream_from_config(cfg: dict):
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise InputError("stream must be an object with a 'kind'")
    kind = cfg["kind"]
    if kind == "permuted":
        if "base" not in cfg or "seed" not in cfg:
            raise InputError("permuted stream needs 'base' and 'seed'")
        return harness.Permuted(_stream_from_config(cfg["base"]), int(cfg["seed"]))
    if kind not in _STREAM_KINDS:
        raise InputError(f"unknown stream kind {kind!r}")
    cls, fields = _STREAM_KINDS[kind]
    missing = [f for f in fields if f not in cfg]
    if missing:
        raise InputError(f"stream kind {kind!r} is missing {missing}")
    return cls(*(cfg[f] for f in fields))


def load_experiment(cfg: dict) -> harness.Experiment:
    """Build an :class:`~cutoffsketch.harness.Experiment` from a JSON object."""
    known = {"variant", "stream", "trials", "seed", "s", "epsilon", "delta", "m", "n", "workers"}
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise InputError(f"unknown config keys {unknown}")
    for key in ("variant", "stream", "trials"):
        if key not in cfg:
            raise InputError(f"config is missing {key!r}")
    if cfg["variant"] not in VARIANTS:
        raise InputError(f"unknown variant {cfg['variant']!r}")
    trials = cfg["trials"]
    if not isinstance(trials, int) or trials < 1:
        raise InputError("trials must be a positive integer")
    stream = _stream_from_config(cfg["stream"])
    sizing = None
    if "s" in cfg:
        if "delta" in cfg:
            raise InputError("give either s or epsilon/delta sizing, not both")
    else:
        if "epsilon" not in cfg or "delta" not in cfg:
            raise InputError("config needs s or both epsilon and delta")
        m = cfg.get("m") or len(harness.generate_stream(stream, cfg.get("seed", 0)))
        try:
            sizing = SizingParams(cfg["epsilon"], cfg["delta"], m, cfg.get("n"), cfg["variant"])
        except ValueError as exc:
            raise InputError(str(exc)) from None
    try:
        return harness.Experiment(
            variant=cfg["variant"],
            stream=stream,
            trials=trials,
            base_seed=int(cfg.get("seed", 0)),
            s=cfg.get("s"),
            sizing=sizing,
            epsilon=cfg.get("epsilon"),
            n_cap=cfg.get("n"),
            workers=int(cfg.get("workers", 1)),
        )
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None


def cmd_simulate(args, out) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot open {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from None
    report = harness.monte_carlo(load_experiment(cfg))
    emit({"command": "simulate", **report.as_dict()}, args.format, out)
    return EXIT_OK


def cmd_sets(args, out) -> int:
    fh = _open_input(args.input)
    try:
        text = fh.read()
    finally:
        if fh is not sys.stdin.buffer:
            fh.close()
    try:
        lines = text.decode("utf-8").splitlines()
    except UnicodeDecodeError:
        raise InputError("set stream is not valid UTF-8") from None
    sets = read_sets(lines)
    m = args.m if args.m is not None else len(sets)
    s, _ = _resolve_s(args, "CVM2Refuse", m)
    config = SketchConfig("CVM2Refuse", s, seed=args.seed)
    rep = run_set_stream(config, sets, args.n, m, mode=args.geometric)
    emit(
        {
            "command": "sets",
            "s": s,
            "seed": args.seed,
            "estimate": rep.estimate,
            "final_cutoff": rep.final_cutoff,
            "final_list_size": rep.final_list_size,
            "status": rep.status.value,
            "steps_processed": rep.steps_processed,
        },
        args.format,
        out,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cutoffsketch", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, sizing=True):
        sp.add_argument("--format", choices=("json", "kv"), default="json")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--n", type=int, default=None, help="universe size bound")
        sp.add_argument("--m", type=int, default=None, help="stream length bound")
        if sizing:
            sp.add_argument("--s", type=int, default=None, help="explicit bucket limit")
            sp.add_argument("--epsilon", type=float, default=None)
            sp.add_argument("--delta", type=float, default=None)

    est = sub.add_parser("estimate", help="estimate F0 of a token stream")
    est.add_argument("input", nargs="?", default=None)
    est.add_argument("--variant", choices=sorted(VARIANTS), default="CVM2")
    est.add_argument("--tracking", action="store_true",
                     help="size for all-time tracking and emit the running estimate")
    est.add_argument("--trace", action="store_true", help="include the per-step transcript")
    common(est)
    est.set_defaults(func=cmd_estimate)

    size = sub.add_parser("size", help="bucket limit for (epsilon, delta, m, n)")
    size.add_argument("--variant", choices=SIZING_VARIANTS, required=True)
    size.add_argument("--epsilon", type=float, required=True)
    size.add_argument("--delta", type=float, required=True)
    size.add_argument("--m", type=int, required=True)
    size.add_argument("--n", type=int, default=None)
    size.add_argument("--f0", type=int, default=None, help="also report p0's exponent for this F0")
    size.add_argument("--format", choices=("json", "kv"), default="json")
    size.set_defaults(func=cmd_size)

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    sim.add_argument("config")
    sim.add_argument("--format", choices=("json", "kv"), default="json")
    sim.set_defaults(func=cmd_simulate)

    sets = sub.add_parser("sets", help="estimate the union size of a stream of sets")
    sets.add_argument("input", nargs="?", default=None)
    sets.add_argument("--geometric", choices=("fast", "debug"), default="fast")
    common(sets)
    sets.set_defaults(func=cmd_sets)
    return p


def main(argv: Iterable[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        return args.func(args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
