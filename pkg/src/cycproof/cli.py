"""Batch command-line front end over proof bundles.

Exit codes: 0 for ok / proof / accepted, 1 for checked-and-failed (the
diagnostic JSON carries the counterexample or failing bud), 2 for
malformed input.  All output is machine-readable JSON except ``export-dot``.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import bundle as bundle_mod
from .automata import (
    build_buchi,
    build_safra_automaton,
    buchi_accepts_lasso,
    rabin_accepts_lasso,
)
from .bundle import Bundle, BundleError, dumps, export_dot, load_path, make_bundle
from .gtc import check_gtc
from .proofs import Addr, format_addr, unfold_at, validate_preproof
from .reset import check_reset_condition, strip, validate_reset_preproof
from .search import annotate, expand, strip_search
from .trace import TraceMorphism


class CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


def _emit(data: dict) -> None:
    print(json.dumps(data, sort_keys=True))


def _parse_addr(text: str) -> Addr:
    if text in ("", "e"):
        return ()
    try:
        return tuple(int(part) for part in text.split("."))
    except ValueError:
        raise CliError(f"bad address {text!r}") from None


def _load(path: str) -> Bundle:
    try:
        return load_path(path)
    except OSError as err:
        raise CliError(str(err)) from None
    except BundleError as err:
        raise CliError(f"malformed bundle: {err}") from None


def _need_preproof(bun: Bundle):
    if bun.preproof is None:
        raise CliError("bundle has no preproof section")
    return bun.preproof


def _need_reset(bun: Bundle):
    if bun.reset is None:
        raise CliError("bundle has no reset section")
    return bun.reset


def _word(bun: Bundle, text: str) -> list[TraceMorphism]:
    out = []
    for mid in text.split(","):
        mid = mid.strip()
        if not mid:
            continue
        if mid not in bun.morphisms:
            raise CliError(f"unknown morphism {mid!r}")
        out.append(bun.morphisms[mid])
    return out


def _write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def cmd_validate(args) -> int:
    bun = _load(args.bundle)
    if bun.reset is not None:
        problems = validate_reset_preproof(bun.algebra, bun.system, bun.iota, bun.reset)
    else:
        problems = validate_preproof(bun.system, _need_preproof(bun))
    if problems:
        _emit({"ok": False, "problems": problems})
        return 2
    _emit({"ok": True})
    return 0


def cmd_check_gtc(args) -> int:
    bun = _load(args.bundle)
    proof = strip(bun.reset) if bun.reset is not None else _need_preproof(bun)
    verdict = check_gtc(bun.system, proof, bun.iota)
    if verdict.ok:
        _emit({"ok": True})
        return 0
    prefix, loop = verdict.counterexample
    _emit(
        {
            "ok": False,
            "counterexample": {
                "prefix": [list(t) for t in prefix],
                "loop": [list(t) for t in loop],
            },
        }
    )
    return 1


def cmd_check_reset(args) -> int:
    bun = _load(args.bundle)
    rp = _need_reset(bun)
    problems = validate_reset_preproof(bun.algebra, bun.system, bun.iota, rp)
    if problems:
        raise CliError("; ".join(problems))
    verdict = check_reset_condition(rp)
    if verdict.ok:
        _emit(
            {
                "ok": True,
                "invariants": {
                    format_addr(bud): list(inv) for bud, inv in verdict.invariants.items()
                },
            }
        )
        return 0
    _emit({"ok": False, "failing_bud": format_addr(verdict.failing_bud)})
    return 1


def cmd_strip(args) -> int:
    bun = _load(args.bundle)
    proof = strip(_need_reset(bun))
    out = make_bundle(
        bun.algebra, bun.system, bun.iota, preproof=proof, instance=bun.instance
    )
    _write_output(dumps(out), args.output)
    return 0


def cmd_annotate(args) -> int:
    bun = _load(args.bundle)
    proof = _need_preproof(bun)
    from .search import GtcFails

    try:
        sp = annotate(
            bun.system, proof, bun.iota, K=args.K, max_depth=args.max_depth
        )
    except GtcFails:
        _emit({"ok": False, "error": "the preproof fails the global trace condition"})
        return 1
    rp = expand(bun.system, bun.iota, sp)
    verdict = check_reset_condition(rp)
    chips = sorted({c for ann in rp.lam.values() for c in ann.board.control})
    report = {
        "ok": True,
        "nodes_before": len(proof.nodes),
        "nodes_after": len(rp.nodes),
        "chips_used": chips,
        "invariants": {format_addr(b): list(i) for b, i in verdict.invariants.items()},
    }
    out = make_bundle(bun.algebra, bun.system, bun.iota, reset=rp, instance=bun.instance)
    _write_output(dumps(out), args.output)
    _emit(report)
    return 0


def cmd_lasso(args, deterministic: bool) -> int:
    bun = _load(args.bundle)
    prefix = _word(bun, args.prefix or "")
    loop = _word(bun, args.loop)
    if not loop:
        raise CliError("--loop must name at least one morphism")
    if deterministic:
        if args.start_object is not None:
            if args.start_object not in bun.objects:
                raise CliError(f"unknown object {args.start_object!r}")
            start = bun.objects[args.start_object]
        else:
            start = (prefix or loop)[0].dom
        aut = build_safra_automaton(
            bun.algebra, list(bun.objects.values()), list(bun.morphisms.values()), start
        )
        accepted = rabin_accepts_lasso(aut, prefix, loop)
    else:
        aut = build_buchi(bun.algebra, list(bun.morphisms.values()))
        accepted = buchi_accepts_lasso(aut, prefix, loop)
    _emit({"accepted": accepted})
    return 0 if accepted else 1


def cmd_unfold(args) -> int:
    bun = _load(args.bundle)
    proof = _need_preproof(bun)
    bud = _parse_addr(args.bud)
    from .proofs import NotABud

    try:
        bigger = unfold_at(proof, bud, retarget=args.retarget)
    except NotABud:
        raise CliError(f"{args.bud} is not a bud") from None
    out = make_bundle(
        bun.algebra, bun.system, bun.iota, preproof=bigger, instance=bun.instance
    )
    _write_output(dumps(out), args.output)
    return 0


def cmd_export_dot(args) -> int:
    bun = _load(args.bundle)
    _write_output(export_dot(bun), args.output)
    return 0


def cmd_info(args) -> int:
    bun = _load(args.bundle)
    objects = list(bun.objects.values())
    start = None
    if bun.preproof is not None or bun.reset is not None:
        proof = bun.preproof if bun.preproof is not None else strip(bun.reset)
        start = bun.iota.object_of[proof.lam[()]]
    elif objects:
        start = objects[0]
    if start is None:
        raise CliError("bundle has no objects")
    aut = build_safra_automaton(
        bun.algebra, objects, list(bun.morphisms.values()), start
    )
    reachable = aut.reachable_states()
    buchi = build_buchi(bun.algebra, list(bun.morphisms.values()))
    _emit(
        {
            "algebra_size": bun.algebra.size,
            "objects": len(objects),
            "morphisms": len(bun.morphisms),
            "K": aut.K,
            "chip_supply": len(list(aut.chips)),
            "rabin_pairs": len(aut.rabin_pairs()),
            "reachable_states": len(reachable),
            "state_bound": aut.state_bound(),
            "buchi_states": len(buchi.states),
        }
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cycproof", description="cyclic proof toolkit over proof bundles"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("bundle", help="path to a proof bundle")
        p.set_defaults(fn=fn)
        return p

    add("validate", cmd_validate, help="check preproof invariants")
    add("check-gtc", cmd_check_gtc, help="decide the global trace condition")
    add("check-reset", cmd_check_reset, help="check the per-cycle reset condition")
    p = add("strip", cmd_strip, help="reset bundle -> plain bundle")
    p.add_argument("-o", "--output")
    p = add("annotate", cmd_annotate, help="plain bundle -> reset bundle")
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("-o", "--output")
    p = add("lasso-buchi", lambda a: cmd_lasso(a, False), help="lasso membership, trace-guessing side")
    p.add_argument("--prefix", default="")
    p.add_argument("--loop", required=True)
    p = add("lasso-rabin", lambda a: cmd_lasso(a, True), help="lasso membership, deterministic side")
    p.add_argument("--prefix", default="")
    p.add_argument("--loop", required=True)
    p.add_argument("--start-object", default=None)
    p = add("unfold", cmd_unfold, help="unfold the proof at a bud")
    p.add_argument("--bud", required=True, help="address like 1.2")
    p.add_argument("--retarget", choices=["new_bud", "old_companion"], default="new_bud")
    p.add_argument("-o", "--output")
    p = add("export-dot", cmd_export_dot, help="Graphviz rendering of the proof graph")
    p.add_argument("-o", "--output")
    add("info", cmd_info, help="automaton statistics against the size bounds")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as err:
        _emit({"ok": False, "error": str(err)})
        return err.code
    except bundle_mod.BundleError as err:
        _emit({"ok": False, "error": str(err)})
        return 2
    except Exception as err:  # checker-level errors on malformed content
        _emit({"ok": False, "error": f"{type(err).__name__}: {err}"})
        return 2


if __name__ == "__main__":
    sys.exit(main())
