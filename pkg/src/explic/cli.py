import argparse
import json
import logging
import os
import sys

from . import automata as au
from . import formula as F
from .errors import ExplicError, ResourceLimit
from .system import generate, parse_model, serialize_model
from .trace import format_trace, parse_trace

log = logging.getLogger("explic")

EXIT_HOLDS, EXIT_VIOLATED, EXIT_ERROR = 0, 1, 2


def _setup_logging():
    level = os.environ.get("EXPLIC_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def _bounds(text):
    try:
        p, l = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("bounds must look like P,L") from None
    if p < 0 or l < 1:
        raise argparse.ArgumentTypeError("bounds need P >= 0 and L >= 1")
    return p, l


def _positive(text):
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _load_model(args):
    if args.model and args.gen:
        raise ExplicError("give either --model or --gen, not both")
    if args.gen:
        return generate(args.gen)
    if not args.model:
        raise ExplicError("a model is required (--model PATH or --gen SPEC)")
    try:
        with open(args.model) as fh:
            return parse_model(fh.read())
    except OSError as exc:
        raise ExplicError(f"cannot read model: {exc}") from None


def _load_formula(args, sys):
    from .bench import requirement

    given = [x for x in (args.spec, args.req, args.formula) if x]
    if len(given) != 1:
        raise ExplicError("give exactly one of --spec, --req or --formula")
    if args.req:
        return requirement(sys, args.req)
    if args.formula:
        return F.parse_formula(args.formula)
    try:
        with open(args.spec) as fh:
            text = "\n".join(line for line in fh.read().splitlines() if not line.lstrip().startswith("#"))
    except OSError as exc:
        raise ExplicError(f"cannot read formula: {exc}") from None
    return F.parse_formula(text)


def _emit(path, automaton):
    with open(path, "w") as fh:
        fh.write(au.to_dot(automaton))


def _out(args, text=None, data=None):
    if args.format == "json":
        print(json.dumps(data, indent=2, sort_keys=True))
    elif text is not None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------- commands

def cmd_check(args):
    from .checker import check, explain_verdict

    model = _load_model(args)
    f = _load_formula(args, model)
    try:
        v = check(model, f, cap=args.cap, timeout=args.timeout, keep_automaton=bool(args.emit_automaton))
    except ResourceLimit as exc:
        _out(args, f"resource limit: {exc}", {"model": model.name, "formula": F.to_text(f), "error": str(exc)})
        return EXIT_ERROR
    if args.emit_automaton and v.automaton is not None:
        _emit(args.emit_automaton, v.automaton)
    data = v.to_json()
    text = explain_verdict(v, model)
    status = EXIT_HOLDS if v.holds else EXIT_VIOLATED
    if args.oracle_check:
        from .oracle import BoundedConfig, oracle_check

        cfg = BoundedConfig(*args.bounds)
        ov = oracle_check(model, f, cfg)
        agree = ov.holds == v.holds
        data["oracle"] = {"holds": ov.holds, "bounds": list(args.bounds), "agrees": agree}
        text += f"oracle (bounds {args.bounds[0]},{args.bounds[1]}): {'holds' if ov.holds else 'violated'}"
        text += " - agrees\n" if agree else " - DISAGREES\n"
        if not agree:
            status = EXIT_ERROR
    _out(args, text, data)
    return status


def cmd_cause(args):
    from .checker import cause_difference, compute_cause

    model = _load_model(args)
    t = parse_trace(args.trace)
    effect = F.parse_formula(args.effect)
    A = frozenset(a.strip() for a in args.actions.split(",") if a.strip())
    c = compute_cause(model, t, args.anchor, effect, A, cap=args.cap, timeout=args.timeout)
    if args.emit_automaton:
        _emit(args.emit_automaton, c.automaton)
    data = {"model": model.name, "trace": format_trace(t), "anchor": args.anchor, "effect": F.to_text(effect),
            "action_set": sorted(A), "states": c.automaton.n, "empty": au.is_empty(c.automaton) is None}
    lines = [f"cause of {F.to_text(effect)} at time {args.anchor} over {{{', '.join(sorted(A))}}}: "
             f"{c.automaton.n} states" + (" (empty)" if data["empty"] else "")]
    status = EXIT_HOLDS
    if args.candidate:
        cand = F.parse_formula(args.candidate)
        diff = cause_difference(c, cand)
        data["candidate"] = F.to_text(cand)
        data["equivalent"] = diff is None
        if diff is None:
            lines.append("equivalent")
        else:
            w, side = diff
            data["witness"] = {"trace": format_trace(w), "side": side}
            where = "in the cause but not the candidate" if side == "cause-only" else "in the candidate only"
            lines.append(f"not equivalent: {format_trace(w)} is {where}")
            status = EXIT_VIOLATED
    if args.oracle:
        from .oracle import Anchor, BoundedConfig, oracle_cause

        members = oracle_cause(model, Anchor(t, args.anchor), effect, A, BoundedConfig(*args.bounds))
        words = sorted(format_trace(x) for x in members)
        data["oracle"] = words
        lines.append(f"oracle cause set (bounds {args.bounds[0]},{args.bounds[1]}), {len(words)} lassos:")
        lines.extend("  " + w for w in words)
    _out(args, "\n".join(lines), data)
    return status


def cmd_bench(args):
    from .bench import mismatches, run_suite, write_csv

    reqs = tuple(r.strip() for r in args.reqs.split(",")) if args.reqs else ("ice", "ece", "fce", "priv")
    results = run_suite(args.suite, args.max_bidders, args.max_players, args.blaming, cap=args.cap,
                        timeout=args.timeout, jobs=args.jobs, reqs=reqs)
    rows = [r for r, _ in results]
    bad = mismatches(rows)
    if args.format == "json":
        print(json.dumps({"rows": rows, "mismatches": len(bad)}, indent=2))
    elif args.output:
        with open(args.output, "w", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    print(f"{len(rows)} instances, {len(bad)} mismatches", file=sys.stderr)
    for r in bad:
        print(f"  mismatch: {r['family']} {r['params']} {r['requirement']}: got {r['verdict']}, "
              f"expected {r['expected']}", file=sys.stderr)
    return EXIT_VIOLATED if bad else EXIT_HOLDS


def cmd_gen(args):
    model = generate(args.spec)
    text = serialize_model(model)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    if args.format == "json":
        print(json.dumps({"model": model.name, "states": len(model.states), "edges": len(model.edges),
                          "text": text}, indent=2))
    elif not args.output:
        sys.stdout.write(text)
    return EXIT_HOLDS


# ---------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="explic", description="Model checker for causal explainability and privacy.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q, model=True):
        if model:
            q.add_argument("--model", help="model file")
            q.add_argument("--gen", help="generator spec, e.g. auction:3:explain")
        q.add_argument("--format", choices=("text", "json"), default="text")
        q.add_argument("--timeout", type=_positive, default=300.0, help="seconds per check")
        q.add_argument("--cap", type=int, default=1_000_000, help="state cap for complementation")

    q = sub.add_parser("check", help="model check a formula")
    common(q)
    q.add_argument("--spec", help="file with a formula")
    q.add_argument("--req", help="named requirement: ice|ece|fce:AGENT[:TRIGGER:EFFECT] or priv:AGENT:SECRET[:COND]")
    q.add_argument("--formula", help="formula text")
    q.add_argument("--oracle-check", action="store_true", help="also run the bounded oracle")
    q.add_argument("--bounds", type=_bounds, default=(6, 3), help="oracle bounds P,L")
    q.add_argument("--emit-automaton", metavar="PATH", help="write the final product automaton as DOT")
    q.set_defaults(func=cmd_check)

    q = sub.add_parser("cause", help="compute a cause at an anchor point")
    common(q)
    q.add_argument("--trace", required=True, help="lasso literal, e.g. '{o,b1} {o} ({})^w'")
    q.add_argument("--anchor", type=int, default=0)
    q.add_argument("--effect", required=True)
    q.add_argument("--actions", required=True, help="comma separated action set A")
    q.add_argument("--candidate", help="formula to compare against the cause")
    q.add_argument("--oracle", action="store_true", help="print the bounded cause set")
    q.add_argument("--bounds", type=_bounds, default=(6, 3))
    q.add_argument("--emit-automaton", metavar="PATH")
    q.set_defaults(func=cmd_cause)

    q = sub.add_parser("bench", help="run a benchmark suite")
    common(q, model=False)
    q.add_argument("--suite", choices=("auction", "rps", "pennies", "all"), default="all")
    q.add_argument("--max-bidders", type=int, default=4)
    q.add_argument("--max-players", type=int, default=4)
    q.add_argument("--blaming", choices=("both", "yes", "no"), default="both")
    q.add_argument("--reqs", help="comma separated subset of ice,ece,fce,priv")
    q.add_argument("--jobs", type=int, default=1)
    q.add_argument("--output", "-o", help="CSV path (default stdout)")
    q.set_defaults(func=cmd_bench)

    q = sub.add_parser("gen", help="write a generated model")
    q.add_argument("spec", help="auction:N:blind|public|explain, rps:standard|well, pennies:N[:blaming|plain]")
    q.add_argument("--output", "-o")
    q.add_argument("--format", choices=("text", "json"), default="text")
    q.set_defaults(func=cmd_gen)
    return p


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_HOLDS
    try:
        return args.func(args)
    except ExplicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
