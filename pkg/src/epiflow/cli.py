"""Command-line interface.

Subcommands::

    check      run one policy (or a raw formula) against a program
    model      dump the executions and the epoch table
    diff       run the trace-based and epistemic reading of one policy
    knowledge  knowledge/release set sizes after each observed output
    fuzz       differential fuzzing of the condition pairs

Exit status of ``check``: 0 the policy holds, 1 it fails, 2 the model has
a non-terminating run and the verdict is refused, 3 usage error.
"""

from __future__ import annotations

import argparse
import sys

from .domain import Domain, DomainError
from .fuzz import PAIRS, FuzzConfig, fuzz_equivalences
from .lang import LangError, ParseError, parse
from .logic import (LogicError, formula_identifiers, model_satisfies,
                    parse_formula)
from .model import ModelConfig, build_model
from .policies import FlowSpec, PolicyError, ReleaseSpec
from .policyfile import (CheckRun, Policy, load_policy, run_both_sides,
                         run_check, _policy_pieces)
from .report import build_report, model_dump, render_text
from .semantics import knowledge_set, release_set
from .verdicts import Outcome

EXIT_HOLDS = 0
EXIT_FAILS = 1
EXIT_BOUND = 2
EXIT_USAGE = 3

_EXIT_OF = {
    Outcome.HOLDS: EXIT_HOLDS,
    Outcome.FAILS: EXIT_FAILS,
    Outcome.BOUND_EXCEEDED: EXIT_BOUND,
}


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--program", required=True, help="program file (.wout)")
    parser.add_argument("--domain", default="bool", help="bool or int:N (default bool)")
    parser.add_argument("--signed-window", action="store_true",
                        help="use the signed window [-N/2, N/2) for int domains")
    parser.add_argument("--hash", dest="hash_table", default=None,
                        help="hash builtin as comma-separated outputs, in value order")
    parser.add_argument("--bound", type=int, default=10_000,
                        help="step bound per execution (default 10000)")
    parser.add_argument("--termination-output", action="store_true",
                        help="append a marker event when a run terminates")
    parser.add_argument("--low", default=None,
                        help="comma-separated low identifiers (overrides the policy)")
    parser.add_argument("--aak-fix-low", action="store_true",
                        help="pin public inputs exactly in the abstract-knowledge check")
    parser.add_argument("--report", default=None, help="also write a JSON report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epiflow",
        description="information-flow checks on while-programs with output")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="run one policy against a program")
    _common_flags(p_check)
    p_check.add_argument("--policy", default=None, help="policy file (.pol)")
    p_check.add_argument("--formula", default=None,
                         help="raw formula instead of a policy file")
    p_check.set_defaults(func=cmd_check)

    p_model = sub.add_parser("model", help="dump executions and epochs")
    _common_flags(p_model)
    p_model.set_defaults(func=cmd_model)

    p_diff = sub.add_parser("diff", help="compare both readings of a policy")
    _common_flags(p_diff)
    p_diff.add_argument("--policy", required=True)
    p_diff.set_defaults(func=cmd_diff)

    p_know = sub.add_parser("knowledge",
                            help="knowledge/release sets along one run")
    _common_flags(p_know)
    p_know.add_argument("--policy", required=True,
                        help="policy carrying the low split and any releases")
    p_know.add_argument("--init", default=None,
                        help="initial store, e.g. 'l=tt,h1=tt,h2=ff' (default: first store)")
    p_know.set_defaults(func=cmd_knowledge)

    p_fuzz = sub.add_parser("fuzz", help="differential fuzzing of condition pairs")
    p_fuzz.add_argument("--pairs", default=",".join(PAIRS),
                        help=f"comma-separated pairs (default all: {','.join(PAIRS)})")
    p_fuzz.add_argument("--count", type=int, default=200)
    p_fuzz.add_argument("--seed", type=int, default=1)
    p_fuzz.add_argument("--ids", type=int, default=2, help="identifier count (max 3)")
    p_fuzz.add_argument("--size", type=int, default=8, help="statement budget")
    p_fuzz.add_argument("--loops", action="store_true", help="allow bounded loops")
    p_fuzz.add_argument("--domain", default="bool")
    p_fuzz.add_argument("--signed-window", action="store_true")
    p_fuzz.add_argument("--hash", dest="hash_table", default=None)
    p_fuzz.add_argument("--bound", type=int, default=2_000)
    p_fuzz.set_defaults(func=cmd_fuzz)

    return parser


def _domain_from(args) -> Domain:
    spec = args.domain.strip()
    table = None
    if args.hash_table:
        raw = [token.strip() for token in args.hash_table.split(",")]
        table = tuple(True if t == "tt" else False if t == "ff" else int(t) for t in raw)
    if spec == "bool":
        if args.signed_window:
            raise DomainError("--signed-window applies to integer domains")
        return Domain.booleans() if table is None else Domain("bool", 2, False, table)
    if spec.startswith("int:"):
        return Domain.integers(int(spec[4:]), signed=args.signed_window, hash_table=table)
    raise DomainError(f"unknown domain {spec!r}; use bool or int:N")


def _load(args) -> tuple:
    dom = _domain_from(args)
    with open(args.program, encoding="utf-8") as handle:
        text = handle.read()
    program = parse(text, dom)
    cfg = ModelConfig(dom, bound=args.bound,
                      termination_output=args.termination_output)
    return dom, text, program, cfg


def _policy_from(args, program) -> Policy:
    if args.policy is None:
        raise PolicyError("a policy file is required (or use --formula)")
    policy = load_policy(args.policy)
    if args.low is not None:
        low = tuple(n.strip() for n in args.low.split(",") if n.strip())
        policy = Policy(policy.check, low, policy.declassify, policy.eta,
                        policy.phi, policy.rho, policy.releases, policy.whens)
    return policy


def cmd_check(args) -> int:
    dom, text, program, cfg = _load(args)
    if args.formula is not None:
        formula = parse_formula(args.formula)
        unknown = formula_identifiers(formula) - set(program.variables) - set(program.flags)
        if unknown:
            raise LogicError(f"formula mentions unknown identifier {sorted(unknown)[0]!r}")
        import time
        start = time.perf_counter()
        model = build_model(program, cfg)
        verdict = model_satisfies(model, formula)
        run = CheckRun("formula", verdict, model, formula,
                       elapsed=time.perf_counter() - start)
        policy_payload = {"formula": args.formula}
    else:
        policy = _policy_from(args, program)
        run = run_check(program, policy, cfg, fix_low=args.aak_fix_low)
        policy_payload = policy.describe()
    report = build_report(run, policy_payload, dom, text, args.program,
                          args.bound, args.termination_output)
    sys.stdout.write(render_text(report))
    if args.report:
        with open(args.report, "w", encoding="utf-8") as handle:
            handle.write(report.to_json_text())
    return _EXIT_OF[run.verdict.outcome]


def cmd_model(args) -> int:
    _, _, program, cfg = _load(args)
    model = build_model(program, cfg)
    sys.stdout.write(model_dump(model))
    return EXIT_HOLDS


def cmd_diff(args) -> int:
    dom, text, program, cfg = _load(args)
    policy = _policy_from(args, program)
    sem_run, epi_run = run_both_sides(program, policy, cfg,
                                      fix_low=args.aak_fix_low)
    agree = sem_run.verdict.outcome is epi_run.verdict.outcome
    print(f"pair {sem_run.check}/{epi_run.check}: "
          f"semantic={sem_run.verdict} epistemic={epi_run.verdict} "
          f"{'agree' if agree else 'MISMATCH'}")
    return EXIT_HOLDS if agree else EXIT_FAILS


def _parse_init(text: str, program, dom: Domain) -> dict:
    store = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise PolicyError(f"bad --init entry {item!r}; expected name=value")
        name, raw = (part.strip() for part in item.split("=", 1))
        if name not in program.variables:
            raise PolicyError(f"--init names unknown identifier {name!r}")
        if dom.kind == "bool":
            if raw not in ("tt", "ff", "true", "false"):
                raise PolicyError(f"bad boolean {raw!r} in --init")
            store[name] = raw in ("tt", "true")
        else:
            store[name] = int(raw)
            if store[name] not in dom:
                raise PolicyError(f"--init value {raw} outside the domain")
    missing = [n for n in program.variables if n not in store]
    if missing:
        raise PolicyError(f"--init misses {missing[0]!r}")
    return store


def cmd_knowledge(args) -> int:
    dom, text, program, cfg = _load(args)
    policy = _policy_from(args, program)
    pieces = _policy_pieces(policy, program, dom)
    fs: FlowSpec = pieces["fs"]
    releases: ReleaseSpec = pieces.get("releases", ReleaseSpec(()))
    releases.check_against(program, dom)
    model = build_model(program, cfg)
    if model.tainted:
        print("model contains a non-terminated execution; refusing")
        return EXIT_BOUND

    if args.init:
        store = _parse_init(args.init, program, dom)
        store.update((f, dom.false_value) for f in program.flags)
    else:
        store = dict(model.executions[0].init_store)
    execution = model.exec_by_values[tuple(store[n] for n in model.variables)]

    full = model.trace_tuple(execution.trace_ids[len(execution)])
    print("trace prefix | |K| | |R| | verdict")
    status = EXIT_HOLDS
    for cut in range(len(full) + 1):
        trace = full[:cut]
        knowledge = knowledge_set(model, fs, store, trace)
        required = release_set(model, fs, releases, store, trace)
        secure = required <= knowledge
        if not secure:
            status = EXIT_FAILS
        shown = ", ".join(dom.format_value(e) for e in trace)
        print(f"[{shown}] | {len(knowledge)} | {len(required)} | "
              f"{'SECURE' if secure else 'INSECURE'}")
    return status


def cmd_fuzz(args) -> int:
    dom = _domain_from(args)
    pairs = tuple(p.strip() for p in args.pairs.split(",") if p.strip())
    cfg = FuzzConfig(seed=args.seed, count=args.count, size=args.size,
                     ident_count=args.ids, domain=dom, pairs=pairs,
                     loops=args.loops, bound=args.bound)
    summary = fuzz_equivalences(cfg)
    sys.stdout.write(summary.render())
    return EXIT_HOLDS if summary.ok else EXIT_FAILS


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_HOLDS if not exc.code else EXIT_USAGE
    try:
        return args.func(args)
    except (ParseError, LangError, PolicyError, LogicError, DomainError,
            OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
