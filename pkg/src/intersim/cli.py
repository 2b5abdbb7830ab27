"""Command-line entry point: simulate, verify, compare, synthesize, extract."""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter

from . import __version__
from .kernel import trace_records
from .policy import (
    check_conflict_free,
    check_efficient,
    check_fairness,
    check_pair_fairness,
)
from .protocols import Psigma, ProtocolError, SynthesisError, TabulatedProtocol, behaviour_diff, synthesize_implementation
from .scenario import ScenarioError, load_scenario
from .verdict import FAIL, INCONCLUSIVE, PASS, Verdict, Witness
from . import verify as V

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ERROR = 2

DEFAULT_CHECKS = ("validity", "safety", "liveness")
MAX_WITNESSES = 25


def _write(path: str, text: str) -> None:
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=True) + "\n"


def _out_dir(args, sc) -> str:
    if args.out:
        return args.out
    return sc.data.get("out", os.path.join("out", sc.name))


def _overall(statuses, allow_inconclusive: bool) -> str:
    statuses = list(statuses)
    if FAIL in statuses:
        return FAIL
    if INCONCLUSIVE in statuses:
        return PASS if allow_inconclusive else INCONCLUSIVE
    return PASS


def _exit_for(status: str) -> int:
    return EXIT_OK if status == PASS else EXIT_FAIL


def _header(sc, command: str) -> dict:
    return {
        "tool": "intersim",
        "version": __version__,
        "command": command,
        "scenario": sc.name,
        "context_digest": sc.context_digest(),
        "horizon": sc.horizon,
        "runs": len(sc.adversaries),
        "truncated": sc.truncated,
    }


# --- simulate -------------------------------------------------------------


def cmd_simulate(args, sc) -> int:
    out = _out_dir(args, sc)
    summary = _header(sc, "simulate")
    summary["protocols"] = {}
    for proto in sc.protocols():
        system = sc.system(proto)
        lines = []
        crossings = Counter()
        for run in system:
            for rec in trace_records(run):
                lines.append(json.dumps(rec, separators=(",", ":"), ensure_ascii=True))
            for m, gs in enumerate(run.go_sets):
                crossings[m] += len(gs)
        _write(os.path.join(out, f"trace_{proto.name}.jsonl"), "\n".join(lines) + ("\n" if lines else ""))
        summary["protocols"][proto.name] = {
            "runs": len(system),
            "trace_blocks": len(system),
            "trace_records": len(lines),
            "crossings_total": sum(crossings.values()),
            "crossings_per_round": [crossings[m] for m in range(sc.horizon)],
        }
    _write(os.path.join(out, "simulate.json"), _json(summary))
    for name, s in summary["protocols"].items():
        print(f"{name}: {s['runs']} runs, {s['crossings_total']} crossings over {sc.horizon} rounds")
    return EXIT_OK


# --- verify ---------------------------------------------------------------

_INTENT_ONLY = {"front_memory", "pos_knowledge"}


def _run_check(name: str, sc, proto) -> Verdict:
    spec = sc.spec
    if name in _INTENT_ONLY and sc.exchange.name != "intent":
        raise ScenarioError(f"checks: {name} needs the intent exchange, scenario uses {sc.exchange.name}")
    if name == "conflict_free":
        return check_conflict_free(sc.policy(), spec)
    if name == "fairness":
        return check_fairness(sc.policy(), spec)
    if name == "pair_fairness":
        return check_pair_fairness(sc.policy(), sc.next_fn(), spec)
    if name == "efficient":
        return check_efficient(sc.policy(), spec)
    system = sc.system(proto)
    if name == "validity":
        return V.check_validity(system)
    if name == "safety":
        return V.check_safety(system)
    if name == "liveness":
        return V.check_liveness_bounded(system, sc.liveness_bound)
    if name == "unnecessary_waiting":
        return V.find_unnecessary_waiting(system)
    if name == "implements":
        return V.check_implements(proto, sc.program(), system)
    if name == "sigma_aware":
        return V.check_sigma_awareness(system, sc.policy())
    if name == "next_aware":
        return V.check_next_awareness(system, sc.next_fn())
    if name == "rich_knowledge":
        return V.check_sufficiently_rich_knowledge(system)
    if name == "front_memory":
        return V.check_front_memory_agreement(system, sc.next_fn())
    if name == "pos_knowledge":
        return V.check_pos_knowledge(system, sc.next_fn())
    raise ScenarioError(f"checks: unknown check {name!r}")


CHECKS = (
    "validity", "safety", "liveness", "unnecessary_waiting", "implements", "sigma_aware",
    "next_aware", "rich_knowledge", "front_memory", "pos_knowledge", "conflict_free",
    "fairness", "pair_fairness", "efficient",
)


def cmd_verify(args, sc) -> int:
    checks = args.checks.split(",") if args.checks else sc.data.get("checks", list(DEFAULT_CHECKS))
    report = _header(sc, "verify")
    report["protocols"] = {}
    statuses = []
    for proto in sc.protocols():
        results = []
        for name in checks:
            v = _run_check(name.strip(), sc, proto)
            results.append(v.to_dict(MAX_WITNESSES))
            statuses.append(v.status)
            print(f"{proto.name} {v.check}: {v.status}" + (f" ({len(v.witnesses)} witness(es))" if v.witnesses else ""))
        report["protocols"][proto.name] = results
    status = _overall(statuses, args.allow_inconclusive)
    report["status"] = status
    _write(os.path.join(_out_dir(args, sc), "verify.json"), _json(report))
    return _exit_for(status)


# --- compare --------------------------------------------------------------


def cmd_compare(args, sc) -> int:
    protos = sc.protocols()
    if len(protos) != 2:
        raise ScenarioError("protocols: compare needs exactly two protocols")
    a, b = protos
    sa, sb = sc.system(a), sc.system(b)
    try:
        dom = V.compare_domination(sa, sb)
        lex = V.compare_lex_domination(sa, sb)
    except V.ComparisonError as e:
        raise ScenarioError(f"protocols: {e}") from None
    report = _header(sc, "compare")
    report["first"], report["second"] = a.name, b.name
    report["domination"] = dom.to_dict(MAX_WITNESSES)
    report["lexicographic"] = lex.to_dict(MAX_WITNESSES)
    checks = []
    if lex.relation == V.FIRST:
        checks.append(V.check_divergence_waiting(sb, sa))
    elif lex.relation == V.SECOND:
        checks.append(V.check_divergence_waiting(sa, sb))
    report["derived"] = [c.to_dict(MAX_WITNESSES) for c in checks]
    expect = sc.data.get("expect", {})
    statuses = [c.status for c in checks]
    if "lexicographic" in expect:
        statuses.append(PASS if lex.relation == expect["lexicographic"] else FAIL)
    if "domination" in expect:
        statuses.append(PASS if dom.relation == expect["domination"] else FAIL)
    if not lex.exact or sc.truncated:
        statuses.append(INCONCLUSIVE)
    status = _overall(statuses, args.allow_inconclusive)
    report["status"] = status
    _write(os.path.join(_out_dir(args, sc), "compare.json"), _json(report))
    print(f"domination: {dom.relation}; lexicographic: {lex.relation} "
          f"({len(lex.first_better)} vs {len(lex.second_better)} wins, {len(lex.blocking)} blocking)")
    return _exit_for(status)


# --- synthesize -----------------------------------------------------------


def cmd_synthesize(args, sc) -> int:
    program = sc.program()
    out = _out_dir(args, sc)
    report = _header(sc, "synthesize")
    report["program"] = program.describe()
    try:
        table = synthesize_implementation(sc.spec, sc.exchange, sc.adversaries, program, sc.horizon, sc.agents,
                                          name=f"synthesized_{program.kind}")
    except SynthesisError as e:
        report["status"] = FAIL
        report["error"] = str(e)
        _write(os.path.join(out, "synthesize.json"), _json(report))
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_FAIL
    path = os.path.join(out, "protocol_table.json")
    _write(path, table.dumps())
    reloaded = TabulatedProtocol.load(path)
    system = sc.system(reloaded)
    checks = [
        V.check_sigma_awareness(system, program.sigma),
        V.check_implements(reloaded, program, system),
    ]
    if program.next_fn is not None:
        checks.insert(1, V.check_next_awareness(system, program.next_fn))
    compare_to = sc.data.get("compare_to")
    if compare_to:
        other = sc.protocol(compare_to)
        diff = behaviour_diff(reloaded, other, system)
        report["behaviour_diff"] = {"against": other.name, "count": len(diff), "first": [list(map(str, d)) for d in diff[:MAX_WITNESSES]]}
        if diff:
            checks.append(Verdict("same_behaviour", FAIL, [Witness(r, m, (a,), f"differs from {other.name}") for r, m, a in diff]))
        else:
            checks.append(Verdict("same_behaviour", PASS))
    report["checks"] = [c.to_dict(MAX_WITNESSES) for c in checks]
    report["table_entries"] = len(table.table)
    report["table_go_entries"] = len(table.go_keys())
    status = _overall([c.status for c in checks], args.allow_inconclusive)
    report["status"] = status
    _write(os.path.join(out, "synthesize.json"), _json(report))
    for c in checks:
        print(f"{c.check}: {c.status}")
    print(f"table: {len(table.table)} states -> {path}")
    return _exit_for(status)


# --- extract --------------------------------------------------------------


def cmd_extract(args, sc) -> int:
    protos = sc.protocols()
    if len(protos) != 1:
        raise ScenarioError("protocol: extract needs exactly one protocol")
    proto = protos[0]
    system = sc.system(proto)
    out = _out_dir(args, sc)
    report = _header(sc, "extract")
    report["protocol"] = proto.name
    pre = [V.check_validity(system), V.check_safety(system)]
    report["preconditions"] = [c.to_dict(MAX_WITNESSES) for c in pre]
    if any(c.status == FAIL for c in pre):
        report["status"] = FAIL
        _write(os.path.join(out, "extract.json"), _json(report))
        print("refused: the protocol is not valid and safe on this context", file=sys.stderr)
        return EXIT_FAIL
    sigma = V.extract_policy(system)
    _write(os.path.join(out, "policy_table.json"), _json({"entries": sigma.to_json()}))
    checks = [
        check_conflict_free(sigma, sc.spec),
        V.check_implements(proto, Psigma(sigma), system),
    ]
    report["checks"] = [c.to_dict(MAX_WITNESSES) for c in checks]
    report["policy_entries"] = len(sigma.table)
    report["policy_nonempty_entries"] = sum(1 for v in sigma.table.values() if v)
    status = _overall([c.status for c in checks], args.allow_inconclusive)
    report["status"] = status
    _write(os.path.join(out, "extract.json"), _json(report))
    for c in checks:
        print(f"{c.check}: {c.status}")
    return _exit_for(status)


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "compare": cmd_compare,
    "synthesize": cmd_synthesize,
    "extract": cmd_extract,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="intersim", description="Simulate and verify intersection protocols.")
    ap.add_argument("--version", action="version", version=f"intersim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__name__.replace("cmd_", ""))
        p.add_argument("scenario", help="scenario JSON file")
        p.add_argument("--horizon", type=int, default=None, help="override the scenario horizon")
        p.add_argument("--liveness-bound", type=int, default=None)
        p.add_argument("--caps", type=int, default=None, help="cap the number of enumerated adversaries")
        p.add_argument("--allow-inconclusive", action="store_true", help="treat inconclusive verdicts as passing")
        p.add_argument("--strict-vi", action="store_true", help="violation condition checks every permitted move")
        p.add_argument("--out", default=None, help="output directory")
        if name == "verify":
            p.add_argument("--checks", default=None, help="comma-separated subset of: " + ",".join(CHECKS))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.liveness_bound is not None:
        overrides["liveness_bound"] = args.liveness_bound
    if args.caps is not None:
        overrides["caps"] = args.caps
    if args.strict_vi:
        overrides["strict_vi"] = True
    try:
        sc = load_scenario(args.scenario, overrides)
        if sc.horizon < 1 and args.command != "simulate":
            raise ScenarioError("horizon: must be at least 1")
        return COMMANDS[args.command](args, sc)
    except (ScenarioError, ProtocolError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
