"""Checks that quantify over knowledge classes of a system: implementation of
knowledge-based programs, policy extraction, awareness, and the structural
facts about the intent exchange."""

from __future__ import annotations

from ..adversary import FailureModel
from ..codec import canonical
from ..exchange import GO, NOOP, own_move
from ..kernel import System, generate_system
from ..policy import NextFn, Policy, PolicyError, TablePolicy
from ..protocols import KbProgram, kbp_condition, pos_set_intent
from ..topology import Move, cyclic_interval
from ..verdict import FAIL, INCONCLUSIVE, PASS, Verdict, Witness, from_witnesses


def _system_for(candidate, context) -> System:
    if isinstance(context, System):
        return context
    spec, exchange, adversaries, horizon = context
    return generate_system(spec, exchange, candidate, adversaries, horizon)


def check_implements(candidate, program: KbProgram, context) -> Verdict:
    """Compare ``candidate`` with ``program`` evaluated in the candidate's own system.

    ``context`` is either the candidate's system or a tuple
    ``(spec, exchange, adversaries, horizon)``. Points at the horizon are
    skipped because the program looks one round ahead.
    """
    system = _system_for(candidate, context)
    spec = system.spec
    ws = []
    classes = 0
    for m in range(system.horizon):
        for agent, local, runs in system.groups(m):
            classes += 1
            if local.sensors.front and all(kbp_condition(program, spec, r, m, agent) for r in runs):
                expected = GO
            else:
                expected = NOOP
            actual = candidate.act(agent, local)
            if actual != expected:
                ws.append(Witness(runs[0].adversary.name, m, (agent,),
                                  f"program says {expected}, protocol does {actual} ({len(runs)} run(s) in class)"))
    v = from_witnesses("implements", ws, truncated=system.truncated, stats={"classes": classes})
    v.notes.append("points at the horizon are not evaluated")
    return v


def extract_policy(system) -> TablePolicy:
    """The moves made by front agents, tabulated by adversary history."""
    table: dict = {}
    for run in system:
        for m in range(run.horizon):
            h = run.history(m).rounds
            moves = frozenset(own_move(run.reading(m, a)) for a in run.go_sets[m])
            prev = table.setdefault(h, moves)
            if prev != moves:
                raise PolicyError(f"runs sharing a history of length {m} move differently")
    return TablePolicy(table)


def check_sigma_awareness(system, sigma: Policy) -> Verdict:
    """Every agent in a lane knows which moves out of its lane are permitted."""
    ws = []
    skipped = 0
    lanes = set(system.spec.lanes_in)
    for m in range(system.horizon + 1):
        for agent, local, runs in system.groups(m):
            lane = local.sensors.lane
            if lane not in lanes:
                continue
            try:
                seen = {frozenset(mv for mv in sigma.at(r, m) if mv[0] == lane) for r in runs}
            except PolicyError:
                # e.g. an extracted table has no entry for horizon-length histories
                skipped += 1
                continue
            if len(seen) > 1:
                ws.append(Witness(runs[0].adversary.name, m, (agent,),
                                  f"permitted moves from lane {lane} differ across indistinguishable runs"))
    v = from_witnesses("sigma_aware", ws, truncated=system.truncated, stats={"skipped": skipped})
    if skipped:
        v.notes.append(f"{skipped} knowledge class(es) outside the policy's domain were skipped")
    return v


def check_next_awareness(system, next_fn: NextFn) -> Verdict:
    ws = []
    for m in range(system.horizon + 1):
        for agent, local, runs in system.groups(m):
            seen = {next_fn.at(r, m) for r in runs}
            if len(seen) > 1:
                ws.append(Witness(runs[0].adversary.name, m, (agent,), f"priority lane is one of {sorted(seen)}"))
    return from_witnesses("next_aware", ws, truncated=system.truncated)


def check_awareness(system, target) -> Verdict:
    if isinstance(target, NextFn):
        return check_next_awareness(system, target)
    return check_sigma_awareness(system, target)


def failure_free(system) -> bool:
    if system.model is not None:
        return system.model is FailureModel.NF
    H = system.horizon
    for run in system:
        f = run.adversary.failures
        if any(k < H for k, _ in f.transmit_off | f.receive_off):
            return False
    return True


def check_sufficiently_rich_knowledge(system) -> Verdict:
    """A front agent knows, for every lane, that it has a front agent or that it is empty."""
    name = "rich_knowledge"
    if not failure_free(system):
        return Verdict(name, INCONCLUSIVE, exact=False, notes=["not applicable: the context has failures"])
    ws = []
    lanes = system.spec.lanes_in
    for m in range(system.horizon + 1):
        for agent, local, runs in system.groups(m):
            if not local.sensors.front:
                continue
            for k, lane in enumerate(lanes):
                occupied = [bool(r.states[m].env.queues[k]) for r in runs]
                if not (all(occupied) or not any(occupied)):
                    ws.append(Witness(runs[0].adversary.name, m, (agent,), f"cannot tell whether lane {lane} is occupied"))
    return from_witnesses(name, ws, truncated=system.truncated)


def _front_agents(run, m):
    return sorted(run.fronts[m])


def check_front_memory_agreement(system, next_fn: NextFn | None = None) -> Verdict:
    """All front agents at a point share one memory; with ``next_fn`` their
    Pos stages also agree over shared interval prefixes."""
    ws = []
    spec = system.spec
    for run in system:
        for m in range(run.horizon + 1):
            fr = _front_agents(run, m)
            if len(fr) < 2:
                continue
            mems = {canonical(run.local(m, a).memory) for a in fr}
            if len(mems) > 1:
                ws.append(Witness(run.adversary.name, m, tuple(fr), "front agents hold different memories"))
                continue
            if next_fn is None:
                continue
            nxt = next_fn.at(run, m)
            pos = {a: pos_set_intent(run.local(m, a), nxt, spec) for a in fr}
            for i in fr:
                for j in fr:
                    lj = run.reading(m, j).lane
                    if i == j or lj not in cyclic_interval(nxt, run.reading(m, i).lane, spec):
                        continue
                    for lane in cyclic_interval(nxt, lj, spec):
                        if pos[i].stage(lane) != pos[j].stage(lane):
                            ws.append(Witness(run.adversary.name, m, (i, j), f"Pos stages differ at lane {lane}"))
    return from_witnesses("front_memory_agreement", ws, truncated=system.truncated)


def check_pos_knowledge(system, next_fn: NextFn) -> Verdict:
    """A move from a higher-priority lane is in the agent's Pos set exactly
    when the agent considers it possible that some front agent is making it."""
    ws = []
    spec = system.spec
    checked = 0
    for m in range(system.horizon):
        for agent, local, runs in system.groups(m):
            rd = local.sensors
            if not rd.front:
                continue
            nxts = {next_fn.at(r, m) for r in runs}
            if len(nxts) != 1:
                ws.append(Witness(runs[0].adversary.name, m, (agent,), "priority lane not known"))
                continue
            nxt = nxts.pop()
            pos = pos_set_intent(local, nxt, spec).moves
            possible = set()
            for r in runs:
                for j in r.go_sets[m]:
                    possible.add(own_move(r.reading(m, j)))
            for lane in cyclic_interval(nxt, rd.lane, spec):
                for out in spec.lanes_out:
                    mv = Move(lane, out)
                    checked += 1
                    if (mv in pos) != (mv in possible):
                        side = "in Pos but never made" if mv in pos else "possible but missing from Pos"
                        ws.append(Witness(runs[0].adversary.name, m, (agent,), f"{mv} {side}"))
    return from_witnesses("pos_knowledge", ws, truncated=system.truncated, stats={"checked": checked})
