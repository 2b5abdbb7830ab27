"""Run-level correctness checks: validity, safety, liveness and unnecessary waiting."""

from __future__ import annotations

from ..exchange import own_move
from ..topology import compatible
from ..verdict import FAIL, INCONCLUSIVE, PASS, Verdict, Witness, from_witnesses


def _move(run, m, agent):
    return own_move(run.reading(m, agent))


def check_validity(system) -> Verdict:
    """Only agents at the front of a lane ever go."""
    ws = []
    for run in system:
        for m, rec in enumerate(run.rounds):
            for a in sorted(rec.invalid_go):
                ws.append(Witness(run.adversary.name, m, (a,), "go issued while not at the front"))
            for a in run.go_sets[m]:
                if not run.reading(m, a).front:
                    ws.append(Witness(run.adversary.name, m, (a,), "crossed while not at the front"))
    return from_witnesses("validity", ws, truncated=system.truncated)


def check_safety(system) -> Verdict:
    """Agents crossing in the same round make compatible moves."""
    spec = system.spec
    ws = []
    for run in system:
        for m, gs in enumerate(run.go_sets):
            goers = sorted(gs)
            for k, a in enumerate(goers):
                for b in goers[k + 1:]:
                    ma, mb = _move(run, m, a), _move(run, m, b)
                    if not compatible(ma, mb, spec):
                        ws.append(Witness(run.adversary.name, m, (a, b), f"{ma} and {mb} cross together"))
    return from_witnesses("safety", ws, truncated=system.truncated)


def check_liveness_bounded(system, bound: int) -> Verdict:
    """Every agent at the front at ``m`` crosses within ``[m, m + bound)``.

    Obligations that run past the horizon without the agent having crossed
    are reported as inconclusive rather than failures.
    """
    if bound < 1:
        raise ValueError("liveness bound must be positive")
    ws = []
    open_ = []
    for run in system:
        H = run.horizon
        gt = run.gotimes
        for m in range(H + 1):
            for a in run.fronts[m]:
                g = gt.get(a)
                if g is not None and m <= g < m + bound:
                    continue
                if m + bound <= H:
                    ws.append(Witness(run.adversary.name, m, (a,), f"still waiting {bound} rounds after reaching the front"))
                else:
                    open_.append((run.adversary.name, m, a))
    if ws:
        return Verdict("liveness", FAIL, ws, stats={"open_obligations": len(open_)})
    stats = {"open_obligations": len(open_)}
    if open_ or system.truncated:
        v = Verdict("liveness", INCONCLUSIVE, exact=False, stats=stats)
        if open_:
            v.notes.append("some agents were still waiting when the horizon cut the run off")
        if system.truncated:
            v.notes.append("adversary enumeration was capped")
        return v
    return Verdict("liveness", PASS, stats=stats)


def safe_to_go(system, run, m: int, agent) -> bool:
    """The agent is at the front and could join this round's goers safely."""
    if m >= run.horizon:
        raise ValueError("safe_to_go needs the round starting at m")
    run = system.run(run)
    p = run.states[m].env.position(agent)
    if not (isinstance(p, tuple) and p[1] == 0):
        return False
    group = sorted(run.go_sets[m] | {agent})
    moves = [_move(run, m, a) for a in group]
    spec = system.spec
    for k, a in enumerate(moves):
        for b in moves[k + 1:]:
            if not compatible(a, b, spec):
                return False
    return True


def unnecessary_waiting_points(system, run, m: int) -> list:
    return sorted(
        a for a in run.fronts[m] if a not in run.go_sets[m] and safe_to_go(system, run, m, a)
    )


def find_unnecessary_waiting(system) -> Verdict:
    """Fails (listing witnesses) when some agent could have crossed safely but waited."""
    ws = []
    for run in system:
        for m in range(run.horizon):
            for a in unnecessary_waiting_points(system, run, m):
                ws.append(Witness(run.adversary.name, m, (a,), "safe to go but waited"))
    return from_witnesses("unnecessary_waiting", ws, truncated=system.truncated)
