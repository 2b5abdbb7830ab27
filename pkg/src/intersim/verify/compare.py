"""Comparing two protocols run against the same adversaries."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..verdict import FAIL, INCONCLUSIVE, PASS, Verdict, Witness
from .properties import safe_to_go

EQUAL = "equal"
FIRST = "first_dominates"
SECOND = "second_dominates"
INCOMPARABLE = "incomparable"


class ComparisonError(ValueError):
    pass


def _pairs(sys_a, sys_b):
    if list(sys_a.runs) != list(sys_b.runs):
        raise ComparisonError("the two systems were generated from different adversary sets")
    if sys_a.horizon != sys_b.horizon:
        raise ComparisonError("the two systems have different horizons")
    for name, ra in sys_a.runs.items():
        yield name, ra, sys_b.runs[name]


@dataclass
class Comparison:
    kind: str
    relation: str
    strict: bool
    first_better: list = field(default_factory=list)
    second_better: list = field(default_factory=list)
    blocking: list = field(default_factory=list)
    undecided: int = 0
    exact: bool = True
    notes: list = field(default_factory=list)

    def to_dict(self, max_witnesses=None) -> dict:
        def ws(lst):
            lst = sorted(lst, key=Witness.sort_key)
            lst = lst if max_witnesses is None else lst[:max_witnesses]
            return [{"adversary": w.adversary, "time": w.time, "agents": list(w.agents), "detail": w.detail} for w in lst]

        return {
            "kind": self.kind,
            "relation": self.relation,
            "strict": self.strict,
            "exact": self.exact,
            "first_better_count": len(self.first_better),
            "second_better_count": len(self.second_better),
            "blocking_count": len(self.blocking),
            "undecided": self.undecided,
            "first_better": ws(self.first_better),
            "second_better": ws(self.second_better),
            "blocking": ws(self.blocking),
            "notes": list(self.notes),
        }


def _relation(a_wins: bool, b_wins: bool, blocked: bool) -> str:
    if blocked or (a_wins and b_wins):
        return INCOMPARABLE
    if a_wins:
        return FIRST
    if b_wins:
        return SECOND
    return EQUAL


def compare_domination(sys_a, sys_b) -> Comparison:
    """Pointwise comparison of crossing times over corresponding runs.

    An agent that crossed on one side but is still queued at the horizon on
    the other is decided (the crossing side is earlier). An agent still
    queued on both sides is undecided.
    """
    a_better, b_better = [], []
    undecided = 0
    for name, ra, rb in _pairs(sys_a, sys_b):
        ga, gb = ra.gotimes, rb.gotimes
        for agent in ra.agents:
            if ra.adversary.schedule.get(agent) is None:
                continue
            ta, tb = ga.get(agent), gb.get(agent)
            if ta is None and tb is None:
                undecided += 1
            elif tb is None or (ta is not None and ta < tb):
                a_better.append(Witness(name, ta, (agent,), f"crosses at {ta} vs {'later' if tb is None else tb}"))
            elif ta is None or tb < ta:
                b_better.append(Witness(name, tb, (agent,), f"crosses at {tb} vs {'later' if ta is None else ta}"))
    rel = _relation(bool(a_better), bool(b_better), False)
    c = Comparison("domination", rel, rel in (FIRST, SECOND), a_better, b_better, [], undecided)
    if undecided or sys_a.truncated:
        c.exact = False
        c.notes.append(f"{undecided} agent(s) had not crossed on either side by the horizon")
    return c


def first_divergence(ra, rb):
    """First ``m`` with different GO sets, or ``None`` up to the horizon."""
    for m, (ga, gb) in enumerate(zip(ra.go_sets, rb.go_sets)):
        if ga != gb:
            return m
    return None


def compare_lex_domination(sys_a, sys_b) -> Comparison:
    """At the first round where the GO sets differ the winner's set must be a
    strict superset; otherwise the pair blocks domination either way."""
    a_better, b_better, blocking = [], [], []
    ties = 0
    for name, ra, rb in _pairs(sys_a, sys_b):
        m = first_divergence(ra, rb)
        if m is None:
            ties += 1
            continue
        ga, gb = ra.go_sets[m], rb.go_sets[m]
        if gb < ga:
            a_better.append(Witness(name, m, tuple(sorted(ga - gb)), "first divergence: first side moves more agents"))
        elif ga < gb:
            b_better.append(Witness(name, m, tuple(sorted(gb - ga)), "first divergence: second side moves more agents"))
        else:
            blocking.append(Witness(name, m, tuple(sorted(ga ^ gb)), "first divergence: neither GO set contains the other"))
    rel = _relation(bool(a_better), bool(b_better), bool(blocking))
    c = Comparison("lexicographic", rel, rel in (FIRST, SECOND), a_better, b_better, blocking, ties)
    c.notes.append(f"{ties} run pair(s) identical up to the horizon")
    if sys_a.truncated:
        c.exact = False
    return c


def check_divergence_waiting(sys_p, sys_q) -> Verdict:
    """Wherever ``sys_q`` moves strictly more agents at the first divergence,
    some extra agent must have been waiting unnecessarily in ``sys_p``."""
    ws = []
    checked = 0
    for name, rp, rq in _pairs(sys_p, sys_q):
        m = first_divergence(rp, rq)
        if m is None:
            continue
        gp, gq = rp.go_sets[m], rq.go_sets[m]
        if not gp < gq:
            continue
        checked += 1
        if not any(safe_to_go(sys_p, rp, m, a) for a in gq - gp):
            ws.append(Witness(name, m, tuple(sorted(gq - gp)), "strictly better run without unnecessary waiting"))
    status = FAIL if ws else PASS
    return Verdict("divergence_implies_waiting", status, ws, stats={"divergences": checked})
