"""Intersection policies, priority (``next``) functions and their checkers."""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Optional, Sequence

from .adversary import AdversaryHistory
from .codec import canonical
from .topology import IntersectionSpec, LaneId, Move, conflicting
from .verdict import FAIL, INCONCLUSIVE, PASS, Verdict, Witness


class PolicyError(ValueError):
    pass


def _moves(cell: Iterable) -> frozenset:
    return frozenset(Move(int(a), int(b)) for a, b in cell)


def _conflict_in(cell: Iterable[Move], spec: IntersectionSpec) -> Optional[tuple]:
    cell = sorted(cell)
    for k, a in enumerate(cell):
        for b in cell[k + 1:]:
            if conflicting(a, b, spec):
                return (a, b)
    return None


class Policy:
    """Maps adversary histories to sets of permitted moves.

    ``period`` is set when the value depends only on ``len(h) % period``; such
    policies can be evaluated from the time alone via :meth:`at_time`.
    """

    kind = "abstract"
    period: Optional[int] = None

    def eval(self, h: AdversaryHistory) -> frozenset:
        raise NotImplementedError

    def at_time(self, m: int) -> frozenset:
        raise PolicyError(f"{self.kind} policy is not determined by the time alone")

    def at(self, run, m: int) -> frozenset:
        if self.period is not None:
            return self.at_time(m)
        return self.eval(run.history(m))

    def describe(self) -> dict:
        return {"kind": self.kind}


class EmptyPolicy(Policy):
    kind = "empty"
    period = 1

    def eval(self, h):
        return frozenset()

    def at_time(self, m):
        return frozenset()


class CyclicPolicy(Policy):
    kind = "cyclic"

    def __init__(self, cells: Sequence[frozenset]):
        self.cells = tuple(frozenset(c) for c in cells)
        self.period = len(self.cells)

    def eval(self, h):
        return self.cells[len(h) % self.period]

    def at_time(self, m):
        return self.cells[m % self.period]

    def describe(self):
        return {"kind": self.kind, "cells": [sorted(map(list, c)) for c in self.cells]}


class PriorityPolicy(Policy):
    """Base cycle restricted to lanes holding a waiting high-priority agent.

    Queue contents are rebuilt from the history, assuming every permitted move
    with a waiting front agent is taken.
    """

    kind = "priority"

    def __init__(self, agents: Iterable, base: CyclicPolicy, spec: IntersectionSpec):
        self.agents = frozenset(agents)
        self.base = base
        self.spec = spec
        self._memo: dict = {}

    def eval(self, h):
        key = h.rounds
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        queues = {lane: [] for lane in self.spec.lanes_in}
        permitted = self._restrict(queues, 0)
        for k, rc in enumerate(h.rounds):
            for lane, q in queues.items():
                if q and Move(lane, q[0][1]) in permitted:
                    q.pop(0)
            for agent, lane, intent in sorted(rc.arrivals, key=repr):
                queues[lane].append((agent, intent))
            permitted = self._restrict(queues, k + 1)
        self._memo[key] = permitted
        return permitted

    def _restrict(self, queues: dict, m: int) -> frozenset:
        cell = self.base.at_time(m)
        hot = {lane for lane, q in queues.items() if any(a in self.agents for a, _ in q)}
        if not hot:
            return cell
        return frozenset(mv for mv in cell if mv.source in hot)

    def describe(self):
        return {"kind": self.kind, "agents": sorted(self.agents, key=repr), "base": self.base.describe()}


class TablePolicy(Policy):
    """Explicit table keyed by history rounds; unknown histories raise."""

    kind = "table"

    def __init__(self, table: Mapping[tuple, frozenset]):
        self.table = dict(table)

    def eval(self, h):
        try:
            return self.table[h.rounds]
        except KeyError:
            raise PolicyError(f"history of length {len(h)} outside the policy table") from None

    def describe(self):
        return {"kind": self.kind, "entries": len(self.table)}

    def to_json(self) -> list:
        rows = [
            {"history": canonical(h), "length": len(h), "moves": sorted(list(mv) for mv in moves)}
            for h, moves in self.table.items()
        ]
        return sorted(rows, key=lambda r: (r["length"], r["history"]))


def cyclic_policy(partition: Sequence[Iterable], spec: Optional[IntersectionSpec] = None) -> CyclicPolicy:
    cells = [_moves(c) for c in partition]
    if not cells:
        raise PolicyError("a cyclic policy needs at least one cell")
    if spec is not None:
        for k, c in enumerate(cells):
            bad = _conflict_in(c, spec)
            if bad:
                raise PolicyError(f"cell {k} holds conflicting moves {bad[0]} and {bad[1]}")
            for mv in c:
                if not spec.is_move(mv):
                    raise PolicyError(f"cell {k} holds non-move {tuple(mv)}")
    return CyclicPolicy(cells)


def traffic_light_policy(spec: IntersectionSpec) -> CyclicPolicy:
    """One cell per in-lane holding every move out of that lane."""
    return cyclic_policy([[(l, o) for o in spec.lanes_out] for l in spec.lanes_in], spec)


def empty_policy() -> EmptyPolicy:
    return EmptyPolicy()


def priority_policy(agents: Iterable, base: CyclicPolicy, spec: IntersectionSpec) -> PriorityPolicy:
    if not isinstance(base, CyclicPolicy):
        raise PolicyError("the base of a priority policy must be cyclic")
    return PriorityPolicy(agents, base, spec)


class NextFn:
    kind = "abstract"
    period: Optional[int] = None

    def eval(self, h: AdversaryHistory) -> LaneId:
        raise NotImplementedError

    def at_time(self, m: int) -> LaneId:
        raise PolicyError(f"{self.kind} next function is not determined by the time alone")

    def at(self, run, m: int) -> LaneId:
        if self.period is not None:
            return self.at_time(m)
        return self.eval(run.history(m))

    def describe(self) -> dict:
        return {"kind": self.kind}


class RoundRobinNext(NextFn):
    kind = "round_robin"

    def __init__(self, spec: IntersectionSpec):
        self.lanes = spec.lanes_in
        self.period = len(self.lanes)

    def eval(self, h):
        return self.at_time(len(h))

    def at_time(self, m):
        return self.lanes[m % len(self.lanes)]


class CycleHeldNext(NextFn):
    """Holds each lane for ``k`` rounds: ``lanes[(m // k) % n]``."""

    kind = "cycle_held"

    def __init__(self, k: int, spec: IntersectionSpec):
        if k < 1:
            raise PolicyError("cycle length must be positive")
        self.k = k
        self.lanes = spec.lanes_in
        self.period = k * len(self.lanes)

    def eval(self, h):
        return self.at_time(len(h))

    def at_time(self, m):
        return self.lanes[(m // self.k) % len(self.lanes)]

    def describe(self):
        return {"kind": self.kind, "k": self.k}


class ConstantNext(NextFn):
    kind = "constant"
    period = 1

    def __init__(self, lane: LaneId, spec: IntersectionSpec):
        if lane not in spec.lanes_in:
            raise PolicyError(f"{lane} is not an in-lane")
        self.lane = lane

    def eval(self, h):
        return self.lane

    def at_time(self, m):
        return self.lane

    def describe(self):
        return {"kind": self.kind, "lane": self.lane}


class TableNext(NextFn):
    kind = "table"

    def __init__(self, table: Mapping[tuple, LaneId], spec: IntersectionSpec):
        for lane in table.values():
            if lane not in spec.lanes_in:
                raise PolicyError(f"{lane} is not an in-lane")
        self.table = dict(table)

    def eval(self, h):
        try:
            return self.table[h.rounds]
        except KeyError:
            raise PolicyError(f"history of length {len(h)} outside the next table") from None


def next_round_robin(spec: IntersectionSpec) -> RoundRobinNext:
    return RoundRobinNext(spec)


# --- checkers -------------------------------------------------------------


def check_conflict_free(sigma: Policy, spec: IntersectionSpec, histories: Iterable[AdversaryHistory] = ()) -> Verdict:
    """Every permitted set is free of conflicting moves.

    Time-periodic policies are checked exactly over one period; table
    policies exactly over their domain; anything else over ``histories``.
    """
    name = "conflict_free"
    if sigma.period is not None:
        ws = []
        for k in range(sigma.period):
            bad = _conflict_in(sigma.at_time(k), spec)
            if bad:
                ws.append(Witness(None, k, (), f"{bad[0]} conflicts with {bad[1]}"))
        return Verdict(name, FAIL if ws else PASS, ws, exact=True)
    if isinstance(sigma, TablePolicy):
        items = [(len(h), canonical(h), cell) for h, cell in sigma.table.items()]
        exact = True
    else:
        items = [(len(h), canonical(h.rounds), sigma.eval(h)) for h in histories]
        exact = False
    ws = []
    for length, key, cell in items:
        bad = _conflict_in(cell, spec)
        if bad:
            ws.append(Witness(key, length, (), f"{bad[0]} conflicts with {bad[1]}"))
    if ws:
        return Verdict(name, FAIL, ws, exact=exact)
    return Verdict(name, PASS if exact else INCONCLUSIVE, exact=exact,
                   notes=[] if exact else ["checked on the supplied histories only"])


def check_fairness(sigma: Policy, spec: IntersectionSpec) -> Verdict:
    name = "fairness"
    if sigma.period is not None:
        seen = set()
        for k in range(sigma.period):
            seen |= sigma.at_time(k)
        missing = [mv for mv in spec.moves if mv not in seen]
        ws = [Witness(None, None, (), f"move {mv} is never permitted") for mv in missing]
        return Verdict(name, FAIL if ws else PASS, ws, exact=True)
    return Verdict(name, INCONCLUSIVE, exact=False,
                   notes=[f"fairness of a {sigma.kind} policy is not decidable here"])


def check_pair_fairness(sigma: Policy, nxt: NextFn, spec: IntersectionSpec) -> Verdict:
    """Every move is eventually permitted or prioritised while unblocked.

    Exact when both ``sigma`` and ``nxt`` are periodic in time; checked over
    the least common multiple of the two periods.
    """
    name = "pair_fairness"
    if sigma.period is None or nxt.period is None:
        return Verdict(name, INCONCLUSIVE, exact=False,
                       notes=["pair fairness is only decided for time-periodic policies"])
    span = math.lcm(sigma.period, nxt.period)
    ok = set()
    for p in range(span):
        cell = sigma.at_time(p)
        lane = nxt.at_time(p)
        for mv in spec.moves:
            if mv in cell:
                ok.add(mv)
            elif mv.source == lane and not any(conflicting(mv, b, spec) for b in cell):
                ok.add(mv)
    ws = [Witness(None, None, (), f"move {mv} is starved") for mv in spec.moves if mv not in ok]
    return Verdict(name, FAIL if ws else PASS, ws, exact=True, stats={"span": span})


def check_efficient(sigma: Policy, spec: IntersectionSpec, histories: Iterable[AdversaryHistory] = ()) -> Verdict:
    """Each permitted set is a maximal conflict-free set of moves."""
    name = "efficient"
    if sigma.period is not None:
        cells = [(None, k, sigma.at_time(k)) for k in range(sigma.period)]
        exact = True
    elif isinstance(sigma, TablePolicy):
        cells = [(canonical(h), len(h), c) for h, c in sigma.table.items()]
        exact = True
    else:
        cells = [(canonical(h.rounds), len(h), sigma.eval(h)) for h in histories]
        exact = False
    ws = []
    for key, length, cell in cells:
        for mv in spec.moves:
            if mv not in cell and not any(conflicting(mv, b, spec) for b in cell):
                ws.append(Witness(key, length, (), f"move {mv} could be added"))
                break
    if ws:
        return Verdict(name, FAIL, ws, exact=exact)
    return Verdict(name, PASS if exact else INCONCLUSIVE, exact=exact)
