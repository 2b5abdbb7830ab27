"""Action protocols, the Pos-set procedures, knowledge-based programs and
their synthesis into lookup tables."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional

from .adversary import history
from .codec import canonical, dumps
from .exchange import GO, NOOP, ExchangeProtocol, LocalState, SensorReading, own_move
from .kernel import advance, initial_state
from .policy import EmptyPolicy, NextFn, Policy, PolicyError
from .topology import IntersectionSpec, Move, compatible, compatible_with_set, conflicting, cyclic_interval


class ProtocolError(ValueError):
    pass


class SynthesisError(ProtocolError):
    """Raised when a knowledge condition cannot be fixed in sweep order."""


@dataclass(frozen=True)
class ActionProtocol:
    name: str
    act_fn: Callable[[object, LocalState], str]
    exchange: Optional[str] = None  # None: works with any exchange

    def act(self, agent, local: LocalState) -> str:
        return self.act_fn(agent, local)

    def check_exchange(self, exchange: ExchangeProtocol) -> None:
        if self.exchange is not None and exchange.name != self.exchange:
            raise ProtocolError(f"protocol {self.name} needs the {self.exchange} exchange, not {exchange.name}")


def _next_lane(next_fn: NextFn, reading: SensorReading):
    if next_fn.period is None:
        raise ProtocolError(f"{next_fn.kind} next function cannot be read off a local state")
    return next_fn.at_time(reading.time)


def traffic_light_protocol(spec: IntersectionSpec) -> ActionProtocol:
    lanes = spec.lanes_in

    def act(agent, local: LocalState) -> str:
        rd = local.sensors
        if rd.front and rd.lane == lanes[rd.time % len(lanes)]:
            return GO
        return NOOP

    return ActionProtocol("traffic_light", act)


class PosSet(NamedTuple):
    moves: frozenset
    stages: tuple  # ((lane, frozenset of moves), ...) along the interval

    def stage(self, lane) -> frozenset:
        for l, s in self.stages:
            if l == lane:
                return s
        raise KeyError(lane)


def _require_front(reading: SensorReading) -> None:
    if not reading.front:
        raise ProtocolError("Pos sets are only defined for agents at the front of a lane")


def pos_set_empty(reading: SensorReading, nxt, spec: IntersectionSpec) -> PosSet:
    """Moves higher-priority lanes might make, knowing nothing about them."""
    _require_front(reading)
    pos: frozenset = frozenset()
    stages = []
    for lane in cyclic_interval(nxt, reading.lane, spec):
        added = [Move(lane, o) for o in spec.lanes_out if compatible_with_set(Move(lane, o), pos, spec)]
        pos = pos | frozenset(added)
        stages.append((lane, pos))
    return PosSet(pos, tuple(stages))


def pos_set_intent(state: LocalState, nxt, spec: IntersectionSpec) -> PosSet:
    """Like :func:`pos_set_empty` but using the moves heard this round.

    A heard move is kept only if compatible with what is already possible; a
    silent lane might still hold a front agent whose broadcast was lost, so
    every compatible move from it is added.
    """
    reading = state.sensors
    _require_front(reading)
    heard = state.memory
    pos: frozenset = frozenset()
    stages = []
    for lane in cyclic_interval(nxt, reading.lane, spec):
        from_lane = sorted(mv for mv in heard if mv[0] == lane)
        if from_lane:
            for mv in from_lane:
                if compatible_with_set(mv, pos, spec):
                    pos = pos | {mv}
        else:
            added = [Move(lane, o) for o in spec.lanes_out if compatible_with_set(Move(lane, o), pos, spec)]
            pos = pos | frozenset(added)
        stages.append((lane, pos))
    return PosSet(pos, tuple(stages))


def p_empty(spec: IntersectionSpec, next_fn: NextFn) -> ActionProtocol:
    def act(agent, local: LocalState) -> str:
        rd = local.sensors
        if not rd.front:
            return NOOP
        pos = pos_set_empty(rd, _next_lane(next_fn, rd), spec)
        return GO if compatible_with_set(own_move(rd), pos.moves, spec) else NOOP

    return ActionProtocol("p_empty", act, "empty")


def p_intent(spec: IntersectionSpec, next_fn: NextFn) -> ActionProtocol:
    def act(agent, local: LocalState) -> str:
        rd = local.sensors
        if not rd.front:
            return NOOP
        pos = pos_set_intent(local, _next_lane(next_fn, rd), spec)
        return GO if compatible_with_set(own_move(rd), pos.moves, spec) else NOOP

    return ActionProtocol("p_intent", act, "intent")


def never_go_protocol() -> ActionProtocol:
    return ActionProtocol("never_go", lambda agent, local: NOOP)


def always_go_protocol() -> ActionProtocol:
    """Goes whenever at the front; unsafe whenever two fronts conflict."""
    return ActionProtocol("always_go", lambda agent, local: GO if local.sensors.front else NOOP)


# --- knowledge-based programs ---------------------------------------------

PSIGMA = "Psigma"
BIGP = "BigP"


@dataclass(frozen=True)
class KbProgram:
    """``K_i(front_i and move in sigma)`` or ``K_i(front_i and (move in sigma or V_i))``.

    Both conditions only mention the current point and the round starting
    there, so knowledge over run prefixes is exact.
    """

    kind: str
    sigma: Policy
    next_fn: Optional[NextFn] = None
    strict: bool = False

    def __post_init__(self):
        if self.kind not in (PSIGMA, BIGP):
            raise ProtocolError(f"unknown program kind {self.kind!r}")
        if self.kind == BIGP and self.next_fn is None:
            raise ProtocolError("the violation program needs a next function")

    def describe(self) -> dict:
        out = {"kind": self.kind, "sigma": self.sigma.describe(), "strict": self.strict}
        if self.next_fn is not None:
            out["next"] = self.next_fn.describe()
        return out


def Psigma(sigma: Policy) -> KbProgram:
    return KbProgram(PSIGMA, sigma)


def BigP(sigma: Policy, next_fn: NextFn, strict: bool = False) -> KbProgram:
    return KbProgram(BIGP, sigma, next_fn, strict)


def violation_ok(own: Move, sigma_moves: frozenset, nxt, going: Iterable[Move], spec: IntersectionSpec, strict: bool = False) -> bool:
    """The condition V_i: own move outside sigma and clear of the relevant goers.

    ``going`` holds the moves of the other agents going this round. Goers
    whose move is in sigma always count; other goers count only when their
    lane lies in ``[nxt, own lane)``. In strict mode every sigma move counts,
    whether or not anybody makes it.
    """
    if own in sigma_moves:
        return False
    ahead = set(cyclic_interval(nxt, own.source, spec))
    if strict:
        for mv in sigma_moves:
            if conflicting(own, mv, spec):
                return False
    for mv in going:
        if mv in sigma_moves:
            if not strict and not compatible(own, mv, spec):
                return False
        elif mv.source in ahead and not compatible(own, mv, spec):
            return False
    return True


def _go_moves(run, m: int, exclude=None) -> list:
    return [own_move(run.reading(m, j)) for j in run.go_sets[m] if j != exclude]


def kbp_condition(program: KbProgram, spec: IntersectionSpec, run, m: int, agent) -> bool:
    """The formula under ``K_i`` at a single point (``m < horizon``)."""
    rd = run.reading(m, agent)
    if not rd.front:
        return False
    own = own_move(rd)
    sig = program.sigma.at(run, m)
    if own in sig:
        return True
    if program.kind == PSIGMA:
        return False
    nxt = program.next_fn.at(run, m)
    return violation_ok(own, sig, nxt, _go_moves(run, m, agent), spec, program.strict)


class HorizonError(ValueError):
    """A next-state condition was queried at the last time of a run."""


def eval_kbp(system, run, m: int, agent, program: KbProgram) -> str:
    run = system.run(run) if not hasattr(run, "states") else run
    if m >= run.horizon:
        raise HorizonError(f"going is undefined at the horizon (m={m})")
    local = run.local(m, agent)
    if not local.sensors.front:
        return NOOP
    for other in system.indistinguishable(m, agent, local):
        if not kbp_condition(program, system.spec, other, m, agent):
            return NOOP
    return GO


# --- tabulated protocols --------------------------------------------------


def state_key(agent, local: LocalState) -> str:
    return canonical([agent, local])


class TabulatedProtocol(ActionProtocol):
    """Lookup protocol keyed by canonical ``(agent, local state)``; misses are noop."""

    def __init__(self, name: str, table: dict, exchange: Optional[str] = None, meta: Optional[dict] = None):
        object.__setattr__(self, "table", dict(table))
        object.__setattr__(self, "meta", dict(meta or {}))
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "exchange", exchange)
        object.__setattr__(self, "act_fn", self._lookup)

    def _lookup(self, agent, local: LocalState) -> str:
        return self.table.get(state_key(agent, local), NOOP)

    def __eq__(self, other):
        return isinstance(other, TabulatedProtocol) and self.table == other.table

    def __hash__(self):
        return hash(tuple(sorted(self.table.items())))

    def go_keys(self) -> list:
        return sorted(k for k, v in self.table.items() if v == GO)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "exchange": self.exchange,
            "meta": self.meta,
            "entries": [{"state": k, "action": self.table[k]} for k in sorted(self.table)],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_json(cls, data: dict) -> "TabulatedProtocol":
        table = {row["state"]: row["action"] for row in data["entries"]}
        for a in table.values():
            if a not in (GO, NOOP):
                raise ProtocolError(f"unknown action {a!r} in table")
        return cls(data.get("name", "table"), table, data.get("exchange"), data.get("meta"))

    @classmethod
    def load(cls, path) -> "TabulatedProtocol":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def tabulate(protocol: ActionProtocol, system) -> TabulatedProtocol:
    """Record ``protocol`` on every reachable non-final local state of ``system``."""
    table = {}
    for run in system:
        for m in range(run.horizon):
            for a, ls in zip(run.agents, run.states[m].locals):
                table[state_key(a, ls)] = protocol.act(a, ls)
    return TabulatedProtocol(protocol.name, table, protocol.exchange)


def _sigma_at(policy, adv, m: int):
    if policy.period is not None:
        return policy.at_time(m)
    return policy.eval(history(adv, m))


def _next_at(next_fn, adv, m: int):
    if next_fn.period is not None:
        return next_fn.at_time(m)
    return next_fn.eval(history(adv, m))


def synthesize_implementation(
    spec: IntersectionSpec,
    exchange: ExchangeProtocol,
    adversaries,
    program: KbProgram,
    horizon: int,
    agents: Optional[Iterable] = None,
    name: Optional[str] = None,
) -> TabulatedProtocol:
    """Build the unique implementation of ``program`` time by time.

    At each time the states of all runs are fixed. Agents not at the front do
    nothing. Front agents that know their move is permitted go. The rest are
    decided lane by lane starting from ``next``: an agent goes iff it knows
    the violation condition, which only mentions goers decided earlier.
    """
    advs = list(adversaries)
    if agents is None:
        agents = getattr(adversaries, "pool", None) or {a for adv in advs for a, _ in adv.schedule.arrivals}
    agents = tuple(sorted(agents))
    n = len(spec.lanes_in)
    states = [initial_state(adv, spec, exchange, agents) for adv in advs]
    table: dict = {}
    sigma, nfn = program.sigma, program.next_fn
    for m in range(horizon):
        sig = [_sigma_at(sigma, adv, m) for adv in advs]
        nxt = [_next_at(nfn, adv, m) for adv in advs] if nfn is not None else None
        groups: dict = {}
        for r, g in enumerate(states):
            for k, ls in enumerate(g.locals):
                groups.setdefault((k, ls), []).append(r)
        decided: dict = {}
        # fronts per run: agent index -> move
        fronts = []
        for g in states:
            fr = {}
            for k, ls in enumerate(g.locals):
                if ls.sensors.front:
                    fr[k] = own_move(ls.sensors)
            fronts.append(fr)
        going = [set() for _ in states]
        pending = []
        for (k, ls), runs in groups.items():
            if not ls.sensors.front:
                decided[(k, ls)] = NOOP
                continue
            own = own_move(ls.sensors)
            in_sig = [own in sig[r] for r in runs]
            if all(in_sig):
                decided[(k, ls)] = GO
                for r in runs:
                    going[r].add(k)
            elif program.kind == PSIGMA:
                decided[(k, ls)] = NOOP
            elif any(in_sig):
                raise SynthesisError(
                    f"agent {agents[k]!r} at time {m} cannot tell whether its move is permitted"
                )
            else:
                pending.append((k, ls, runs))
        if pending:
            by_offset: dict = {}
            for k, ls, runs in pending:
                lane = ls.sensors.lane
                offs = {(spec.lanes_in.index(lane) - spec.lanes_in.index(nxt[r])) % n for r in runs}
                if len(offs) != 1:
                    raise SynthesisError(f"agent {agents[k]!r} at time {m} cannot tell which lane has priority")
                by_offset.setdefault(offs.pop(), []).append((k, ls, runs))
            for off in range(n):
                new_goers = []
                for k, ls, runs in by_offset.get(off, ()):
                    own = own_move(ls.sensors)
                    ok = True
                    for r in runs:
                        moves = [fronts[r][j] for j in going[r] if j != k]
                        if not violation_ok(own, sig[r], nxt[r], moves, spec, program.strict):
                            ok = False
                            break
                    decided[(k, ls)] = GO if ok else NOOP
                    if ok:
                        new_goers.append((k, runs))
                for k, runs in new_goers:
                    for r in runs:
                        going[r].add(k)
        for (k, ls), act in decided.items():
            table[state_key(agents[k], ls)] = act
        new_states = []
        for r, g in enumerate(states):
            acts = tuple(GO if k in going[r] else NOOP for k in range(len(agents)))
            g2, _ = advance(g, acts, exchange, spec, agents)
            new_states.append(g2)
        states = new_states
    meta = {"program": program.describe(), "horizon": horizon, "runs": len(advs)}
    return TabulatedProtocol(name or f"synth_{program.kind}", table, exchange.name, meta)


def behaviour_diff(a: ActionProtocol, b: ActionProtocol, system) -> list:
    """Reachable ``(run, m, agent)`` points of ``system`` where ``a`` and ``b`` disagree."""
    out = []
    for run in system:
        for m in range(run.horizon):
            for ag, ls in zip(run.agents, run.states[m].locals):
                if a.act(ag, ls) != b.act(ag, ls):
                    out.append((run.adversary.name, m, ag))
    return out
