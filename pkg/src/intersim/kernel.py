"""Round transition procedure and run/system generation."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, NamedTuple, Optional

from .adversary import Adversary, AdversaryHistory, AdversarySpace, FailureModel, history
from .codec import encode
from .exchange import (
    BOTTOM,
    GO,
    NOOP,
    TOP,
    ExchangeProtocol,
    LocalState,
    Message,
    SensorReading,
    sensor_read,
)
from .topology import IntersectionSpec


class KernelError(ValueError):
    pass


class EnvState:
    """Environment state: adversary, time, one queue per in-lane, done set."""

    __slots__ = ("adversary", "time", "queues", "done", "_lanes", "_pos")

    def __init__(self, adversary: Adversary, time: int, queues: tuple, done: frozenset, lanes: tuple):
        self.adversary = adversary
        self.time = time
        self.queues = queues
        self.done = done
        self._lanes = lanes
        self._pos = None

    @property
    def positions(self) -> dict:
        if self._pos is None:
            pos = {}
            for lane, q in zip(self._lanes, self.queues):
                for k, agent in enumerate(q):
                    pos[agent] = (lane, k)
            self._pos = pos
        return self._pos

    def position(self, agent):
        p = self.positions.get(agent)
        if p is not None:
            return p
        return TOP if agent in self.done else BOTTOM

    def queue(self, lane) -> tuple:
        return self.queues[self._lanes.index(lane)]

    def key(self) -> tuple:
        return (self.adversary.name, self.time, self.queues, tuple(sorted(self.done)))

    def __eq__(self, other) -> bool:
        return isinstance(other, EnvState) and self.adversary == other.adversary and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"EnvState(t={self.time}, queues={self.queues}, done={sorted(self.done)})"


class GlobalState(NamedTuple):
    env: EnvState
    locals: tuple  # LocalState per agent, aligned with the system's agent order


class RoundRecord(NamedTuple):
    actions: tuple
    broadcast: tuple  # payload or None per agent
    received: tuple  # frozenset of Message per agent
    invalid_go: frozenset


def initial_state(adversary: Adversary, spec: IntersectionSpec, exchange: ExchangeProtocol, agents: tuple) -> GlobalState:
    env = EnvState(adversary, 0, tuple(() for _ in spec.lanes_in), frozenset(), spec.lanes_in)
    return GlobalState(env, tuple(exchange.initial_state(sensor_read(env, a)) for a in agents))


def advance(g: GlobalState, actions: tuple, exchange: ExchangeProtocol, spec: IntersectionSpec, agents: tuple):
    """Apply already-chosen ``actions`` to ``g``; returns ``(state, record)``."""
    env = g.env
    adv = env.adversary
    m = env.time
    index = {a: k for k, a in enumerate(agents)}
    done = set(env.done)
    invalid = set()
    fronts = set()
    queues = []
    for q in env.queues:
        if q:
            fronts.add(q[0])
            if actions[index[q[0]]] == GO:
                done.add(q[0])
                q = q[1:]
        queues.append(q)
    for a, act in zip(agents, actions):
        if act == GO and a not in fronts:
            invalid.add(a)
    lane_pos = {lane: k for k, lane in enumerate(spec.lanes_in)}
    for agent, lane, _intent in adv.schedule.at(m + 1):
        k = lane_pos[lane]
        queues[k] = queues[k] + (agent,)
    new_env = EnvState(adv, m + 1, tuple(queues), frozenset(done), spec.lanes_in)

    readings = [sensor_read(new_env, a) for a in agents]
    payloads = tuple(
        exchange.message_fn(ls, act, rd) for ls, act, rd in zip(g.locals, actions, readings)
    )
    pos = new_env.positions
    failures = adv.failures
    reach = adv.env.reach
    senders = [
        (pos[a], Message(a, p))
        for a, p in zip(agents, payloads)
        if p is not None and a in pos and failures.transmit(m, a)
    ]
    received = []
    for a in agents:
        here = pos.get(a)
        if here is None or not failures.receive(m, a):
            received.append(frozenset())
        else:
            received.append(frozenset(msg for there, msg in senders if (there, here) in reach))
    received = tuple(received)
    new_locals = tuple(
        LocalState(exchange.update_fn(ls, act, rec), rd)
        for ls, act, rec, rd in zip(g.locals, actions, received, readings)
    )
    return GlobalState(new_env, new_locals), RoundRecord(tuple(actions), payloads, received, frozenset(invalid))


def step(g: GlobalState, protocol, exchange: ExchangeProtocol, spec: IntersectionSpec, agents: tuple, m: Optional[int] = None):
    if m is not None and m != g.env.time:
        raise KernelError(f"round index {m} does not match state time {g.env.time}")
    actions = tuple(protocol.act(a, ls) for a, ls in zip(agents, g.locals))
    return advance(g, actions, exchange, spec, agents)


@dataclass
class Run:
    adversary: Adversary
    agents: tuple
    states: list
    rounds: list

    @property
    def horizon(self) -> int:
        return len(self.rounds)

    @cached_property
    def agent_pos(self) -> dict:
        return {a: k for k, a in enumerate(self.agents)}

    def reading(self, m: int, agent) -> SensorReading:
        return self.states[m].locals[self.agent_pos[agent]].sensors

    def local(self, m: int, agent) -> LocalState:
        return self.states[m].locals[self.agent_pos[agent]]

    def action(self, m: int, agent) -> str:
        return self.rounds[m].actions[self.agent_pos[agent]]

    @cached_property
    def fronts(self) -> list:
        """Agents at the front of some queue, per time ``0..horizon``."""
        return [frozenset(q[0] for q in s.env.queues if q) for s in self.states]

    @cached_property
    def go_sets(self) -> list:
        """GO(r, m) for ``m < horizon``: front at m and no longer front at m+1."""
        fr = self.fronts
        return [fr[m] - fr[m + 1] for m in range(self.horizon)]

    @cached_property
    def gotimes(self) -> dict:
        out = {}
        for m, gs in enumerate(self.go_sets):
            for a in gs:
                out.setdefault(a, m)
        return out

    @cached_property
    def histories(self) -> list:
        return [history(self.adversary, m) for m in range(self.horizon + 1)]

    def history(self, m: int) -> AdversaryHistory:
        return self.histories[m]


def generate_run(spec: IntersectionSpec, exchange: ExchangeProtocol, protocol, adversary: Adversary, horizon: int, agents: Optional[Iterable] = None) -> Run:
    if agents is None:
        agents = [a for a, _ in adversary.schedule.arrivals]
    agents = tuple(sorted(agents))
    g = initial_state(adversary, spec, exchange, agents)
    states = [g]
    rounds = []
    for m in range(horizon):
        g, rec = step(g, protocol, exchange, spec, agents)
        states.append(g)
        rounds.append(rec)
    return Run(adversary, agents, states, rounds)


@dataclass
class System:
    runs: dict  # adversary name -> Run, in generation order
    spec: IntersectionSpec
    exchange: ExchangeProtocol
    protocol_name: str
    horizon: int
    agents: tuple
    model: Optional[FailureModel] = None
    truncated: bool = False
    _index: dict = field(default=None, repr=False)

    def __iter__(self):
        return iter(self.runs.values())

    def __len__(self) -> int:
        return len(self.runs)

    def run(self, key) -> Run:
        if isinstance(key, Run):
            return key
        return self.runs[key]

    def agent_index(self, agent) -> int:
        return self.agents.index(agent)

    def indistinguishable(self, m: int, agent, local: LocalState) -> list:
        """Runs whose local state for ``agent`` at time ``m`` equals ``local``.

        With time in every local state, points at other times never match.
        """
        if self._index is None:
            self._build_index()
        return self._index.get((m, self.agent_index(agent), local), [])

    def _build_index(self) -> None:
        idx: dict = {}
        for run in self.runs.values():
            for m, g in enumerate(run.states):
                for k, ls in enumerate(g.locals):
                    idx.setdefault((m, k, ls), []).append(run)
        self._index = idx

    def groups(self, m: int):
        """Yield ``(agent, local_state, runs)`` for every knowledge class at ``m``."""
        if self._index is None:
            self._build_index()
        for (t, k, ls), runs in self._index.items():
            if t == m:
                yield self.agents[k], ls, runs


def generate_system(spec: IntersectionSpec, exchange: ExchangeProtocol, protocol, adversaries, horizon: int, agents: Optional[Iterable] = None) -> System:
    advs = list(adversaries)
    names = [a.name for a in advs]
    if len(set(names)) != len(names):
        raise KernelError("duplicate adversary ids")
    envs = {a.env for a in advs}
    if len(envs) > 1:
        raise KernelError("adversaries do not share one transmission environment")
    if agents is None:
        if isinstance(adversaries, AdversarySpace):
            agents = adversaries.pool
        else:
            agents = {ag for a in advs for ag, _ in a.schedule.arrivals}
    agents = tuple(sorted(agents))
    runs = {a.name: generate_run(spec, exchange, protocol, a, horizon, agents) for a in advs}
    model = adversaries.model if isinstance(adversaries, AdversarySpace) else None
    truncated = adversaries.truncated if isinstance(adversaries, AdversarySpace) else False
    return System(runs, spec, exchange, getattr(protocol, "name", str(protocol)), horizon, agents, model, truncated)


def trace_records(run: Run, run_id: Optional[str] = None) -> list:
    """One record per time point; round fields describe the round starting there."""
    rid = run_id or run.adversary.name
    lanes = run.states[0].env._lanes
    out = []
    for t, g in enumerate(run.states):
        rec = {
            "run": rid,
            "t": t,
            "queues": {str(l): list(q) for l, q in zip(lanes, g.env.queues)},
            "done": sorted(g.env.done),
        }
        if t < len(run.rounds):
            rr = run.rounds[t]
            rec["actions"] = {str(a): act for a, act in zip(run.agents, rr.actions)}
            rec["msgs_out"] = {str(a): encode(p) for a, p in zip(run.agents, rr.broadcast) if p is not None}
            rec["msgs_in"] = {
                str(a): encode(frozenset((m.sender, m.payload) for m in rec_set))
                for a, rec_set in zip(run.agents, rr.received)
                if rec_set
            }
            if rr.invalid_go:
                rec["invalid_go"] = sorted(rr.invalid_go)
        else:
            rec["actions"] = None
            rec["msgs_out"] = None
            rec["msgs_in"] = None
        out.append(rec)
    return out


__all__ = [
    "EnvState",
    "GlobalState",
    "RoundRecord",
    "Run",
    "System",
    "KernelError",
    "initial_state",
    "advance",
    "step",
    "generate_run",
    "generate_system",
    "trace_records",
    "GO",
    "NOOP",
]
