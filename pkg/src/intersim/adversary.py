"""Arrival schedules, failure patterns, failure models and adversary histories."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Mapping, NamedTuple, Optional

from .topology import IntersectionSpec, LaneId, TransmissionEnv

Agent = Hashable


class AdversaryError(ValueError):
    pass


class FailureModel(str, Enum):
    NF = "NF"
    CR = "CR"
    SO = "SO"


class Arrival(NamedTuple):
    time: int
    lane: LaneId
    intent: LaneId


@dataclass(frozen=True)
class ArrivalSchedule:
    """Partial map agent -> :class:`Arrival`, stored sorted by agent."""

    arrivals: tuple = ()

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "ArrivalSchedule":
        items = tuple(sorted((a, Arrival(*map(int, v))) for a, v in mapping.items()))
        return cls(items)

    @cached_property
    def _by_agent(self) -> dict:
        return dict(self.arrivals)

    @cached_property
    def _by_time(self) -> dict:
        out: dict = {}
        for agent, arr in self.arrivals:
            out.setdefault(arr.time, []).append((agent, arr.lane, arr.intent))
        return {t: tuple(v) for t, v in out.items()}

    def get(self, agent) -> Optional[Arrival]:
        return self._by_agent.get(agent)

    def at(self, time: int) -> tuple:
        """Arrivals ``(agent, lane, intent)`` scheduled for ``time``."""
        return self._by_time.get(time, ())

    def conflicts(self) -> list:
        seen: dict = {}
        bad = []
        for agent, arr in self.arrivals:
            key = (arr.time, arr.lane)
            if key in seen:
                bad.append((seen[key], agent, key))
            else:
                seen[key] = agent
        return bad


@dataclass(frozen=True)
class FailurePattern:
    """Transmit/receive bits; any ``(time, agent)`` not listed is 1."""

    transmit_off: frozenset = frozenset()
    receive_off: frozenset = frozenset()

    def transmit(self, time: int, agent) -> int:
        return 0 if (time, agent) in self.transmit_off else 1

    def receive(self, time: int, agent) -> int:
        return 0 if (time, agent) in self.receive_off else 1


@dataclass(frozen=True)
class Adversary:
    name: str
    schedule: ArrivalSchedule
    env: TransmissionEnv
    failures: FailurePattern = field(default_factory=FailurePattern)

    def choices(self, m: int) -> "RoundChoice":
        """The adversary's choices for round ``m + 1``."""
        t_off = frozenset(a for (k, a) in self.failures.transmit_off if k == m)
        r_off = frozenset(a for (k, a) in self.failures.receive_off if k == m)
        return RoundChoice(frozenset(self.schedule.at(m + 1)), t_off, r_off)


class RoundChoice(NamedTuple):
    arrivals: frozenset  # of (agent, lane, intent) entering in this round
    transmit_off: frozenset  # agents whose transmitter fails this round
    receive_off: frozenset


@dataclass(frozen=True)
class AdversaryHistory:
    rounds: tuple
    env: Optional[TransmissionEnv] = None

    def __len__(self) -> int:
        return len(self.rounds)

    def prefix(self, m: int) -> "AdversaryHistory":
        return AdversaryHistory(self.rounds[:m], self.env)


def history(adv: Adversary, m: int) -> AdversaryHistory:
    if m < 0:
        raise AdversaryError("history length must be non-negative")
    return AdversaryHistory(tuple(adv.choices(k) for k in range(m)), adv.env)


def validate_adversary(adv: Adversary, model: FailureModel | str, horizon: int) -> Adversary:
    model = FailureModel(model)
    if horizon < 1:
        raise AdversaryError("horizon must be >= 1")
    bad = adv.schedule.conflicts()
    if bad:
        a, b, (t, lane) = bad[0]
        raise AdversaryError(f"agents {a!r} and {b!r} both arrive in lane {lane} at time {t}")
    for agent, arr in adv.schedule.arrivals:
        if arr.time < 1:
            raise AdversaryError(f"agent {agent!r} arrives at time {arr.time} < 1")
    f = adv.failures
    in_range = lambda bits: {(k, a) for (k, a) in bits if 0 <= k < horizon}
    if model is FailureModel.NF and (in_range(f.transmit_off) or in_range(f.receive_off)):
        raise AdversaryError("NF adversary has a failure bit set to 0")
    if model in (FailureModel.CR, FailureModel.SO) and in_range(f.receive_off):
        raise AdversaryError(f"{model.value} adversary has a receive bit set to 0")
    if model is FailureModel.CR:
        crashed: dict = {}
        for k, a in sorted(in_range(f.transmit_off), key=lambda x: (repr(x[1]), x[0])):
            crashed.setdefault(a, k)
        for a, k0 in crashed.items():
            for k in range(k0, horizon):
                if f.transmit(k, a):
                    raise AdversaryError(
                        f"CR: transmitter of {a!r} off at {k0} but on again at {k}"
                    )
    return adv


def _schedule_options(horizon: int, spec: IntersectionSpec) -> list:
    opts: list = [None]
    for t in range(1, horizon + 1):
        for lane in spec.lanes_in:
            for intent in spec.lanes_out:
                opts.append(Arrival(t, lane, intent))
    return opts


def iter_schedules(pool: Iterable, horizon: int, spec: IntersectionSpec) -> Iterator[ArrivalSchedule]:
    agents = sorted(pool)
    opts = _schedule_options(horizon, spec)
    for combo in itertools.product(opts, repeat=len(agents)):
        slots = [(a.time, a.lane) for a in combo if a is not None]
        if len(slots) != len(set(slots)):
            continue
        yield ArrivalSchedule(tuple((ag, a) for ag, a in zip(agents, combo) if a is not None))


def iter_failure_patterns(model: FailureModel | str, pool: Iterable, horizon: int) -> Iterator[FailurePattern]:
    """All model-legal patterns over ``pool x [0, horizon)``."""
    model = FailureModel(model)
    agents = sorted(pool)
    if model is FailureModel.NF:
        yield FailurePattern()
        return
    if model is FailureModel.SO:
        slots = [(k, a) for a in agents for k in range(horizon)]
        for bits in itertools.product((1, 0), repeat=len(slots)):
            yield FailurePattern(frozenset(s for s, b in zip(slots, bits) if b == 0))
        return
    # CR: per agent either never crashes or crashes at some round c and stays down
    crash_opts = [None, *range(horizon)]
    for crashes in itertools.product(crash_opts, repeat=len(agents)):
        off = frozenset(
            (k, a) for a, c in zip(agents, crashes) if c is not None for k in range(c, horizon)
        )
        yield FailurePattern(off)


@dataclass(frozen=True)
class AdversarySpace:
    adversaries: tuple
    model: FailureModel
    pool: tuple
    horizon: int
    truncated: bool
    caps: Optional[int] = None

    def __len__(self) -> int:
        return len(self.adversaries)

    def __iter__(self):
        return iter(self.adversaries)


def enumerate_adversaries(
    model: FailureModel | str,
    agent_pool: Iterable,
    horizon: int,
    spec: IntersectionSpec,
    env: TransmissionEnv,
    caps: Optional[int] = None,
) -> AdversarySpace:
    """Every conflict-free schedule crossed with every legal failure pattern.

    Order is deterministic: schedules outermost, failure patterns inner.  When
    ``caps`` binds the result is marked ``truncated``.
    """
    model = FailureModel(model)
    if caps is not None and caps <= 0:
        raise AdversaryError("caps must be positive")
    pool = tuple(sorted(agent_pool))
    patterns = list(iter_failure_patterns(model, pool, horizon))
    out = []
    truncated = False
    for sched in iter_schedules(pool, horizon, spec):
        for pat in patterns:
            if caps is not None and len(out) >= caps:
                truncated = True
                break
            out.append(Adversary(f"adv{len(out):06d}", sched, env, pat))
        if truncated:
            break
    return AdversarySpace(tuple(out), model, pool, horizon, truncated, caps)
