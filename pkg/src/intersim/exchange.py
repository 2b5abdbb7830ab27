"""Sensor model and information-exchange protocols.

Three exchanges ship: ``empty`` (nobody broadcasts), ``intent`` (front agents
broadcast their move, memory is the set of moves heard this round) and
``full`` (everyone broadcasts its whole local state and memory is the full
local history).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Optional

from .topology import Move

BOTTOM = "bot"  # not yet arrived
TOP = "top"  # already through the intersection

GO = "go"
NOOP = "noop"


class SensorReading(NamedTuple):
    front: int
    lane: Any  # in-lane id, BOTTOM or TOP
    intent: Any  # out-lane id, or None when the agent never arrives
    time: int


class LocalState(NamedTuple):
    memory: Any
    sensors: SensorReading


class Message(NamedTuple):
    sender: Any
    payload: Any


class FullPayload(NamedTuple):
    history: tuple
    action: str
    reading: SensorReading


@dataclass(frozen=True)
class ExchangeProtocol:
    name: str
    initial_memory: Any
    message_fn: Callable[[LocalState, str, SensorReading], Optional[Any]]
    update_fn: Callable[[LocalState, str, frozenset], Any]
    senders_tag_front: bool = False

    def initial_state(self, reading: SensorReading) -> LocalState:
        return LocalState(self.initial_memory, reading)


def sensor_read(env, agent) -> SensorReading:
    """Read ``agent``'s sensors from an environment state.

    ``env`` needs ``time``, ``adversary`` and ``position(agent)``; the latter
    returns ``(lane, index)``, ``TOP`` or ``BOTTOM``.
    """
    pos = env.position(agent)
    arr = env.adversary.schedule.get(agent)
    intent = arr.intent if arr is not None else None
    if pos == TOP:
        return SensorReading(0, TOP, intent, env.time)
    if pos == BOTTOM:
        return SensorReading(0, BOTTOM, intent, env.time)
    lane, idx = pos
    return SensorReading(1 if idx == 0 else 0, lane, intent, env.time)


def own_move(reading: SensorReading) -> Move:
    return Move(reading.lane, reading.intent)


def _no_message(state, action, reading):
    return None


def _keep_unit(state, action, received):
    return None


def build_exchange_empty() -> ExchangeProtocol:
    return ExchangeProtocol("empty", None, _no_message, _keep_unit)


def _intent_message(state: LocalState, action: str, reading: SensorReading):
    if reading.front:
        return Move(reading.lane, reading.intent)
    return None


def _intent_update(state: LocalState, action: str, received: frozenset) -> frozenset:
    return frozenset(msg.payload for msg in received)


def build_exchange_intent() -> ExchangeProtocol:
    # only front agents broadcast, which doubles as the front tag
    return ExchangeProtocol("intent", frozenset(), _intent_message, _intent_update, True)


def _full_message(state: LocalState, action: str, reading: SensorReading) -> FullPayload:
    return FullPayload(state.memory, action, reading)


def _full_update(state: LocalState, action: str, received: frozenset) -> tuple:
    return state.memory + ((state.sensors, action, received),)


def build_exchange_full() -> ExchangeProtocol:
    return ExchangeProtocol("full", (), _full_message, _full_update, True)


EXCHANGES = {
    "empty": build_exchange_empty,
    "intent": build_exchange_intent,
    "full": build_exchange_full,
}


def get_exchange(name: str) -> ExchangeProtocol:
    try:
        return EXCHANGES[name]()
    except KeyError:
        raise ValueError(f"unknown exchange {name!r}; expected one of {sorted(EXCHANGES)}") from None
