"""Point predicates and the knowledge oracle over a generated system."""

from __future__ import annotations

from typing import Callable, Optional

from ..exchange import own_move
from ..protocols import HorizonError


class Var(str):
    """An agent variable resolved through the bindings at evaluation time."""


def _resolve(x, bindings):
    if isinstance(x, Var):
        try:
            return bindings[x]
        except KeyError:
            raise KeyError(f"unbound agent variable {x!s}") from None
    return x


class Pred:
    """A predicate on points ``(run, m)`` of a system.

    ``needs_next`` marks predicates that look at the round starting at ``m``
    and are therefore undefined at the horizon.
    """

    def __init__(self, fn: Callable, text: str, needs_next: bool = False):
        self.fn = fn
        self.text = text
        self.needs_next = needs_next

    def __call__(self, system, run, m: int, bindings: Optional[dict] = None) -> bool:
        if self.needs_next and m >= run.horizon:
            raise HorizonError(f"{self.text} needs time {m + 1}, beyond the horizon")
        return bool(self.fn(system, run, m, bindings or {}))

    def __and__(self, other: "Pred") -> "Pred":
        return Pred(lambda s, r, m, b: self(s, r, m, b) and other(s, r, m, b),
                    f"({self.text} & {other.text})", self.needs_next or other.needs_next)

    def __or__(self, other: "Pred") -> "Pred":
        return Pred(lambda s, r, m, b: self(s, r, m, b) or other(s, r, m, b),
                    f"({self.text} | {other.text})", self.needs_next or other.needs_next)

    def __invert__(self) -> "Pred":
        return Pred(lambda s, r, m, b: not self(s, r, m, b), f"~{self.text}", self.needs_next)

    def __repr__(self) -> str:
        return f"Pred({self.text})"


def _reading(run, m, agent, bindings):
    return run.reading(m, _resolve(agent, bindings))


def front(agent) -> Pred:
    return Pred(lambda s, r, m, b: _reading(r, m, agent, b).front == 1, f"front[{agent}]")


def lane_is(agent, lane) -> Pred:
    return Pred(lambda s, r, m, b: _reading(r, m, agent, b).lane == lane, f"lane[{agent}]={lane}")


def intent_is(agent, lane) -> Pred:
    return Pred(lambda s, r, m, b: _reading(r, m, agent, b).intent == lane, f"intent[{agent}]={lane}")


def pos_is(agent, k: int) -> Pred:
    def fn(s, r, m, b):
        p = r.states[m].env.position(_resolve(agent, b))
        return isinstance(p, tuple) and p[1] == k

    return Pred(fn, f"pos[{agent}]={k}")


def going(agent) -> Pred:
    return Pred(lambda s, r, m, b: _resolve(agent, b) in r.go_sets[m], f"going[{agent}]", True)


def move_in(agent, policy) -> Pred:
    """The agent's move is permitted by ``policy`` at the point's history."""
    return Pred(lambda s, r, m, b: own_move(_reading(r, m, agent, b)) in policy.at(r, m), f"move[{agent}] in sigma")


def exists_agent(var: str, body: Pred) -> Pred:
    v = Var(var)

    def fn(s, r, m, b):
        return any(body(s, r, m, {**b, v: a}) for a in s.agents)

    return Pred(fn, f"E{var}.{body.text}", body.needs_next)


def forall_agents(var: str, body: Pred) -> Pred:
    v = Var(var)

    def fn(s, r, m, b):
        return all(body(s, r, m, {**b, v: a}) for a in s.agents)

    return Pred(fn, f"A{var}.{body.text}", body.needs_next)


def knows(system, run, m: int, agent, phi: Pred, bindings: Optional[dict] = None) -> bool:
    """True iff ``phi`` holds at every point of ``system`` the agent cannot
    tell apart from ``(run, m)``."""
    if phi.needs_next and m >= run.horizon:
        raise HorizonError(f"K[{agent}] {phi.text} is undefined at the horizon")
    local = run.local(m, agent)
    return all(phi(system, other, m, bindings) for other in system.indistinguishable(m, agent, local))


def K(agent, phi: Pred) -> Pred:
    """Knowledge as a predicate, so it can be nested."""

    def fn(s, r, m, b):
        return knows(s, r, m, _resolve(agent, b), phi, b)

    return Pred(fn, f"K[{agent}]{phi.text}", phi.needs_next)
