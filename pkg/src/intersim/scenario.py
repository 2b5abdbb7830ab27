"""Scenario files: a JSON description of an intersection, an exchange, an
adversary space, a policy and the protocols to run."""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from typing import Any, Optional

from .adversary import (
    Adversary,
    AdversaryError,
    AdversarySpace,
    ArrivalSchedule,
    FailureModel,
    FailurePattern,
    enumerate_adversaries,
    validate_adversary,
)
from .codec import digest
from .exchange import get_exchange
from .kernel import System, generate_system
from .policy import (
    ConstantNext,
    CycleHeldNext,
    PolicyError,
    RoundRobinNext,
    cyclic_policy,
    empty_policy,
    priority_policy,
    traffic_light_policy,
)
from .protocols import (
    BigP,
    Psigma,
    ProtocolError,
    TabulatedProtocol,
    always_go_protocol,
    never_go_protocol,
    p_empty,
    p_intent,
    synthesize_implementation,
    traffic_light_protocol,
)
from .topology import TopologyError, validate_intersection, validate_transmission_env


class ScenarioError(ValueError):
    """Invalid scenario; the message names the offending field."""


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ScenarioError(f"{where}.{key}: missing")
    return d[key]


@dataclass
class Scenario:
    data: dict
    base_dir: str = "."
    overrides: dict = field(default_factory=dict)

    # resolved lazily
    _spec: Any = None
    _space: Any = None
    _systems: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.data.get("name", "scenario")

    @property
    def horizon(self) -> int:
        h = self.overrides.get("horizon", self.data.get("horizon"))
        if not isinstance(h, int) or isinstance(h, bool) or h < 0:
            raise ScenarioError("horizon: must be a non-negative integer")
        return h

    @property
    def strict_vi(self) -> bool:
        return bool(self.overrides.get("strict_vi", self.data.get("strict_vi", False)))

    @property
    def liveness_bound(self) -> int:
        b = self.overrides.get("liveness_bound", self.data.get("liveness_bound"))
        if b is None:
            b = len(self.spec.lanes_in) + 1
        if not isinstance(b, int) or b < 1:
            raise ScenarioError("liveness_bound: must be a positive integer")
        return b

    def validate(self) -> "Scenario":
        """Resolve every cheap section up front so errors surface at load time."""
        self.horizon
        self.spec
        self.env
        self.exchange
        self.model
        if "policy" in self.data:
            self.policy()
        if "next" in self.data:
            self.next_fn()
        return self

    def descriptor(self) -> dict:
        d = copy.deepcopy(self.data)
        d["_overrides"] = dict(sorted(self.overrides.items()))
        return d

    def context_digest(self) -> str:
        return digest(self.descriptor())

    @property
    def spec(self):
        if self._spec is None:
            sec = _need(self.data, "intersection", "scenario")
            try:
                self._spec = validate_intersection(
                    _need(sec, "lanes_in", "intersection"),
                    _need(sec, "lanes_out", "intersection"),
                    sec.get("compat", ()),
                )
            except TopologyError as e:
                raise ScenarioError(f"intersection: {e}") from None
        return self._spec

    @property
    def env(self):
        sec = self.data["intersection"]
        try:
            return validate_transmission_env(sec.get("reach", ()), self.spec, sec.get("max_depth", 0))
        except (TopologyError, TypeError, ValueError) as e:
            raise ScenarioError(f"intersection.reach: {e}") from None

    @property
    def exchange(self):
        try:
            return get_exchange(_need(self.data, "exchange", "scenario"))
        except ValueError as e:
            raise ScenarioError(f"exchange: {e}") from None

    @property
    def model(self) -> FailureModel:
        raw = self.data.get("model", self.data.get("adversary_space", {}).get("model"))
        try:
            return FailureModel(raw)
        except ValueError:
            raise ScenarioError(f"model: unknown failure model {raw!r}") from None

    @property
    def adversaries(self):
        if self._space is None:
            self._space = self._build_adversaries()
        return self._space

    def _build_adversaries(self):
        spec, env, model = self.spec, self.env, self.model
        if "adversaries" in self.data:
            out = []
            for k, raw in enumerate(self.data["adversaries"]):
                where = f"adversaries[{k}]"
                try:
                    sched = ArrivalSchedule.from_mapping(raw.get("arrivals", {}))
                    fp = FailurePattern(
                        frozenset((int(t), a) for t, a in raw.get("transmit_off", ())),
                        frozenset((int(t), a) for t, a in raw.get("receive_off", ())),
                    )
                    adv = Adversary(raw.get("name", f"adv{k:06d}"), sched, env, fp)
                    for a, arr in sched.arrivals:
                        if arr.lane not in spec.lanes_in or arr.intent not in spec.lanes_out:
                            raise AdversaryError(f"agent {a!r} uses an unknown lane")
                    validate_adversary(adv, model, max(self.horizon, 1))
                except (AdversaryError, TypeError, ValueError) as e:
                    raise ScenarioError(f"{where}: {e}") from None
                out.append(adv)
            return out
        sec = _need(self.data, "adversary_space", "scenario")
        pool = _need(sec, "pool", "adversary_space")
        caps = self.overrides.get("caps", sec.get("caps"))
        h = self.overrides.get("horizon", sec.get("horizon", self.horizon))
        try:
            return enumerate_adversaries(model, pool, h, spec, env, caps)
        except AdversaryError as e:
            raise ScenarioError(f"adversary_space: {e}") from None

    @property
    def truncated(self) -> bool:
        adv = self.adversaries
        return isinstance(adv, AdversarySpace) and adv.truncated

    @property
    def agents(self) -> Optional[tuple]:
        adv = self.adversaries
        if isinstance(adv, AdversarySpace):
            return adv.pool
        pool = self.data.get("agents")
        if pool is not None:
            return tuple(sorted(pool))
        return tuple(sorted({a for x in adv for a, _ in x.schedule.arrivals}))

    def policy(self, sec: Optional[dict] = None):
        sec = sec if sec is not None else self.data.get("policy", {"kind": "empty"})
        kind = _need(sec, "kind", "policy")
        spec = self.spec
        try:
            if kind == "empty":
                return empty_policy()
            if kind == "traffic_light":
                return traffic_light_policy(spec)
            if kind == "cyclic":
                return cyclic_policy(_need(sec, "cells", "policy"), spec)
            if kind == "priority":
                base = self.policy(_need(sec, "base", "policy"))
                return priority_policy(_need(sec, "agents", "policy"), base, spec)
        except PolicyError as e:
            raise ScenarioError(f"policy: {e}") from None
        raise ScenarioError(f"policy.kind: unknown policy kind {kind!r}")

    def next_fn(self):
        sec = self.data.get("next", {"kind": "round_robin"})
        kind = _need(sec, "kind", "next")
        spec = self.spec
        try:
            if kind == "round_robin":
                return RoundRobinNext(spec)
            if kind == "cycle_held":
                return CycleHeldNext(int(_need(sec, "k", "next")), spec)
            if kind == "constant":
                return ConstantNext(_need(sec, "lane", "next"), spec)
        except PolicyError as e:
            raise ScenarioError(f"next: {e}") from None
        raise ScenarioError(f"next.kind: unknown next function {kind!r}")

    def program(self, raw=None):
        raw = raw if raw is not None else self.data.get("program", "BigP")
        if raw == "BigP":
            return BigP(self.policy(), self.next_fn(), self.strict_vi)
        if raw == "Psigma":
            return Psigma(self.policy())
        raise ScenarioError(f"program: unknown program {raw!r}")

    def protocol(self, raw):
        spec = self.spec
        if isinstance(raw, str):
            raw = {"kind": raw}
        kind = raw.get("kind")
        if kind == "traffic_light":
            return traffic_light_protocol(spec)
        if kind == "p_empty":
            return p_empty(spec, self.next_fn())
        if kind == "p_intent":
            return p_intent(spec, self.next_fn())
        if kind == "never_go":
            return never_go_protocol()
        if kind == "always_go":
            return always_go_protocol()
        if kind == "synthesized":
            prog = self.program(raw.get("program"))
            return synthesize_implementation(
                spec, self.exchange, self.adversaries, prog, self.horizon, self.agents,
                name=f"synthesized_{prog.kind}",
            )
        if kind == "table":
            path = os.path.join(self.base_dir, _need(raw, "file", "protocol"))
            try:
                return TabulatedProtocol.load(path)
            except (OSError, KeyError, ValueError) as e:
                raise ScenarioError(f"protocol.file: {e}") from None
        raise ScenarioError(f"protocol: unknown protocol {kind!r}")

    def protocols(self) -> list:
        if "protocols" in self.data:
            raws = self.data["protocols"]
        elif "protocol" in self.data:
            raws = [self.data["protocol"]]
        else:
            raise ScenarioError("protocol: missing")
        return [self.protocol(r) for r in raws]

    def system(self, protocol) -> System:
        key = id(protocol)
        if key not in self._systems:
            try:
                protocol.check_exchange(self.exchange)
            except ProtocolError as e:
                raise ScenarioError(f"protocol: {e}") from None
            s = generate_system(self.spec, self.exchange, protocol, self.adversaries, self.horizon, self.agents)
            if isinstance(self.adversaries, AdversarySpace):
                s.model = self.adversaries.model
            else:
                s.model = self.model
            self._systems[key] = (protocol, s)
        return self._systems[key][1]


def load_scenario(source, overrides: Optional[dict] = None) -> Scenario:
    """Load from a path or an already-parsed dict."""
    if isinstance(source, dict):
        return Scenario(copy.deepcopy(source), ".", dict(overrides or {})).validate()
    try:
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise ScenarioError(f"scenario file: {e}") from None
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario file: not valid JSON ({e})") from None
    if not isinstance(data, dict):
        raise ScenarioError("scenario file: top level must be an object")
    return Scenario(data, os.path.dirname(os.path.abspath(source)), dict(overrides or {})).validate()
