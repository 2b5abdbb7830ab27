"""Static description of an intersection: lanes, moves, compatibility and
the transmission environment."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

LaneId = int


class TopologyError(ValueError):
    pass


class Move(NamedTuple):
    source: LaneId
    target: LaneId

    def __str__(self) -> str:
        return f"({self.source},{self.target})"


def _pair(a: Move, b: Move) -> frozenset:
    return frozenset((a, b))


@dataclass(frozen=True)
class IntersectionSpec:
    lanes_in: tuple[LaneId, ...]
    lanes_out: tuple[LaneId, ...]
    compat: frozenset  # frozenset of frozenset({a, b}) pairs; symmetric by construction

    @property
    def moves(self) -> tuple[Move, ...]:
        return tuple(Move(s, t) for s in self.lanes_in for t in self.lanes_out)

    def is_move(self, mv: Move) -> bool:
        return mv[0] in self.lanes_in and mv[1] in self.lanes_out

    def lane_index(self, lane: LaneId) -> int:
        return self.lanes_in.index(lane)

    @cached_property
    def ordered_compat(self) -> frozenset:
        out = set()
        for p in self.compat:
            items = sorted(p)
            a, b = items[0], items[-1]
            out.add((a, b))
            out.add((b, a))
        return frozenset(out)

    def compat_pairs(self) -> list[tuple[Move, Move]]:
        """Both orientations of every compatible pair, sorted."""
        return sorted(self.ordered_compat)


def validate_intersection(
    lanes_in: Iterable[LaneId],
    lanes_out: Iterable[LaneId],
    compat: Iterable = (),
) -> IntersectionSpec:
    """Build an :class:`IntersectionSpec`, closing ``compat`` under symmetry.

    ``compat`` is an iterable of move pairs, each move given as a 2-sequence.
    """
    lin = tuple(int(x) for x in lanes_in)
    lout = tuple(int(x) for x in lanes_out)
    if len(set(lin)) != len(lin) or len(set(lout)) != len(lout):
        raise TopologyError("duplicate lane label")
    overlap = set(lin) & set(lout)
    if overlap:
        raise TopologyError(f"lanes {sorted(overlap)} are both in- and out-lanes")
    if len(lin) < 2:
        raise TopologyError("at least two in-lanes are required")
    if not lout:
        raise TopologyError("at least one out-lane is required")
    pairs = set()
    for raw in compat:
        a, b = (Move(int(m[0]), int(m[1])) for m in raw)
        for mv in (a, b):
            if mv.source not in lin or mv.target not in lout:
                raise TopologyError(f"compat references non-move {tuple(mv)}")
        pairs.add(_pair(a, b))
    # unordered pairs make the relation symmetric
    return IntersectionSpec(lin, lout, frozenset(pairs))


def compatible(a: Move, b: Move, spec: IntersectionSpec) -> bool:
    return (a, b) in spec.ordered_compat


def compatible_with_set(a: Move, moves: Iterable[Move], spec: IntersectionSpec) -> bool:
    rel = spec.ordered_compat
    return all((a, b) in rel for b in moves)


def conflicting(a: Move, b: Move, spec: IntersectionSpec) -> bool:
    """Whether ``a`` and ``b`` can collide.

    Two moves from the same in-lane never execute in the same round (a lane has
    one front agent), so they never conflict regardless of ``compat``.
    """
    return a[0] != b[0] and (a, b) not in spec.ordered_compat


def cyclic_interval(start: LaneId, stop: LaneId, spec: IntersectionSpec) -> tuple[LaneId, ...]:
    """In-lanes from ``start`` up to but excluding ``stop`` in declared cyclic order.

    ``[x, x)`` is empty.
    """
    lanes = spec.lanes_in
    n = len(lanes)
    k = lanes.index(start)
    out = []
    while lanes[k] != stop:
        out.append(lanes[k])
        k = (k + 1) % n
        if len(out) > n:
            raise TopologyError(f"lane {stop} is not an in-lane")
    return tuple(out)


Position = tuple  # (lane, queue index)


@dataclass(frozen=True)
class TransmissionEnv:
    reach: frozenset  # of ((lane, pos), (lane, pos))
    max_depth: int

    def delivers(self, sender: Position, receiver: Position) -> bool:
        return (sender, receiver) in self.reach


def validate_transmission_env(
    reach: Iterable = (),
    spec: IntersectionSpec | None = None,
    max_depth: int = 0,
    absent: Iterable = (),
) -> TransmissionEnv:
    """Validate user reach pairs and add the forced front-to-front pairs.

    ``absent`` lists pairs the caller insists are *not* in the relation; naming
    a forced front-to-front pair there is an error.
    """
    if spec is None:
        raise TopologyError("an intersection spec is required")
    lanes = set(spec.lanes_in)

    def norm(raw) -> tuple:
        (l1, p1), (l2, p2) = raw
        l1, p1, l2, p2 = int(l1), int(p1), int(l2), int(p2)
        for lane, pos in ((l1, p1), (l2, p2)):
            if lane not in lanes:
                raise TopologyError(f"reach pair references non-in-lane {lane}")
            if pos < 0 or pos > max_depth:
                raise TopologyError(f"position {pos} outside [0, {max_depth}]")
        return ((l1, p1), (l2, p2))

    pairs = {norm(p) for p in reach}
    forced = {((a, 0), (b, 0)) for a in spec.lanes_in for b in spec.lanes_in}
    denied = {norm(p) for p in absent}
    bad = denied & forced
    if bad:
        raise TopologyError(f"front-to-front pairs cannot be removed: {sorted(bad)}")
    if denied & pairs:
        raise TopologyError("a reach pair is both listed and denied")
    return TransmissionEnv(frozenset(pairs | forced), max_depth)
