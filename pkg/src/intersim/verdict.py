"""Three-valued check results with witnesses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

from .codec import encode

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


class Witness(NamedTuple):
    adversary: Any
    time: Any
    agents: tuple
    detail: str

    def sort_key(self) -> tuple:
        return (str(self.adversary), -1 if self.time is None else self.time, tuple(map(str, self.agents)), self.detail)


@dataclass
class Verdict:
    check: str
    status: str
    witnesses: list = field(default_factory=list)
    exact: bool = True
    notes: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.status == FAIL and not self.witnesses:
            raise ValueError(f"{self.check}: a failing verdict needs a witness")
        self.witnesses = sorted(self.witnesses, key=Witness.sort_key)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self, max_witnesses: int | None = None) -> dict:
        ws = self.witnesses if max_witnesses is None else self.witnesses[:max_witnesses]
        return {
            "check": self.check,
            "status": self.status,
            "exact": self.exact,
            "witness_count": len(self.witnesses),
            "witnesses": [
                {"adversary": w.adversary, "time": w.time, "agents": encode(list(w.agents)), "detail": w.detail}
                for w in ws
            ],
            "notes": list(self.notes),
            "stats": encode(self.stats),
        }


def from_witnesses(check: str, witnesses: list, *, truncated: bool = False, exact: bool = True, **kw) -> Verdict:
    """Fail on any witness; a clean pass over a capped enumeration is inconclusive."""
    if witnesses:
        return Verdict(check, FAIL, witnesses, exact=exact, **kw)
    if truncated:
        v = Verdict(check, INCONCLUSIVE, exact=False, **kw)
        v.notes.append("adversary enumeration was capped")
        return v
    return Verdict(check, PASS, exact=exact, **kw)
