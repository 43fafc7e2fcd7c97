"""Small report types for inequality-style validity checks."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class Check:
    """One inequality ``lhs < rhs`` (or ``lhs << rhs``) with its margin.

    ``ratio`` is rhs/lhs, so bigger is safer; ``passed`` is decided by the
    producer, which knows what margin "much less than" demands.
    """

    name: str
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    note: str = ""


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.checks)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [asdict(c) for c in self.checks]}

    def table(self) -> str:
        lines = [f"{'check':<28} {'lhs':>12} {'rhs':>12} {'ratio':>10}  result"]
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            lines.append(f"{c.name:<28} {c.lhs:>12.4g} {c.rhs:>12.4g} {c.ratio:>10.3g}  {flag}")
        return "\n".join(lines)


def ratio(lhs: float, rhs: float) -> float:
    if lhs == 0:
        return float("inf") if rhs > 0 else 0.0
    return rhs / lhs


def much_less(name: str, lhs: float, rhs: float, margin: float = 10.0, note: str = "") -> Check:
    """``lhs << rhs`` read as ``rhs >= margin * lhs`` with ``rhs > 0``."""
    r = ratio(abs(lhs), rhs)
    return Check(name, float(lhs), float(rhs), r, bool(rhs > 0 and r >= margin), note)


def less(name: str, lhs: float, rhs: float, note: str = "") -> Check:
    r = ratio(abs(lhs), rhs)
    return Check(name, float(lhs), float(rhs), r, bool(lhs < rhs), note)
