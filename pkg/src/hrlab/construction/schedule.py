"""Exact rational ε schedules."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"P/Q"`` or a decimal string exactly; floats are refused."""
    if isinstance(text, float):
        raise TypeError("pass rationals as strings or Fractions, not floats")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {text!r}") from exc


def fraction_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class EpsilonSchedule:
    """Thresholds ``0 < eps_1 < ... < eps_h < eps``."""

    eps: Fraction
    levels: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps", Fraction(self.eps))
        object.__setattr__(self, "levels", tuple(Fraction(e) for e in self.levels))
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if not self.levels:
            raise ValueError("a schedule needs at least one level")
        prev = Fraction(0)
        for e in self.levels:
            if not prev < e < self.eps:
                raise ValueError("schedule must increase strictly inside (0, eps)")
            prev = e

    @classmethod
    def uniform(cls, eps: Fraction | str, h: int) -> "EpsilonSchedule":
        """``eps_l = eps * l / (h + 1)``."""
        eps = parse_rational(eps)
        return cls(eps, tuple(eps * l / (h + 1) for l in range(1, h + 1)))

    @classmethod
    def from_values(cls, eps: Fraction | str, values: Sequence[Fraction | str]) -> "EpsilonSchedule":
        return cls(parse_rational(eps), tuple(parse_rational(v) for v in values))

    @property
    def h(self) -> int:
        return len(self.levels)

    def at(self, level: int) -> Fraction:
        """``eps_level`` (1-based)."""
        return self.levels[level - 1]

    def gap(self, level: int) -> Fraction:
        """``eps_{level+1} - eps_level``."""
        return self.levels[level] - self.levels[level - 1]

    def to_json(self) -> list[str]:
        return [fraction_str(e) for e in self.levels]
