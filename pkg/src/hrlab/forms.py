"""Linear forms with nonzero integer coefficients and their subset sums."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from hrlab.errors import FormParseError, HypothesisError
from hrlab.primes import is_prime, primes_above

MAX_ARITY = 24


@dataclass(frozen=True)
class LinearForm:
    """The form ``sum(coeffs[i] * t_{i+1})``; coefficients are nonzero."""

    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("a linear form needs at least one variable")
        if any(c == 0 for c in self.coeffs):
            raise ValueError(f"zero coefficient in {self.coeffs}")

    @property
    def arity(self) -> int:
        return len(self.coeffs)

    @property
    def total(self) -> int:
        """Sum of all coefficients."""
        return sum(self.coeffs)

    def __call__(self, *values: int) -> int:
        if len(values) != self.arity:
            raise ValueError(f"expected {self.arity} arguments, got {len(values)}")
        return sum(c * v for c, v in zip(self.coeffs, values))

    def __str__(self) -> str:
        return render(self)

    @classmethod
    def parse(cls, expr: str) -> "LinearForm":
        return parse_form(expr)


@dataclass(frozen=True)
class SubsetSumProfile:
    sums: frozenset[int]
    total: int
    contains_zero: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "contains_zero", 0 in self.sums)

    def sorted(self) -> list[int]:
        return sorted(self.sums)


@dataclass(frozen=True)
class FormPairHypotheses:
    zero_in_upsilon: bool
    zero_notin_phi: bool
    # 1-based, sorted; present iff zero_in_upsilon
    witness_zero_subset: tuple[int, ...] | None

    @property
    def holds(self) -> bool:
        return self.zero_in_upsilon and self.zero_notin_phi


# -- parsing -----------------------------------------------------------------


class _Scanner:
    def __init__(self, text: str) -> None:
        self.chars: list[str] = []
        self.offsets: list[int] = []
        for i, ch in enumerate(text):
            if ch.isspace():
                continue
            self.chars.append("-" if ch == "−" else ch)
            self.offsets.append(i)
        self.end = len(text)
        self.i = 0

    def pos(self) -> int:
        return self.offsets[self.i] if self.i < len(self.chars) else self.end

    def peek(self) -> str:
        return self.chars[self.i] if self.i < len(self.chars) else ""

    def take(self) -> str:
        ch = self.peek()
        self.i += 1
        return ch

    def digits(self) -> str | None:
        start = self.i
        while self.peek().isdigit() and self.peek().isascii():
            self.i += 1
        return "".join(self.chars[start : self.i]) or None


def parse_form(expr: str) -> LinearForm:
    """Parse expressions such as ``"2*t1 - t2"`` or ``"-t1 + 3t2"``.

    Coefficients of repeated variables are aggregated; a zero aggregate, or
    variable indices that do not cover ``1..h`` densely, are errors.
    """
    sc = _Scanner(expr)
    if not sc.chars:
        raise FormParseError("empty expression", 0)
    acc: dict[int, int] = {}
    first_seen: dict[int, int] = {}
    sign = 1
    if sc.peek() == "-":
        sc.take()
        sign = -1
    while True:
        start = sc.pos()
        coeff = 1
        number = sc.digits()
        if number is not None:
            coeff = int(number)
            if coeff == 0:
                raise FormParseError("coefficient must be nonzero", start)
            if sc.peek() == "*":
                sc.take()
        if sc.peek() != "t":
            raise FormParseError(f"expected 't', found {sc.peek() or 'end of input'!r}", sc.pos())
        sc.take()
        ipos = sc.pos()
        index = sc.digits()
        if index is None:
            raise FormParseError("expected variable index after 't'", ipos)
        idx = int(index)
        if idx == 0:
            raise FormParseError("variable indices start at 1", ipos)
        acc[idx] = acc.get(idx, 0) + sign * coeff
        first_seen.setdefault(idx, start)
        op = sc.peek()
        if op == "":
            break
        if op not in "+-":
            raise FormParseError(f"unexpected character {op!r}", sc.pos())
        sc.take()
        sign = 1 if op == "+" else -1
        if sc.peek() in ("+", "-", ""):
            raise FormParseError("expected a term", sc.pos())
    for idx in sorted(acc):
        if acc[idx] == 0:
            raise FormParseError(f"zero coefficient for t{idx}", first_seen[idx])
    h = max(acc)
    missing = [i for i in range(1, h + 1) if i not in acc]
    if missing:
        raise FormParseError(f"gap in variable indices: t{missing[0]} is missing")
    return LinearForm(tuple(acc[i] for i in range(1, h + 1)))


def render(form: LinearForm) -> str:
    parts: list[str] = []
    for i, c in enumerate(form.coeffs, start=1):
        mag = abs(c)
        term = f"t{i}" if mag == 1 else f"{mag}*t{i}"
        if not parts:
            parts.append(term if c > 0 else "-" + term)
        else:
            parts.append(("+ " if c > 0 else "- ") + term)
    return " ".join(parts)


# -- subset sums ---------------------------------------------------------------


def _check_arity(form: LinearForm, max_arity: int) -> None:
    if form.arity > max_arity:
        raise HypothesisError(
            f"arity {form.arity} exceeds the exhaustive subset-sum cap {max_arity}"
        )


def subset_sums(form: LinearForm, max_arity: int = MAX_ARITY) -> SubsetSumProfile:
    """The set of sums over all nonempty subsets of the coefficients."""
    _check_arity(form, max_arity)
    sums: set[int] = set()
    for c in form.coeffs:
        sums |= {s + c for s in sums}
        sums.add(c)
    return SubsetSumProfile(frozenset(sums), form.total)


def subset_sum(form: LinearForm, subset: Iterable[int]) -> int:
    """Sum of the coefficients at the given 1-based indices."""
    return sum(form.coeffs[i - 1] for i in subset)


def zero_sum_subset(form: LinearForm, max_arity: int = MAX_ARITY) -> tuple[int, ...] | None:
    """Lexicographically least sorted index set with zero coefficient sum."""
    _check_arity(form, max_arity)
    c = form.coeffs
    g = len(c)
    # reach[k]: sums of (possibly empty) subsets of indices k..g-1 (0-based)
    reach: list[set[int]] = [set() for _ in range(g + 1)]
    reach[g] = {0}
    for k in range(g - 1, -1, -1):
        reach[k] = reach[k + 1] | {s + c[k] for s in reach[k + 1]}

    # preorder DFS over increasing index tuples visits them in lex order
    def dfs(prefix: list[int], total: int, nxt: int) -> tuple[int, ...] | None:
        for k in range(nxt, g):
            s = total + c[k]
            if s == 0:
                return tuple(i + 1 for i in prefix + [k])
            if -s in reach[k + 1]:
                found = dfs(prefix + [k], s, k + 1)
                if found:
                    return found
        return None

    return dfs([], 0, 0)


def check_hypotheses(upsilon: LinearForm, phi: LinearForm) -> FormPairHypotheses:
    witness = zero_sum_subset(upsilon)
    return FormPairHypotheses(
        zero_in_upsilon=witness is not None,
        zero_notin_phi=not subset_sums(phi).contains_zero,
        witness_zero_subset=witness,
    )


# -- moduli --------------------------------------------------------------------


def forbidden_divisors(upsilons: Sequence[LinearForm], phi: LinearForm) -> set[int]:
    """Integers every modulus must be coprime to: nonzero sums of each Υ and all of S(Φ)."""
    out = {abs(s) for s in subset_sums(phi).sums}
    for u in upsilons:
        out |= {abs(s) for s in subset_sums(u).sums if s != 0}
    return out


def _as_forms(upsilon: LinearForm | Sequence[LinearForm]) -> list[LinearForm]:
    return [upsilon] if isinstance(upsilon, LinearForm) else list(upsilon)


def admissible_moduli(
    upsilon: LinearForm | Sequence[LinearForm],
    phi: LinearForm,
    lower_bound: int | Fraction | float,
    count: int,
    avoid: Iterable[int] = (),
) -> tuple[int, ...]:
    """``count`` ascending primes > lower_bound, coprime to every subset sum.

    Nonzero sums of Υ and all sums of Φ must be units modulo each result;
    ``avoid`` adds further integers the primes must be coprime to.
    """
    if subset_sums(phi).contains_zero:
        raise HypothesisError(f"0 is a subset sum of {render(phi)}")
    return tuple(int(p) for p in select_primes(
        forbidden_divisors(_as_forms(upsilon), phi) | set(avoid), lower_bound, count
    ))


def select_primes(
    coprime_to: Iterable[int], lower_bound: int | Fraction | float, count: int
) -> np.ndarray:
    """Ascending primes strictly above ``lower_bound`` dividing none of ``coprime_to``."""
    floor = math.floor(Fraction(lower_bound))
    bad: set[int] = set()
    for v in coprime_to:
        bad |= prime_factors(abs(int(v)))
    bad_arr = np.array(sorted(bad), dtype=np.int64)

    def accept(block: np.ndarray) -> np.ndarray:
        return ~np.isin(block, bad_arr)

    return primes_above(max(floor, 1), count, accept)


def prime_factors(n: int) -> set[int]:
    """Distinct prime factors by trial division; fine for the small values used here."""
    out: set[int] = set()
    if n < 2:
        return out
    if is_prime(n):
        return {n}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out.add(d)
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.add(n)
    return out
