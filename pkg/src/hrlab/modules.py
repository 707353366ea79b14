"""Finite Z-modules presented as direct sums of cyclic groups.

Elements are plain tuples of residues, one per cyclic factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

Element = tuple[int, ...]


@dataclass(frozen=True)
class FiniteModule:
    """``Z/m_0 ⊕ Z/m_1 ⊕ ... ⊕ Z/m_n`` for the given factors."""

    factors: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(int(m) for m in self.factors))
        if not self.factors:
            raise ValueError("a module needs at least one factor")
        bad = [m for m in self.factors if m < 2]
        if bad:
            raise ValueError(f"factors must be >= 2, got {bad}")

    @classmethod
    def cyclic(cls, m: int) -> "FiniteModule":
        return cls((m,))

    @cached_property
    def order(self) -> int:
        return math.prod(self.factors)

    @property
    def rank(self) -> int:
        return len(self.factors)

    @cached_property
    def is_cyclic(self) -> bool:
        """True iff the factors are pairwise coprime (so CRT flattening applies)."""
        running = 1
        for m in self.factors:
            if math.gcd(running, m) != 1:
                return False
            running *= m
        return True

    @property
    def zero(self) -> Element:
        return (0,) * self.rank

    def element(self, coords: Sequence[int]) -> Element:
        """Reduce ``coords`` into canonical residues."""
        if len(coords) != self.rank:
            raise ValueError(f"expected {self.rank} coordinates, got {len(coords)}")
        return tuple(int(c) % m for c, m in zip(coords, self.factors))

    def contains(self, x: Sequence[int]) -> bool:
        return len(x) == self.rank and all(0 <= c < m for c, m in zip(x, self.factors))

    def _check(self, *xs: Sequence[int]) -> None:
        for x in xs:
            if len(x) != self.rank:
                raise ValueError(f"element {tuple(x)} does not belong to module {self.factors}")

    def add(self, a: Element, b: Element) -> Element:
        self._check(a, b)
        return tuple((x + y) % m for x, y, m in zip(a, b, self.factors))

    def sub(self, a: Element, b: Element) -> Element:
        self._check(a, b)
        return tuple((x - y) % m for x, y, m in zip(a, b, self.factors))

    def neg(self, a: Element) -> Element:
        return self.scalar_mul(-1, a)

    def scalar_mul(self, k: int, a: Element) -> Element:
        self._check(a)
        return tuple((k * x) % m for x, m in zip(a, self.factors))

    def linear_combination(self, coeffs: Sequence[int], xs: Sequence[Element]) -> Element:
        out = [0] * self.rank
        for k, x in zip(coeffs, xs):
            self._check(x)
            for i, c in enumerate(x):
                out[i] += k * c
        return tuple(v % m for v, m in zip(out, self.factors))

    def project(self, i: int, x: Element) -> int:
        if not 0 <= i < self.rank:
            raise IndexError(f"coordinate {i} out of range for {self.rank} factors")
        self._check(x)
        return x[i]

    # -- canonical element order ------------------------------------------------

    def index_of(self, x: Element) -> int:
        """Position of ``x`` in the canonical order (CRT value when cyclic, else mixed radix)."""
        if self.is_cyclic:
            return self.crt.flatten(x)
        idx = 0
        for c, m in zip(x, self.factors):
            idx = idx * m + c
        return idx

    def element_at(self, idx: int) -> Element:
        if self.is_cyclic:
            return self.crt.unflatten(idx)
        out = []
        for m in reversed(self.factors):
            idx, r = divmod(idx, m)
            out.append(r)
        return tuple(reversed(out))

    def __iter__(self) -> Iterator[Element]:
        for k in range(self.order):
            yield self.element_at(k)

    @cached_property
    def crt(self) -> "CRTMap":
        return crt_flatten(self)


@dataclass(frozen=True)
class CRTMap:
    """Ring isomorphism ``⊕ Z/m_i ≅ Z/m`` for pairwise coprime factors."""

    factors: tuple[int, ...]
    modulus: int
    # basis[i] ≡ 1 mod m_i and ≡ 0 mod m_j (j != i)
    basis: tuple[int, ...]

    def flatten(self, x: Sequence[int]) -> int:
        return sum(int(c) * e for c, e in zip(x, self.basis)) % self.modulus

    def unflatten(self, v: int) -> Element:
        return tuple(v % m for m in self.factors)

    def flatten_array(self, residues: Sequence[np.ndarray]) -> np.ndarray:
        """Vectorized flatten; needs ``modulus**2 < 2**63``."""
        out = np.zeros_like(np.asarray(residues[0], dtype=np.int64))
        for r, e, m in zip(residues, self.basis, self.factors):
            out = (out + (np.asarray(r, dtype=np.int64) % m) * e) % self.modulus
        return out

    def unflatten_array(self, v: np.ndarray) -> list[np.ndarray]:
        return [v % m for m in self.factors]


def crt_flatten(M: FiniteModule) -> CRTMap:
    """CRT isomorphism of ``M`` onto ``Z/|M|``; factors must be pairwise coprime."""
    if not M.is_cyclic:
        raise ValueError(f"factors {M.factors} are not pairwise coprime")
    m = M.order
    basis = []
    for mi in M.factors:
        rest = m // mi
        basis.append(rest * pow(rest, -1, mi) % m)
    return CRTMap(M.factors, m, tuple(basis))


def direct_sum(*modules: FiniteModule) -> FiniteModule:
    return FiniteModule(tuple(f for M in modules for f in M.factors))
