"""Maps ``f: M -> M`` that can be evaluated pointwise without tabulating ``M``."""

from __future__ import annotations

import hashlib
import sys
from functools import cached_property
from typing import Sequence

import numpy as np

from hrlab.admissible import PairCatalog
from hrlab.errors import BudgetExceeded
from hrlab.modules import Element, FiniteModule

# inductive maps precompute per-pair multipliers up to this many pairs
FULL_EVAL_LIMIT = 200_000


class StructuredMap:
    """Base class: callable on elements of ``self.module``."""

    kind = "abstract"
    module: FiniteModule

    def __call__(self, x: Element) -> Element:
        raise NotImplementedError

    def table(self, M: FiniteModule | None = None) -> np.ndarray:
        """Values on all of a cyclic module, CRT-flattened and indexed by CRT value."""
        M = M or self.module
        crt = M.crt
        return np.array(
            [crt.flatten(self(crt.unflatten(i))) for i in range(M.order)], dtype=np.int64
        )

    def describe(self) -> dict:
        return {"kind": self.kind}


class ZeroMap(StructuredMap):
    kind = "zero"

    def __init__(self, module: FiniteModule) -> None:
        self.module = module

    def __call__(self, x: Element) -> Element:
        return self.module.zero

    def table(self, M: FiniteModule | None = None) -> np.ndarray:
        return np.zeros((M or self.module).order, dtype=np.int64)


class DiagonalMap(StructuredMap):
    """``f(x)_t = c_t * x_t mod m_t``; ``labels[t]`` names the subset sum owning factor ``t``."""

    kind = "initial"

    def __init__(self, module: FiniteModule, multipliers: Sequence[int],
                 labels: Sequence[int] | None = None) -> None:
        if len(multipliers) != module.rank:
            raise ValueError("one multiplier per factor is required")
        self.module = module
        self.multipliers = tuple(int(c) % m for c, m in zip(multipliers, module.factors))
        self.labels = tuple(labels) if labels is not None else None

    def __call__(self, x: Element) -> Element:
        return tuple((c * v) % m for c, v, m in zip(self.multipliers, x, self.module.factors))

    def table(self, M: FiniteModule | None = None) -> np.ndarray:
        M = M or self.module
        crt = M.crt
        X = np.arange(M.order, dtype=np.int64)
        res = [(c * (X % m)) % m for c, m in zip(self.multipliers, M.factors)]
        return crt.flatten_array(res)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "labels": list(self.labels) if self.labels is not None else None,
            "multipliers": [str(c) for c in self.multipliers],
        }


class TableMap(StructuredMap):
    """An arbitrary map given by its values; for cyclic modules stored as a flattened array."""

    kind = "table"

    def __init__(self, module: FiniteModule, values: np.ndarray | dict) -> None:
        self.module = module
        if isinstance(values, dict):
            self._dict = {tuple(k): tuple(v) for k, v in values.items()}
            self._array = None
        else:
            arr = np.asarray(values, dtype=np.int64) % module.order
            if arr.shape != (module.order,):
                raise ValueError("table length must equal the module order")
            self._array = arr
            self._dict = None

    @classmethod
    def random(cls, module: FiniteModule, rng: np.random.Generator) -> "TableMap":
        return cls(module, rng.integers(0, module.order, size=module.order))

    def __call__(self, x: Element) -> Element:
        if self._dict is not None:
            return self._dict[tuple(x)]
        crt = self.module.crt
        return crt.unflatten(int(self._array[crt.flatten(x)]))

    def table(self, M: FiniteModule | None = None) -> np.ndarray:
        if self._array is not None:
            return self._array
        return super().table(M)


class FlattenedMap(StructuredMap):
    """``base`` transported to ``Z/|M|`` through the CRT isomorphism of its module."""

    kind = "flattened"

    def __init__(self, base: StructuredMap) -> None:
        self.base = base
        self.crt = base.module.crt
        self.module = FiniteModule.cyclic(base.module.order)

    def __call__(self, x: Element) -> Element:
        return (self.crt.flatten(self.base(self.crt.unflatten(x[0]))),)

    def at(self, z: int) -> int:
        return self.crt.flatten(self.base(self.crt.unflatten(z)))

    @cached_property
    def _table(self) -> np.ndarray:
        return self.base.table(self.base.module)

    def table(self, M: FiniteModule | None = None) -> np.ndarray:
        return self._table

    def describe(self) -> dict:
        return {"kind": self.kind, "base": self.base.describe()}


def digest_ints(values) -> str:
    h = hashlib.sha256()
    h.update(",".join(str(int(v)) for v in values).encode())
    return h.hexdigest()


# integers longer than this many bits are recorded by size and digest
DECIMAL_BITS = 400_000


def int_field(x: int) -> str | dict:
    """Exact decimal string, or ``{"bits", "sha256"}`` of the hex form beyond :data:`DECIMAL_BITS`."""
    x = int(x)
    if x.bit_length() > DECIMAL_BITS:
        return {"bits": x.bit_length(), "sha256": hashlib.sha256(format(x, "x").encode()).hexdigest()}
    limit = getattr(sys, "get_int_max_str_digits", lambda: 0)()
    if limit and x.bit_length() > 3 * limit:
        sys.set_int_max_str_digits(0)
        try:
            return str(x)
        finally:
            sys.set_int_max_str_digits(limit)
    return str(x)


class InductiveMap(StructuredMap):
    """``f'(x) = (f_0(x_0), g_1(x), ..., g_n(x))`` on ``Z/m_0 ⊕ Z/m''_1 ⊕ ... ⊕ Z/m''_n``.

    Coordinate ``i`` is tied to pair ``i - 1`` of ``catalog`` (pairs on
    ``Z/m_0``).  With ``(a, b)`` the pair's values at ``x_0``,
    ``g_i(x) = -b (a + b)^{-1} x_i`` when ``a + b != 0`` and ``0`` otherwise.
    """

    kind = "inductive"

    def __init__(self, base: FlattenedMap, catalog: PairCatalog, moduli: np.ndarray) -> None:
        if catalog.size != base.module.order:
            raise ValueError("catalog is not over the base module")
        if len(moduli) != catalog.count:
            raise ValueError("one modulus per admissible pair is required")
        self.base = base
        self.catalog = catalog
        self.moduli = np.asarray(moduli, dtype=np.int64)
        self.m0 = base.module.order
        self.n = catalog.count

    @cached_property
    def module(self) -> FiniteModule:  # type: ignore[override]
        return FiniteModule((self.m0,) + tuple(int(m) for m in self.moduli))

    @cached_property
    def cardinality(self) -> int:
        out = self.m0
        for m in self.moduli:
            out *= int(m)
        return out

    def multiplier(self, i: int, z: int) -> int:
        """Coefficient of ``x_i`` in ``g_i`` when ``x_0 = z`` (``i`` is 1-based)."""
        a, b = self.catalog.pair_at(i - 1).at(z)
        if a + b == 0:
            return 0
        m = int(self.moduli[i - 1])
        return (-b * pow(a + b, -1, m)) % m

    def coordinate(self, i: int, x0: int, xi: int) -> int:
        """``f'(x)_i`` from the two coordinates it depends on."""
        if i == 0:
            return self.base.at(x0)
        return (self.multiplier(i, x0) * xi) % int(self.moduli[i - 1])

    @cached_property
    def _pair_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self.n > FULL_EVAL_LIMIT:
            raise BudgetExceeded(f"{self.n} pairs exceed the full-evaluation limit {FULL_EVAL_LIMIT}")
        k = self.catalog.ell
        supports = np.empty((self.n, k), dtype=np.int64)
        mult = np.zeros((self.n, k), dtype=np.int64)
        for r, pair in enumerate(self.catalog):
            m = int(self.moduli[r])
            supports[r] = pair.support
            for j, (a, b) in enumerate(zip(pair.alpha, pair.beta)):
                if a + b:
                    mult[r, j] = (-b * pow(a + b, -1, m)) % m
        return supports, mult

    def evaluate_array(self, x: np.ndarray) -> np.ndarray:
        """Full evaluation for an element given as an int64 array of ``n + 1`` residues."""
        supports, mult = self._pair_arrays
        out = np.zeros(self.n + 1, dtype=np.int64)
        out[0] = self.base.at(int(x[0]))
        rows, cols = np.nonzero(supports == int(x[0]))
        out[rows + 1] = (mult[rows, cols] * x[rows + 1]) % self.moduli[rows]
        return out

    def __call__(self, x: Element) -> Element:
        return tuple(int(v) for v in self.evaluate_array(np.asarray(x, dtype=np.int64)))

    def table(self, M: FiniteModule | None = None) -> np.ndarray:
        raise BudgetExceeded("an inductive-step module is far too large to tabulate")

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "base": self.base.describe(),
            "pair_level": self.catalog.ell,
            "pair_count": str(self.n),
            "moduli_sha256": digest_ints(self.moduli),
        }
