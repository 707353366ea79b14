"""Budget caps used by the enumeration-heavy operations."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Budget:
    # bit-vector sets are used up to 2**bitset_bits elements
    bitset_bits: int = 26
    # word operations allowed in one sumset-image evaluation
    max_work: int = 10**10
    # items any single enumeration may visit or materialize
    max_enumeration: int = 10**7
    max_sample: int = 10**6
    # largest m scanned exhaustively by the subset search
    search_max_m: int = 24
    max_arity: int = 24

    @property
    def bitset_limit(self) -> int:
        return 1 << self.bitset_bits

    def with_(self, **changes) -> "Budget":
        return replace(self, **changes)


def default_budget() -> Budget:
    """Return the default budget, honouring ``HRLAB_BUDGET_BITS``."""
    bits = os.environ.get("HRLAB_BUDGET_BITS")
    if bits:
        return Budget(bitset_bits=int(bits))
    return Budget()


DEFAULT_SEED = 12345


def default_seed() -> int:
    seed = os.environ.get("HRLAB_SEED")
    return int(seed) if seed else DEFAULT_SEED
