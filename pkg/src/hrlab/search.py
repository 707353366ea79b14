"""Exhaustive and heuristic searches for sets ``A ⊆ Z/m`` with ``Upsilon(A) = Z/m`` and ``|Phi(A)| < eps*m``.

Subsets of ``Z/m`` are Python ints with bit ``i`` set when ``i`` is a
member.  Witnesses are ordered lexicographically as the bit strings
``b_0 b_1 ... b_{m-1}``, so the depth-first scan decides ``0`` first and
tries leaving an element out before putting it in.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from hrlab.config import Budget, default_budget, default_seed
from hrlab.errors import BudgetExceeded, HrlabError
from hrlab.forms import LinearForm, render
from hrlab.images import ModuleSubset, image, image_naive
from hrlab.modules import FiniteModule


@dataclass(frozen=True)
class PropertyQuery:
    upsilon: LinearForm
    phi: LinearForm
    eps: Fraction
    include_zero: bool = False

    def __post_init__(self) -> None:
        if isinstance(self.eps, float):
            raise TypeError("eps must be exact, not a float")
        object.__setattr__(self, "eps", Fraction(self.eps))
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    def small(self, count: int, m: int) -> bool:
        """``count < eps * m`` exactly."""
        return count * self.eps.denominator < self.eps.numerator * m

    def describe(self) -> dict:
        return {
            "upsilon": render(self.upsilon),
            "phi": render(self.phi),
            "eps": str(self.eps),
            "include_zero": self.include_zero,
        }


def size_lower_bound(m: int, g: int) -> int:
    """Least ``k`` with ``k**g >= m``; a surjective ``g``-variable form needs ``|A| >= k``."""
    k = max(1, round(m ** (1 / g)) - 1)
    while k**g < m:
        k += 1
    while k > 1 and (k - 1) ** g >= m:
        k -= 1
    return k


def mask_members(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def members_mask(members: Iterable[int], m: int) -> int:
    mask = 0
    for a in members:
        mask |= 1 << (int(a) % m)
    return mask


class CyclicBits:
    """Bit-vector arithmetic on subsets of ``Z/m`` for small ``m``."""

    def __init__(self, m: int) -> None:
        self.m = m
        self.full = (1 << m) - 1
        self._dilations: dict[int, list[list[int]]] = {}

    def rotate(self, x: int, k: int) -> int:
        m = self.m
        k %= m
        if k == 0:
            return x
        return ((x << k) | (x >> (m - k))) & self.full

    def _table(self, k: int) -> list[list[int]]:
        # per byte of the mask: the dilated image of every byte value
        k %= self.m
        tab = self._dilations.get(k)
        if tab is None:
            tab = []
            for base in range(0, self.m, 8):
                row = [0] * 256
                for v in range(1, 256):
                    low = v & -v
                    i = base + low.bit_length() - 1
                    row[v] = row[v ^ low] | (1 << (k * i % self.m) if i < self.m else 0)
                tab.append(row)
            self._dilations[k] = tab
        return tab

    def dilate(self, x: int, k: int) -> int:
        out = 0
        for row in self._table(k):
            out |= row[x & 0xFF]
            x >>= 8
        return out

    def sumset(self, x: int, y: int) -> int:
        if x.bit_count() < y.bit_count():
            x, y = y, x
        out = 0
        while y:
            low = y & -y
            out |= self.rotate(x, low.bit_length() - 1)
            if out == self.full:
                return out
            y ^= low
        return out

    def image(self, coeffs: Sequence[int], x: int) -> int:
        if not x:
            return 0
        acc = self.dilate(x, coeffs[0])
        for c in coeffs[1:]:
            if acc == self.full:
                break
            acc = self.sumset(acc, self.dilate(x, c))
        return acc


# -- exhaustive scan -------------------------------------------------------------------


class _Scan:
    """Depth-first scan over subsets in lexicographic order with monotone pruning."""

    def __init__(self, query: PropertyQuery, m: int) -> None:
        self.q = query
        self.m = m
        self.bits = CyclicBits(m)
        self.ups = query.upsilon.coeffs
        self.phi = query.phi.coeffs
        self.zero = 1 if query.include_zero else 0
        self.kmin = size_lower_bound(m, query.upsilon.arity)
        # least |A| allowed by the bound, which applies to A ∪ {0} when 0 is added
        self.kmin_a = max(1, self.kmin - self.zero)
        self.nodes = 0

    def _upper_ok(self, upper: int) -> bool:
        upper |= self.zero
        return upper.bit_count() >= self.kmin and self.bits.image(self.ups, upper) == self.bits.full

    def _phi_small(self, P: int, bound: int | None = None) -> bool:
        size = self.bits.image(self.phi, P).bit_count()
        if bound is not None:
            return size < bound
        return self.q.small(size, self.m)

    def first(self, i: int = 0, P: int = 0) -> int | None:
        """Least witness extending the decided prefix ``P`` of elements ``< i``."""
        m = self.m
        upper = P | (self.bits.full >> i << i)
        if not self._upper_ok(upper) or (P and not self._phi_small(P)):
            return None
        return self._first(i, P, upper)

    def _first(self, i: int, P: int, upper: int) -> int | None:
        self.nodes += 1
        if i == self.m:
            return P if P else None
        bit = 1 << i
        out = upper & ~bit
        if self._upper_ok(out):
            r = self._first(i + 1, P, out)
            if r is not None:
                return r
        inc = P | bit
        if self._phi_small(inc):
            return self._first(i + 1, inc, upper)
        return None

    def with_size(self, k: int, anchored: bool) -> int | None:
        """Least witness of exactly ``k`` elements; ``anchored`` fixes ``0 ∈ A``."""
        if k < self.kmin_a or k > self.m:
            return None
        P, i = (1, 1) if anchored else (0, 0)
        upper = P | (self.bits.full >> i << i)
        if not self._upper_ok(upper) or (P and not self._phi_small(P)):
            return None
        return self._sized(i, P, upper, k)

    def _sized(self, i: int, P: int, upper: int, k: int) -> int | None:
        self.nodes += 1
        have = P.bit_count()
        if have == k:
            # the rest is excluded; all checks already passed except surjectivity of P
            return P if self._upper_ok(P) else None
        if have + self.m - i < k:
            return None
        bit = 1 << i
        out = upper & ~bit
        if have + self.m - i - 1 >= k and self._upper_ok(out):
            r = self._sized(i + 1, P, out, k)
            if r is not None:
                return r
        inc = P | bit
        if self._phi_small(inc):
            return self._sized(i + 1, inc, upper, k)
        return None

    def min_phi(self, anchored: bool) -> tuple[int, int] | None:
        """Least ``|Phi(A)|`` over ``A`` with ``Upsilon(A) = Z/m``, and the first ``A`` attaining it."""
        P, i = (1, 1) if anchored else (0, 0)
        upper = P | (self.bits.full >> i << i)
        if not self._upper_ok(upper):
            return None
        best = [self.m + 1, 0]
        self._bb(i, P, upper, best)
        return (best[0], best[1]) if best[1] else None

    def _bb(self, i: int, P: int, upper: int, best: list[int]) -> None:
        self.nodes += 1
        if i == self.m:
            if P:
                size = self.bits.image(self.phi, P).bit_count()
                if size < best[0]:
                    best[0], best[1] = size, P
            return
        bit = 1 << i
        out = upper & ~bit
        if self._upper_ok(out):
            self._bb(i + 1, P, out, best)
        inc = P | bit
        if self._phi_small(inc, best[0]):
            self._bb(i + 1, inc, upper, best)


def _scan_prefix(args: tuple[PropertyQuery, int, int, int]) -> int | None:
    query, m, depth, prefix = args
    return _Scan(query, m).first(depth, prefix)


def _prefixes(depth: int) -> list[int]:
    """All prefixes of ``depth`` bits in lexicographic order of ``b_0 b_1 ...``."""
    out = []
    for r in range(1 << depth):
        out.append(sum(1 << (depth - 1 - j) for j in range(depth) if r >> j & 1))
    return out


@dataclass(frozen=True)
class PropertyResult:
    m: int
    holds: bool | None
    witness: int | None
    exhaustive: bool

    @property
    def members(self) -> list[int] | None:
        return mask_members(self.witness) if self.witness is not None else None


def property_holds(query: PropertyQuery, m: int, *, exhaustive: bool = True, workers: int = 1,
                   budget: Budget | None = None, seed: int | None = None) -> PropertyResult:
    """Whether ``Z/m`` has the property, with the lexicographically least witness.

    Above the exhaustive budget the scan is refused when ``exhaustive`` is
    set; otherwise simulated annealing runs and a miss reports ``holds=None``.
    """
    budget = budget or default_budget()
    if m < 1:
        raise ValueError("m must be positive")
    if m > budget.search_max_m:
        if exhaustive:
            raise BudgetExceeded(f"m = {m} exceeds the exhaustive limit {budget.search_max_m}")
        found = anneal(query, m, seed=default_seed() if seed is None else seed)
        return PropertyResult(m, True if found is not None else None, found, False)
    depth = min(m, max(0, (workers - 1).bit_length() + 2)) if workers > 1 else 0
    if depth == 0:
        w = _Scan(query, m).first()
    else:
        jobs = [(query, m, depth, p) for p in _prefixes(depth)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            w = next((r for r in pool.map(_scan_prefix, jobs) if r is not None), None)
    return PropertyResult(m, w is not None, w, True)


def _trivial(query: PropertyQuery) -> PropertyResult:
    # Z/1: the only nonempty A is {0}, with both images {0}
    ok = query.small(1, 1)
    return PropertyResult(1, ok, 1 if ok else None, True)


def lex_order(m: int) -> Iterable[int]:
    """Every subset of ``Z/m`` as a mask, in lexicographic order of ``b_0 ... b_{m-1}``."""
    for r in range(1 << m):
        yield int(format(r, f"0{m}b")[::-1], 2) if m else 0


def property_holds_naive(query: PropertyQuery, m: int) -> PropertyResult:
    """Reference oracle: every nonempty subset in order, with images by tuple enumeration."""
    if m == 1:
        return _trivial(query)
    M = FiniteModule.cyclic(m)
    for mask in lex_order(m):
        if not mask:
            continue
        A = ModuleSubset.from_elements(M, [(a,) for a in mask_members(mask)])
        U = A.with_zero() if query.include_zero else A
        if len(image_naive(query.upsilon, U)) != m:
            continue
        if query.small(len(image_naive(query.phi, A)), m):
            return PropertyResult(m, True, mask, True)
    return PropertyResult(m, False, None, True)


def reverify(query: PropertyQuery, m: int, mask: int) -> bool:
    """Check a witness with the sumset engine in :mod:`hrlab.images`."""
    if m == 1:
        return mask == 1 and query.small(1, 1)
    M = FiniteModule.cyclic(m)
    A = ModuleSubset.from_elements(M, [(a,) for a in mask_members(mask)])
    U = A.with_zero() if query.include_zero else A
    return bool(mask) and image(query.upsilon, U).is_full() and query.small(len(image(query.phi, A)), m)


def achievable_sizes(query: PropertyQuery, m: int) -> dict[int, int]:
    """``|A| -> least witness of that size`` for every size that occurs.

    Translation preserves both conditions when ``0`` is not forced into the
    ``upsilon`` argument, so the scan may then assume ``0 ∈ A``.
    """
    scan = _Scan(query, m)
    out = {}
    for k in range(scan.kmin_a, m + 1):
        w = scan.with_size(k, anchored=not query.include_zero)
        if w is not None:
            out[k] = w
    return out


def min_phi(query: PropertyQuery, m: int) -> tuple[int, int] | None:
    """Least ``|Phi(A)|`` over all ``A`` with a surjective ``upsilon`` image, with a set attaining it."""
    return _Scan(query, m).min_phi(anchored=not query.include_zero)


# -- heuristic mode ------------------------------------------------------------------


def anneal(query: PropertyQuery, m: int, *, seed: int, steps: int = 20_000,
           t0: float = 2.0, t1: float = 0.02) -> int | None:
    """Simulated annealing over subsets; returns a verified witness or ``None``.

    The energy is ``|Phi(A)|`` plus a heavy penalty per element missing from
    ``Upsilon(A)``.  A miss proves nothing.
    """
    rng = random.Random(seed)
    bits = CyclicBits(m)
    zero = 1 if query.include_zero else 0

    def energy(x: int) -> int:
        if not x:
            return 10 * m * m
        miss = m - bits.image(query.upsilon.coeffs, x | zero).bit_count()
        return 4 * m * miss + bits.image(query.phi.coeffs, x).bit_count()

    x = members_mask(rng.sample(range(m), max(1, size_lower_bound(m, query.upsilon.arity))), m)
    e = energy(x)
    for step in range(steps):
        t = t0 * (t1 / t0) ** (step / max(1, steps - 1))
        y = x ^ (1 << rng.randrange(m))
        if rng.random() < 0.3:
            y ^= 1 << rng.randrange(m)
        ey = energy(y)
        if ey <= e or rng.random() < math.exp((e - ey) / t):
            x, e = y, ey
            if e < 4 * m and query.small(e, m) and reverify(query, m, x):
                return x
    return None


# -- reports -------------------------------------------------------------------------


@dataclass
class MOutcome:
    m: int
    satisfiable: bool | None
    witness: int | None
    min_phi_image: int | None
    sizes: list[int] | None
    largest_witness: int | None
    exhaustive: bool
    size_lower_bound: int

    @staticmethod
    def hex(mask: int | None) -> str:
        return format(mask, "x") if mask is not None else ""


@dataclass
class SearchReport:
    query: PropertyQuery
    m_max: int
    seed: int | None = None
    rows: list[MOutcome] = field(default_factory=list)

    @property
    def min_m(self) -> int | None:
        """Smallest ``m`` proved satisfiable by an exhaustive scan."""
        return next((r.m for r in self.rows if r.exhaustive and r.satisfiable), None)

    def to_json(self) -> dict:
        return {
            "query": self.query.describe(),
            "m_max": self.m_max,
            "seed": self.seed,
            "min_m": self.min_m,
            "rows": [
                {**asdict(r), "witness": MOutcome.hex(r.witness),
                 "largest_witness": MOutcome.hex(r.largest_witness),
                 "witness_members": mask_members(r.witness) if r.witness is not None else None}
                for r in self.rows
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "satisfiable", "min_phi_image", "witness_bits_hex", "sizes", "exhaustive"])
        for r in self.rows:
            w.writerow([
                r.m,
                "" if r.satisfiable is None else str(r.satisfiable).lower(),
                "" if r.min_phi_image is None else r.min_phi_image,
                MOutcome.hex(r.witness),
                " ".join(map(str, r.sizes)) if r.sizes is not None else "",
                str(r.exhaustive).lower(),
            ])
        return buf.getvalue()

    def dumps_json(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


def min_m(query: PropertyQuery, m_max: int, *, exhaustive: bool = True, workers: int = 1,
          budget: Budget | None = None, seed: int | None = None, details: bool = True) -> SearchReport:
    """Scan ``m = 1..m_max``; each row carries satisfiability, the least witness, the least ``|Phi(A)|``
    and, for satisfiable ``m``, every achievable ``|A|`` and the largest witness."""
    budget = budget or default_budget()
    if exhaustive and m_max > budget.search_max_m:
        raise BudgetExceeded(f"m_max = {m_max} exceeds the exhaustive limit {budget.search_max_m}")
    seed = default_seed() if seed is None else seed
    report = SearchReport(query, m_max, seed)
    g = query.upsilon.arity
    for m in range(1, m_max + 1):
        res = property_holds(query, m, exhaustive=exhaustive, workers=workers, budget=budget, seed=seed)
        if res.witness is not None and not reverify(query, m, res.witness):
            raise HrlabError(f"witness {res.witness:x} for m = {m} failed re-verification")
        row = MOutcome(m, res.holds, res.witness, None, None, None, res.exhaustive, size_lower_bound(m, g))
        if res.exhaustive and details:
            mp = min_phi(query, m)
            row.min_phi_image = mp[0] if mp else None
            if res.holds:
                sizes = achievable_sizes(query, m)
                row.sizes = sorted(sizes)
                row.largest_witness = sizes[max(sizes)]
            else:
                row.sizes = []
        report.rows.append(row)
    return report


# -- ratio table ---------------------------------------------------------------------


@dataclass(frozen=True)
class RatioRow:
    m: int
    size: int
    upsilon_image: int
    phi_image: int
    ratio: float | None
    in_band: bool | None

    @property
    def undefined(self) -> bool:
        return self.ratio is None


class UndefinedRatio(HrlabError, ValueError):
    """``log|Phi(A)|`` is zero."""


def log_ratio(u: int, p: int) -> float:
    if p <= 1:
        raise UndefinedRatio("|Phi(A)| = 1, so the log ratio is undefined")
    return math.log(u) / math.log(p)


def in_band(u: int, p: int) -> bool:
    """``3/4 <= log u / log p <= 4/3``, decided in integers as ``p^3 <= u^4`` and ``u^3 <= p^4``."""
    return p**3 <= u**4 and u**3 <= p**4


def ratio_report(upsilon: LinearForm, phi: LinearForm,
                 instances: Iterable[tuple[int, Iterable[int]]]) -> list[RatioRow]:
    rows = []
    for m, members in instances:
        M = FiniteModule.cyclic(m)
        A = ModuleSubset.from_elements(M, [(a % m,) for a in members])
        if not len(A):
            raise ValueError("A must be nonempty")
        u = len(image(upsilon, A))
        p = len(image(phi, A))
        if p <= 1:
            rows.append(RatioRow(m, len(A), u, p, None, None))
        else:
            rows.append(RatioRow(m, len(A), u, p, log_ratio(u, p), in_band(u, p)))
    return rows


def random_instances(m: int, trials: int, seed: int) -> list[tuple[int, list[int]]]:
    rng = random.Random(seed)
    out = []
    for _ in range(trials):
        k = rng.randint(2, max(2, m // 3))
        out.append((m, sorted(rng.sample(range(m), k))))
    return out


def ratio_json(rows: Sequence[RatioRow], upsilon: LinearForm, phi: LinearForm,
               seed: int | None) -> str:
    doc = {
        "upsilon": render(upsilon),
        "phi": render(phi),
        "seed": seed,
        "rows": [asdict(r) for r in rows],
    }
    return json.dumps(doc, indent=2) + "\n"


def ratio_csv(rows: Sequence[RatioRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "size", "upsilon_image", "phi_image", "ratio", "in_band"])
    for r in rows:
        w.writerow([r.m, r.size, r.upsilon_image, r.phi_image,
                    "undefined" if r.ratio is None else f"{r.ratio:.6f}",
                    "" if r.in_band is None else str(r.in_band).lower()])
    return buf.getvalue()
