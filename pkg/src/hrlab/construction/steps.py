"""Building ``M`` and ``f`` level by level, recording what was checked along the way."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from hrlab import __version__
from hrlab.admissible import PairCatalog, set_partitions, value_tuples
from hrlab.config import Budget, default_budget, default_seed
from hrlab.errors import BudgetExceeded, HypothesisError
from hrlab.forms import (
    LinearForm,
    check_hypotheses,
    forbidden_divisors,
    render,
    select_primes,
    subset_sums,
    zero_sum_subset,
)
from hrlab.images import ModuleSubset, Representation, amf_set, image, is_surjective, level_image
from hrlab.modules import Element, FiniteModule

from hrlab.construction.maps import (
    FULL_EVAL_LIMIT,
    DiagonalMap,
    FlattenedMap,
    InductiveMap,
    StructuredMap,
    digest_ints,
    int_field,
)
from hrlab.construction.schedule import EpsilonSchedule, fraction_str

SCHEMA = "hrlab-cert/1"
MODES = ("exhaustive", "sampled", "toy")
# moduli lists up to this length are written out in full; longer ones by digest
LIST_LIMIT = 5000
# the counting inequality is checked with |M| itself up to this many new factors
EXPLICIT_LIMIT = 20_000
DEFAULT_TOY_FACTORS = (5, 7)


def build_A(M: FiniteModule, f: StructuredMap, budget: Budget | None = None) -> ModuleSubset:
    """``A(M, f) = {f(x)} ∪ {f(x) + x}``."""
    return amf_set(M, f, budget)


def sample_A(M: FiniteModule, f, rng: random.Random, k: int) -> list[Element]:
    """``k`` random members of ``A(M, f)`` without building the set."""
    out = []
    for _ in range(k):
        x = tuple(rng.randrange(m) for m in M.factors)
        fx = f(x)
        out.append(M.add(fx, x) if rng.random() < 0.5 else fx)
    return out


# -- surjectivity ---------------------------------------------------------------------


def _check_units(upsilon: LinearForm, M: FiniteModule) -> None:
    for s in subset_sums(upsilon).sums:
        if s == 0:
            continue
        for m in M.factors:
            if math.gcd(s, m) != 1:
                raise HypothesisError(f"subset sum {s} of {render(upsilon)} is not a unit modulo {m}")


def _divide(M: FiniteModule, k: int, x: Element) -> Element:
    return tuple((pow(k, -1, m) * v) % m for v, m in zip(x, M.factors))


def surjectivity_witness(upsilon: LinearForm, M: FiniteModule, f, x: Element) -> Representation:
    """A representation whose arguments all lie in ``A(M, f)`` and which ``upsilon`` maps to ``x``.

    With total coefficient 0 every slot uses one point ``x'``, flagged only in
    slot 1, so the value is ``upsilon_1 * x'``.  Otherwise the slots of the
    least zero-sum subset ``I`` use a point ``y`` (flagged only at ``min(I)``)
    and the remaining slots use ``0`` unflagged, giving
    ``upsilon_{min I} * y + total * f(0)``.
    """
    witness = zero_sum_subset(upsilon)
    if witness is None:
        raise HypothesisError(f"0 is not a subset sum of {render(upsilon)}")
    _check_units(upsilon, M)
    x = M.element(x)
    g = upsilon.arity
    c = upsilon.coeffs
    if upsilon.total == 0:
        p = _divide(M, c[0], x)
        return Representation((p,) * g, (1,) + (0,) * (g - 1))
    I = set(witness)
    i0 = min(I)
    target = M.sub(x, M.scalar_mul(upsilon.total, f(M.zero)))
    y = _divide(M, c[i0 - 1], target)
    points = tuple(y if i in I else M.zero for i in range(1, g + 1))
    flags = tuple(1 if i == i0 else 0 for i in range(1, g + 1))
    return Representation(points, flags)


# -- state -------------------------------------------------------------------------------


@dataclass
class ConstructionInputs:
    upsilons: tuple[LinearForm, ...]
    phis: tuple[LinearForm, ...]
    schedule: EpsilonSchedule
    c: int = 1
    mode: str = "sampled"
    seed: int = field(default_factory=default_seed)
    sample_size: int = 200
    square_samples: int = 1000
    toy_factors: tuple[int, ...] | None = None
    budget: Budget = field(default_factory=default_budget)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not self.phis:
            raise ValueError("at least one phi form is required")
        if self.mode == "toy" and self.toy_factors is None:
            self.toy_factors = DEFAULT_TOY_FACTORS
        if self.schedule.h != self.target.arity:
            raise ValueError(f"schedule has {self.schedule.h} levels, form has arity {self.target.arity}")

    @property
    def target(self) -> LinearForm:
        """The form actually constructed for: ``phi`` itself, or the concatenation of several."""
        if len(self.phis) == 1:
            return self.phis[0]
        return LinearForm(tuple(c for p in self.phis for c in p.coeffs))


@dataclass
class LevelState:
    level: int
    fmap: StructuredMap
    cardinality: int
    primes: tuple[int, ...]
    record: dict
    # level-restricted image of A_level, when it was computed exhaustively
    image: ModuleSubset | None = None
    bound_holds: bool | None = None

    @property
    def module(self) -> FiniteModule:
        return self.fmap.module


def _strictly_below(count: int, eps: Fraction, total: int) -> bool:
    """``count < eps * total`` in integers."""
    return count * eps.denominator < eps.numerator * total


def _moduli_record(moduli: np.ndarray) -> dict:
    return {
        "count": str(len(moduli)),
        "first": str(int(moduli[0])) if len(moduli) else None,
        "last": str(int(moduli[-1])) if len(moduli) else None,
        "sha256": digest_ints(moduli),
        "values": [str(int(m)) for m in moduli] if len(moduli) <= LIST_LIMIT else None,
    }


def check_form_hypotheses(upsilons: Sequence[LinearForm], phi: LinearForm) -> dict:
    if subset_sums(phi).contains_zero:
        raise HypothesisError(f"0 is a subset sum of {render(phi)}")
    subsets = []
    for u in upsilons:
        hyp = check_hypotheses(u, phi)
        if not hyp.zero_in_upsilon:
            raise HypothesisError(f"0 is not a subset sum of {render(u)}")
        subsets.append(list(hyp.witness_zero_subset))
    return {"zero_in_upsilon": [True] * len(upsilons), "zero_notin_phi": True,
            "upsilon_zero_subsets": subsets}


# -- initial step ----------------------------------------------------------------------


def initial_moduli(inputs: ConstructionInputs) -> tuple[tuple[int, ...], tuple[int, ...], Fraction | None]:
    """Subset-sum labels, their moduli and the lower bound the moduli exceed."""
    phi = inputs.target
    labels = tuple(sorted(subset_sums(phi).sums | {0}))
    if inputs.toy_factors is not None:
        factors = tuple(int(m) for m in inputs.toy_factors)
        bad = forbidden_divisors(inputs.upsilons, phi)
        running = 1
        for m in factors:
            if m < 2 or math.gcd(running, m) != 1 or any(math.gcd(m, s) != 1 for s in bad):
                raise HypothesisError(f"toy factor {m} is not coprime to the required values")
            running *= m
        return labels[: len(factors)], factors, None
    bound = max(Fraction(len(labels)) / inputs.schedule.at(1), Fraction(inputs.c))
    primes = select_primes(forbidden_divisors(inputs.upsilons, phi), bound, len(labels))
    return labels, tuple(int(p) for p in primes), bound


def initial_step(inputs: ConstructionInputs, rng: random.Random) -> LevelState:
    """Level 1: one factor per subset sum ``s`` (and 0), ``f_1`` scaling factor ``s`` by ``-s/phi*``."""
    phi = inputs.target
    budget = inputs.budget
    labels, moduli, bound = initial_moduli(inputs)
    M1 = FiniteModule(moduli)
    total = phi.total
    multipliers = tuple((-s * pow(total, -1, m)) % m for s, m in zip(labels, moduli))
    f1 = DiagonalMap(M1, multipliers, labels)
    card = M1.order
    eps1 = inputs.schedule.at(1)
    quotient_sum = sum(card // m for m in moduli)
    record: dict = {
        "level": 1,
        "kind": "initial",
        "labels": list(labels),
        "lower_bound": fraction_str(bound) if bound is not None else None,
        "moduli": [str(m) for m in moduli],
        "multipliers": [str(c) for c in multipliers],
        "cardinality": str(card),
        "eps_level": fraction_str(eps1),
        "quotient_sum": str(quotient_sum),
        "quotient_bound_holds": _strictly_below(quotient_sum, eps1, card),
    }
    state = LevelState(1, f1, card, moduli, record)
    if card <= budget.bitset_limit:
        L = level_image(phi, M1, f1, 1, budget)
        size = len(L)
        zero_coord = _every_index_has_zero_coordinate(L.indices(), moduli)
        own_zero = _own_coordinate_vanishes(M1, f1, phi, labels)
        full = image(phi, build_A(M1, f1, budget), budget)
        state.image = L
        state.bound_holds = _strictly_below(size, eps1, card)
        record["level_image"] = {
            "mode": "exhaustive",
            "size": str(size),
            "checked": str(card * len(labels)),
            "zero_coordinate": zero_coord,
            "own_coordinate_zero": own_zero,
            "bound_holds": state.bound_holds,
            "full_image_size": str(len(full)),
            "contained": L.issubset(full),
        }
    else:
        k = min(inputs.sample_size, budget.max_sample)
        passed = 0
        for _ in range(k):
            x = tuple(rng.randrange(m) for m in moduli)
            t = rng.randrange(len(labels))
            s = labels[t]
            w = M1.linear_combination((total, s), (f1(x), x))
            passed += w[t] == 0
        state.bound_holds = record["quotient_bound_holds"]
        record["level_image"] = {"mode": "sampled", "samples": k, "passed": passed}
    return state


def _every_index_has_zero_coordinate(idx: np.ndarray, moduli: Sequence[int]) -> bool:
    hit = np.zeros(len(idx), dtype=bool)
    for m in moduli:
        hit |= idx % m == 0
    return bool(hit.all())


def _own_coordinate_vanishes(M: FiniteModule, f: DiagonalMap, phi: LinearForm,
                             labels: Sequence[int]) -> bool:
    """For every ``x`` and label ``s``: ``phi* f(x) + s x`` is zero at the factor labelled ``s``."""
    X = np.arange(M.order, dtype=np.int64)
    for t, (s, m, c) in enumerate(zip(labels, M.factors, f.multipliers)):
        xt = X % m
        if np.any((phi.total * c * xt + s * xt) % m):
            return False
    return True


# -- inductive step ----------------------------------------------------------------


def inductive_step(state: LevelState, inputs: ConstructionInputs, rng: random.Random) -> LevelState:
    """Level ``l -> l + 1``: one new prime factor per admissible pair of level ``l + 1``."""
    phi = inputs.target
    budget = inputs.budget
    ell = state.level
    k = ell + 1
    m0 = state.cardinality
    nvals = len(value_tuples(phi, k))
    n = math.comb(m0, k) * nvals
    if n > budget.max_enumeration:
        raise BudgetExceeded(f"{n} admissible pairs of level {k} exceed the budget {budget.max_enumeration}")
    if inputs.mode == "exhaustive":
        raise BudgetExceeded(
            f"the level-{k} module has more than {n} factors, each above {n}; "
            "it cannot be enumerated, use sampled or toy mode"
        )
    gap = inputs.schedule.gap(ell)
    bound = max(Fraction(n) / gap, Fraction(inputs.c))
    avoid = forbidden_divisors(inputs.upsilons, phi) | set(state.primes)
    moduli = select_primes(avoid, bound, n)
    base = FlattenedMap(state.fmap)
    catalog = PairCatalog(phi, m0, k)
    fmap = InductiveMap(base, catalog, moduli)
    full_eval = n <= FULL_EVAL_LIMIT
    partitions = sum(1 for _ in set_partitions(phi.arity, k))

    record: dict = {
        "level": k,
        "kind": "inductive",
        "prior_cardinality": int_field(m0),
        "pair_count": str(n),
        "value_tuples": nvals,
        "description_count": str(math.perm(m0, k) * partitions * (1 << phi.arity)),
        "lower_bound": fraction_str(bound),
        "moduli": _moduli_record(moduli),
        "eps_level": fraction_str(inputs.schedule.at(k)),
    }
    record["commuting_square"] = _commuting_square(state, fmap, rng, inputs.square_samples, full_eval)
    record["covering"] = _covering_samples(phi, fmap, rng, inputs.sample_size, full_eval)
    record["collapse"] = (
        _collapse_samples(phi, fmap, state.image, rng, max(1, inputs.sample_size // 4))
        if state.image is not None else None
    )
    counting, card = _counting(fmap, inputs.schedule, ell, n, gap)
    record["counting"] = counting
    record["prior_bound_holds"] = state.bound_holds
    follows = bool(state.bound_holds) and counting["holds"]
    record["level_bound_follows"] = follows
    return LevelState(k, fmap, card, state.primes + tuple(int(p) for p in moduli), record,
                      image=None, bound_holds=follows)


def _random_lift(fmap: InductiveMap, rng: random.Random, x0: int) -> np.ndarray:
    x = np.fromiter((rng.randrange(int(m)) for m in fmap.moduli), dtype=np.int64, count=fmap.n)
    return np.concatenate([np.array([x0], dtype=np.int64), x])


def _commuting_square(state: LevelState, fmap: InductiveMap, rng: random.Random,
                      samples: int, full_eval: bool) -> dict:
    """``pi_0(f'(x)) = f(pi_0(x))``, with ``f`` evaluated on the unflattened prior element."""
    crt = state.module.crt
    passed = 0
    for _ in range(samples):
        x0 = rng.randrange(state.cardinality)
        expect = crt.flatten(state.fmap(crt.unflatten(x0)))
        if full_eval:
            got = int(fmap.evaluate_array(_random_lift(fmap, rng, x0))[0])
        else:
            got = fmap.coordinate(0, x0, 0)
        passed += got == expect
    return {"samples": samples, "passed": passed, "evaluation": "full" if full_eval else "coordinate"}


def representation_value(fmap: InductiveMap, i: int, support: Sequence[int],
                         values: Sequence[tuple[int, int]], lift: Sequence[int]) -> tuple[int, int]:
    """Coordinates 0 and ``i`` of ``sum_j (a_j + b_j) f'(y_j) + b_j y_j``.

    ``y_j`` has coordinate 0 equal to ``support[j]`` and coordinate ``i``
    equal to ``lift[j]``; no other coordinate enters these two.
    """
    m0 = fmap.m0
    mi = int(fmap.moduli[i - 1])
    w0 = 0
    wi = 0
    for z, (a, b), xi in zip(support, values, lift):
        w0 += (a + b) * fmap.coordinate(0, z, 0) + b * z
        wi += (a + b) * fmap.coordinate(i, z, xi) + b * xi
    return w0 % m0, wi % mi


def _covering_samples(phi: LinearForm, fmap: InductiveMap, rng: random.Random,
                      samples: int, full_eval: bool) -> dict:
    """Random representations whose points project to distinct values must vanish at their own pair's coordinate."""
    catalog = fmap.catalog
    k = catalog.ell
    out = []
    passed = 0
    for _ in range(samples):
        support = sorted(rng.sample(range(fmap.m0), k))
        v = rng.randrange(len(catalog.values))
        values = catalog.values[v]
        i = catalog.index(support, values) + 1
        mi = int(fmap.moduli[i - 1])
        lift = [rng.randrange(mi) for _ in range(k)]
        w0, wi = representation_value(fmap, i, support, values, lift)
        ok = wi == 0
        if full_eval:
            w = np.zeros(fmap.n + 1, dtype=object)
            for z, (a, b), xi in zip(support, values, lift):
                y = _random_lift(fmap, rng, z)
                y[i] = xi
                w = w + (a + b) * fmap.evaluate_array(y).astype(object) + b * y.astype(object)
            mods = np.concatenate([[fmap.m0], fmap.moduli]).astype(object)
            w = w % mods
            ok = ok and w[0] == w0 and w[i] == 0
        passed += ok
        out.append({
            "pair_index": str(i),
            "support": [str(z) for z in support],
            "values": [list(ab) for ab in values],
            "lift": [str(x) for x in lift],
            "w0": str(w0),
            "wi": str(wi),
        })
    return {"samples": out, "passed": passed}


def _collapse_samples(phi: LinearForm, fmap: InductiveMap, prior_image: ModuleSubset,
                      rng: random.Random, samples: int) -> dict:
    """Representations whose points share a projection land, after projecting, in the prior level image."""
    catalog = fmap.catalog
    k = catalog.ell
    out = []
    passed = 0
    for _ in range(samples):
        d = rng.randrange(1, k)
        distinct = rng.sample(range(fmap.m0), d)
        assign = list(range(d)) + [rng.randrange(d) for _ in range(k - d)]
        rng.shuffle(assign)
        support = [distinct[a] for a in assign]
        values = catalog.values[rng.randrange(len(catalog.values))]
        w0 = 0
        for z, (a, b) in zip(support, values):
            w0 += (a + b) * fmap.coordinate(0, z, 0) + b * z
        w0 %= fmap.m0
        member = bool(prior_image.mask >> w0 & 1) if prior_image.is_bitset else (
            prior_image.parent.crt.unflatten(w0) in prior_image
        )
        passed += member
        out.append({"support": [str(z) for z in support], "values": [list(ab) for ab in values],
                    "w0": str(w0)})
    return {"samples": out, "passed": passed}


def _counting(fmap: InductiveMap, schedule: EpsilonSchedule, ell: int, n: int,
              gap: Fraction) -> tuple[dict, int | None]:
    """``eps_l |M'| + sum_i |M'| / m_i < eps_{l+1} |M'|``."""
    lo = schedule.at(ell)
    hi = schedule.at(ell + 1)
    if n <= EXPLICIT_LIMIT:
        card = fmap.cardinality
        qsum = sum(card // int(m) for m in fmap.moduli)
        holds = lo * card + qsum < hi * card
        return {"form": "explicit", "cardinality": int_field(card), "quotient_sum": int_field(qsum),
                "holds": holds}, card
    # every m_i exceeds n / gap, so sum_i 1/m_i < n / min(m_i) <= gap
    mmin = int(fmap.moduli.min())
    holds = n * gap.denominator < mmin * gap.numerator
    return {"form": "min_modulus", "min_modulus": str(mmin), "holds": holds}, None


# -- driver ------------------------------------------------------------------------------


def run_levels(inputs: ConstructionInputs) -> tuple[list[LevelState], random.Random]:
    rng = random.Random(inputs.seed)
    states = [initial_step(inputs, rng)]
    while states[-1].level < inputs.target.arity:
        states.append(inductive_step(states[-1], inputs, rng))
    return states, rng


def _witness_samples(inputs: ConstructionInputs, M: FiniteModule, f, rng: random.Random) -> list[dict]:
    """Random targets ``x`` with an explicit preimage under each upsilon, in CRT-flattened form."""
    crt = M.crt
    out = []
    for t in range(min(inputs.sample_size, inputs.budget.max_sample)):
        j = t % len(inputs.upsilons)
        x = tuple(rng.randrange(m) for m in M.factors)
        rep = surjectivity_witness(inputs.upsilons[j], M, f, x)
        out.append({
            "upsilon": j,
            "x": str(crt.flatten(x)),
            "points": [str(crt.flatten(p)) for p in rep.points],
            "flags": list(rep.flags),
        })
    return out


def _final_record(inputs: ConstructionInputs, states: list[LevelState], rng: random.Random) -> dict:
    last = states[-1]
    h = inputs.target.arity
    if h == 1:
        M = last.module
        A = build_A(M, last.fmap, inputs.budget)
        target_image = image(inputs.target, A, inputs.budget)
        per_form = [len(image(p, A, inputs.budget)) for p in inputs.phis]
        card = M.order
        return {
            "level": 1,
            "modulus": str(card),
            "a_size": str(len(A)),
            "a_sha256": digest_ints(A.indices()) if A.is_bitset else None,
            "image_size": str(len(target_image)),
            "phi_image_sizes": [str(s) for s in per_form],
            "bound_holds": _strictly_below(len(target_image), inputs.schedule.eps, card),
            "surjective": [is_surjective(u, A, budget=inputs.budget) for u in inputs.upsilons],
            "witness_samples": _witness_samples(inputs, M, last.fmap, rng),
            "c": str(inputs.c),
            "modulus_exceeds_c": card > inputs.c,
        }
    card = last.cardinality
    return {
        "level": h,
        "modulus": int_field(card) if card is not None else None,
        "bound_follows": bool(last.bound_holds),
        "c": str(inputs.c),
        # the last factor alone exceeds c
        "modulus_exceeds_c": bool(last.primes[-1] > inputs.c),
    }


def run_construction(inputs: ConstructionInputs) -> dict:
    """Chain the steps for levels ``1..h`` and return the certificate document."""
    hyps = check_form_hypotheses(inputs.upsilons, inputs.target)
    states, rng = run_levels(inputs)
    final = _final_record(inputs, states, rng)
    notes = [
        "moduli are coprime to every nonzero subset sum of each upsilon form as well as to every subset sum of phi",
        "pair_count counts admissible pairs as functions; description_count counts (support, partition, split) descriptions",
    ]
    if inputs.mode == "toy":
        notes.append("toy mode substitutes small level-1 factors; no conclusion about the final bound is claimed")
    doc = {
        "schema": SCHEMA,
        "tool_version": __version__,
        "mode": inputs.mode,
        "forms": {
            "upsilon": [render(u) for u in inputs.upsilons],
            "phi": [render(p) for p in inputs.phis],
            "target": render(inputs.target),
        },
        "parameters": {
            "eps": fraction_str(inputs.schedule.eps),
            "c": str(inputs.c),
            "schedule": inputs.schedule.to_json(),
            "seed": inputs.seed,
            "sample_size": inputs.sample_size,
            # only inductive steps sample the commuting square
            "square_samples": inputs.square_samples if inputs.target.arity > 1 else None,
            "toy_factors": [str(m) for m in inputs.toy_factors] if inputs.toy_factors else None,
        },
        "hypotheses": hyps,
        "levels": [s.record for s in states],
        "final": final,
        "notes": notes,
    }
    return doc


__all__ = [
    "ConstructionInputs",
    "LevelState",
    "SCHEMA",
    "build_A",
    "initial_step",
    "inductive_step",
    "representation_value",
    "run_construction",
    "run_levels",
    "sample_A",
    "surjectivity_witness",
]
