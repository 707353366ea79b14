"""Certificate files: deterministic JSON with a content digest, and their verification.

Verification runs in three stages: the digest, then every recorded claim
re-checked from the recorded data alone, then a full re-run from the
recorded parameters compared field by field.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from hrlab.admissible import PairCatalog, set_partitions, value_tuples
from hrlab.config import Budget, default_budget
from hrlab.errors import CertificateFormatError, FormParseError, HypothesisError
from hrlab.forms import forbidden_divisors, parse_form, render, select_primes, subset_sums, zero_sum_subset
from hrlab.images import ModuleSubset, Representation, image, is_surjective, level_image
from hrlab.modules import FiniteModule

from hrlab.construction.maps import DiagonalMap, FlattenedMap, InductiveMap, digest_ints, int_field
from hrlab.construction.schedule import EpsilonSchedule, fraction_str, parse_rational
from hrlab.construction.steps import (
    EXPLICIT_LIMIT,
    SCHEMA,
    ConstructionInputs,
    build_A,
    representation_value,
    run_construction,
)

_TOP_KEYS = ("schema", "tool_version", "mode", "forms", "parameters", "hypotheses",
             "levels", "final", "notes", "digest")


def content_digest(doc: dict) -> str:
    body = {k: v for k, v in doc.items() if k != "digest"}
    raw = json.dumps(body, separators=(",", ":"), ensure_ascii=False)
    return "sha256:" + hashlib.sha256(raw.encode("utf-8")).hexdigest()


def seal(doc: dict) -> dict:
    """Return ``doc`` with its digest appended as the last field."""
    out = {k: v for k, v in doc.items() if k != "digest"}
    out["digest"] = content_digest(out)
    return out


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def write_certificate(doc: dict, path: str | Path) -> None:
    Path(path).write_text(dumps(seal(doc)), encoding="utf-8")


def load_certificate(path: str | Path) -> dict:
    text = Path(path).read_bytes()
    try:
        doc = json.loads(text.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CertificateFormatError(f"cannot read certificate: {exc}") from exc
    check_format(doc)
    return doc


def check_format(doc: Any) -> None:
    if not isinstance(doc, dict):
        raise CertificateFormatError("certificate must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise CertificateFormatError(f"unknown schema version {doc.get('schema')!r}, expected {SCHEMA!r}")
    missing = [k for k in _TOP_KEYS if k not in doc]
    if missing:
        raise CertificateFormatError(f"missing fields: {', '.join(missing)}")
    if not isinstance(doc["levels"], list) or not doc["levels"]:
        raise CertificateFormatError("levels must be a nonempty list")


def inputs_from(doc: dict, budget: Budget | None = None) -> ConstructionInputs:
    """Reconstruct the construction parameters recorded in ``doc``."""
    try:
        forms = doc["forms"]
        params = doc["parameters"]
        upsilons = tuple(parse_form(u) for u in forms["upsilon"])
        phis = tuple(parse_form(p) for p in forms["phi"])
        eps = parse_rational(params["eps"])
        schedule = EpsilonSchedule.from_values(eps, params["schedule"])
        toy = params["toy_factors"]
        square = params["square_samples"]
        return ConstructionInputs(
            upsilons=upsilons,
            phis=phis,
            schedule=schedule,
            c=int(params["c"]),
            mode=doc["mode"],
            seed=int(params["seed"]),
            sample_size=int(params["sample_size"]),
            square_samples=int(square) if square is not None else ConstructionInputs.square_samples,
            toy_factors=tuple(int(m) for m in toy) if toy is not None else None,
            budget=budget or default_budget(),
        )
    except (KeyError, TypeError, ValueError, FormParseError) as exc:
        raise CertificateFormatError(f"malformed parameters: {exc}") from exc


@dataclass
class VerificationReport:
    failures: list[tuple[str, str]] = field(default_factory=list)
    stages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, prop: str, message: str) -> None:
        self.failures.append((prop, message))

    def expect(self, cond: bool, prop: str, message: str) -> None:
        if not cond:
            self.fail(prop, message)


def _diff(a: Any, b: Any, path: str = "") -> Iterator[str]:
    if isinstance(a, dict) and isinstance(b, dict):
        for k in list(a) + [k for k in b if k not in a]:
            if k not in a or k not in b:
                yield f"{path}.{k}"
            else:
                yield from _diff(a[k], b[k], f"{path}.{k}")
        if list(a) != list(b):
            yield f"{path} (field order)"
    elif isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            yield f"{path} (length)"
        for i, (x, y) in enumerate(zip(a, b)):
            yield from _diff(x, y, f"{path}[{i}]")
    elif type(a) is not type(b) or a != b:
        yield path or "."


def verify_certificate(doc: Any, budget: Budget | None = None, rederive: bool = True) -> VerificationReport:
    """Re-check a certificate; raises :class:`CertificateFormatError` on structural problems."""
    check_format(doc)
    report = VerificationReport()
    report.stages.append("digest")
    if doc["digest"] != content_digest(doc):
        report.fail("digest", "content digest does not match the certificate body")
        return report
    inputs = inputs_from(doc, budget)
    report.stages.append("claims")
    try:
        _check_claims(doc, inputs, report)
    except (KeyError, IndexError, TypeError, ValueError, AttributeError) as exc:
        raise CertificateFormatError(f"malformed record: {exc!r}") from exc
    if not report.ok or not rederive:
        return report
    report.stages.append("rederivation")
    try:
        again = seal(run_construction(inputs))
    except HypothesisError as exc:
        report.fail("hypotheses", str(exc))
        return report
    for path in _diff(doc, again):
        report.fail("rederivation", f"field {path} differs from a fresh run")
        break
    return report


# -- claim checks ------------------------------------------------------------------


def _check_claims(doc: dict, inputs: ConstructionInputs, report: VerificationReport) -> None:
    phi = inputs.target
    forms = doc["forms"]
    report.expect(forms["target"] == render(phi), "forms", "target form is not the concatenation of phi forms")
    report.expect(doc["tool_version"] == _version(), "tool_version", "certificate was written by another version")
    hyp = doc["hypotheses"]
    report.expect(hyp["zero_notin_phi"] is True and not subset_sums(phi).contains_zero,
                  "hypotheses", "0 must not be a subset sum of the target form")
    report.expect(hyp["zero_in_upsilon"] == [True] * len(inputs.upsilons), "hypotheses",
                  "every upsilon form must have 0 as a subset sum")
    subsets = hyp["upsilon_zero_subsets"]
    report.expect(len(subsets) == len(inputs.upsilons), "hypotheses", "one zero-sum subset per upsilon form")
    for u, sub in zip(inputs.upsilons, subsets):
        least = zero_sum_subset(u)
        report.expect(least is not None and list(sub) == list(least), "hypotheses",
                      f"recorded subset {sub} of {render(u)} is not its least zero-sum subset")
    report.expect(len(doc["levels"]) == phi.arity, "levels", f"expected {phi.arity} level records")
    if not report.ok:
        return
    states = []
    prev = None
    for pos, rec in enumerate(doc["levels"], start=1):
        if rec["level"] != pos:
            report.fail("levels", f"record {pos} claims level {rec['level']}")
            return
        if pos == 1:
            prev = _check_initial(rec, inputs, report)
        else:
            prev = _check_inductive(rec, prev, inputs, report)
        states.append(prev)
        if not report.ok:
            return
    _check_final(doc["final"], states, inputs, report)


def _version() -> str:
    from hrlab import __version__

    return __version__


@dataclass
class _Level:
    fmap: Any
    cardinality: int | None
    primes: tuple[int, ...]
    image: ModuleSubset | None
    bound: bool


def _check_initial(rec: dict, inputs: ConstructionInputs, report: VerificationReport) -> _Level:
    from hrlab.construction.steps import initial_moduli

    phi = inputs.target
    try:
        labels, moduli, bound = initial_moduli(inputs)
    except HypothesisError as exc:
        report.fail("moduli_rule", str(exc))
        return _Level(None, None, (), None, False)
    report.expect(rec["kind"] == "initial", "level_kind", "level 1 must be an initial step")
    report.expect(rec["labels"] == list(labels), "labels", "labels are not the subset sums of phi with 0")
    report.expect(rec["lower_bound"] == (fraction_str(bound) if bound is not None else None),
                  "moduli_bound", "recorded lower bound differs from max((|S|+1)/eps_1, c)")
    stored = tuple(int(m) for m in rec["moduli"])
    report.expect(stored == moduli, "moduli_rule", f"level-1 moduli {stored} differ from the selection rule {moduli}")
    if bound is not None:
        report.expect(all(m > bound for m in stored), "moduli_bound", "a level-1 modulus is not above the bound")
    if not report.ok:
        return _Level(None, None, (), None, False)
    M1 = FiniteModule(stored)
    mult = tuple(int(c) for c in rec["multipliers"])
    expect_mult = tuple((-s * pow(phi.total, -1, m)) % m for s, m in zip(labels, stored))
    report.expect(mult == expect_mult, "multipliers", "multipliers are not -s/phi* modulo each factor")
    card = math.prod(stored)
    report.expect(int(rec["cardinality"]) == card, "cardinality", "level-1 cardinality is not the product of the moduli")
    eps1 = inputs.schedule.at(1)
    report.expect(rec["eps_level"] == fraction_str(eps1), "schedule", "eps_1 differs from the schedule")
    qsum = sum(card // m for m in stored)
    report.expect(int(rec["quotient_sum"]) == qsum, "quotient_bound", "quotient sum is wrong")
    qholds = qsum * eps1.denominator < eps1.numerator * card
    report.expect(rec["quotient_bound_holds"] is qholds, "quotient_bound", "quotient bound flag is wrong")
    if inputs.mode != "toy":
        report.expect(qholds, "quotient_bound", "sum of |M|/m_s is not below eps_1 |M|")
    f1 = DiagonalMap(M1, expect_mult, labels)
    li = rec["level_image"]
    img = None
    holds = qholds
    expected_mode = "exhaustive" if card <= inputs.budget.bitset_limit else "sampled"
    if li["mode"] != expected_mode:
        report.fail("level_image_mode", f"level-1 image should be checked in {expected_mode} mode")
        return _Level(None, None, (), None, False)
    if li["mode"] == "exhaustive":
        img = level_image(phi, M1, f1, 1, inputs.budget)
        size = len(img)
        holds = size * eps1.denominator < eps1.numerator * card
        report.expect(int(li["size"]) == size, "level_image_size", f"level-1 image has {size} elements")
        report.expect(int(li["checked"]) == card * len(labels), "level_image_size", "checked count is wrong")
        idx = img.indices()
        zero = np.zeros(len(idx), dtype=bool)
        for m in stored:
            zero |= idx % m == 0
        report.expect(li["zero_coordinate"] is bool(zero.all()), "zero_coordinate",
                      "recorded zero-coordinate flag is wrong")
        if inputs.mode != "toy":
            report.expect(bool(zero.all()), "zero_coordinate",
                          "some level-1 image element has no zero coordinate")
        X = np.arange(card, dtype=np.int64)
        own = all(
            not np.any((phi.total * c * (X % m) + s * (X % m)) % m)
            for s, m, c in zip(labels, stored, expect_mult)
        )
        report.expect(li["own_coordinate_zero"] is True and own, "zero_coordinate",
                      "a representation does not vanish at its own subset-sum coordinate")
        report.expect(li["bound_holds"] is holds, "level_image_bound", "level-1 bound flag is wrong")
        if inputs.mode != "toy":
            report.expect(holds, "level_image_bound", "|level-1 image| is not below eps_1 |M_1|")
        full = image(phi, build_A(M1, f1, inputs.budget), inputs.budget)
        report.expect(int(li["full_image_size"]) == len(full), "full_image", "full image size is wrong")
        report.expect(li["contained"] is True and img.issubset(full), "containment",
                      "level-1 image is not inside the full image")
    else:
        report.expect(li["passed"] == li["samples"], "zero_coordinate", "a sampled level-1 check failed")
    return _Level(f1, card, stored, img, holds)


def _check_inductive(rec: dict, prev: _Level, inputs: ConstructionInputs,
                     report: VerificationReport) -> _Level:
    phi = inputs.target
    k = int(rec["level"])
    ell = k - 1
    m0 = prev.cardinality
    report.expect(rec["kind"] == "inductive", "level_kind", f"level {k} must be an inductive step")
    report.expect(m0 is not None and rec["prior_cardinality"] == int_field(m0), "cardinality",
                  "prior cardinality does not match the previous level")
    nvals = len(value_tuples(phi, k))
    n = math.comb(m0, k) * nvals
    report.expect(int(rec["pair_count"]) == n and rec["value_tuples"] == nvals, "pair_count",
                  f"admissible pair count should be {n}")
    parts = sum(1 for _ in set_partitions(phi.arity, k))
    report.expect(int(rec["description_count"]) == math.perm(m0, k) * parts * (1 << phi.arity),
                  "pair_count", "description count is wrong")
    gap = inputs.schedule.gap(ell)
    bound = max(Fraction(n) / gap, Fraction(inputs.c))
    report.expect(rec["lower_bound"] == fraction_str(bound), "moduli_bound", "lower bound is not n/(eps gap)")
    report.expect(rec["eps_level"] == fraction_str(inputs.schedule.at(k)), "schedule", "eps level differs")
    if not report.ok:
        return _Level(None, None, (), None, False)
    avoid = forbidden_divisors(inputs.upsilons, phi) | set(prev.primes)
    moduli = select_primes(avoid, bound, n)
    mr = rec["moduli"]
    report.expect(
        mr["sha256"] == digest_ints(moduli) and mr["count"] == str(n)
        and mr["first"] == str(int(moduli[0])) and mr["last"] == str(int(moduli[-1])),
        "moduli_rule", "moduli differ from the selection rule",
    )
    if mr["values"] is not None:
        report.expect([int(v) for v in mr["values"]] == [int(m) for m in moduli], "moduli_rule",
                      "listed moduli differ from the selection rule")
    report.expect(bool(np.all(moduli > 0)) and Fraction(int(moduli.min())) > bound, "moduli_bound",
                  "a modulus is not above the bound")
    if not report.ok:
        return _Level(None, None, (), None, False)
    fmap = InductiveMap(FlattenedMap(prev.fmap), PairCatalog(phi, m0, k), moduli)

    sq = rec["commuting_square"]
    report.expect(sq["passed"] == sq["samples"] == inputs.square_samples, "commuting_square",
                  "commuting-square samples failed or are missing")

    cov = rec["covering"]
    report.expect(len(cov["samples"]) == inputs.sample_size and cov["passed"] == inputs.sample_size,
                  "covering", "covering sample count or pass count is wrong")
    catalog = fmap.catalog
    for s in cov["samples"]:
        support = [int(z) for z in s["support"]]
        values = [tuple(v) for v in s["values"]]
        i = int(s["pair_index"])
        if tuple(values) not in set(catalog.values) or not all(0 <= z < m0 for z in support):
            report.fail("pair_index", f"sample values {values} are not an admissible value tuple")
            break
        ok_index = (support == sorted(set(support)) and len(support) == k
                    and catalog.index(support, values) + 1 == i)
        report.expect(ok_index, "pair_index", f"sample support {support} does not belong to pair {i}")
        if not ok_index:
            break
        lift = [int(x) for x in s["lift"]]
        mi = int(moduli[i - 1])
        report.expect(all(0 <= x < mi for x in lift), "covering", "lift residue out of range")
        w0, wi = representation_value(fmap, i, support, values, lift)
        report.expect(str(w0) == s["w0"], "covering", f"projection of sample for pair {i} is wrong")
        report.expect(str(wi) == s["wi"] and wi == 0, "covering",
                      f"coordinate {i} of a level-{k} representation is not zero")

    col = rec["collapse"]
    if prev.image is None:
        report.expect(col is None, "collapse", "collapse samples need an exhaustive prior level")
    else:
        report.expect(col is not None and col["passed"] == len(col["samples"]) == max(1, inputs.sample_size // 4),
                      "collapse", "collapse sample count or pass count is wrong")
        for s in (col or {}).get("samples", []):
            support = [int(z) for z in s["support"]]
            values = [tuple(v) for v in s["values"]]
            ok_shape = len(support) == k and len(set(support)) < k and tuple(values) in set(catalog.values)
            report.expect(ok_shape, "collapse", "collapse sample is not a colliding representation")
            w0 = sum((a + b) * fmap.coordinate(0, z, 0) + b * z for z, (a, b) in zip(support, values)) % m0
            report.expect(str(w0) == s["w0"], "collapse", "projection of a collapse sample is wrong")
            member = (bool(prev.image.mask >> w0 & 1) if prev.image.is_bitset
                      else prev.image.parent.crt.unflatten(w0) in prev.image)
            report.expect(member, "collapse",
                          "projection of a collapse sample is outside the prior level image")

    ct = rec["counting"]
    lo, hi = inputs.schedule.at(ell), inputs.schedule.at(k)
    card = None
    if n <= EXPLICIT_LIMIT:
        card = fmap.cardinality
        qsum = sum(card // int(m) for m in moduli)
        holds = lo * card + qsum < hi * card
        report.expect(ct["form"] == "explicit" and ct["cardinality"] == int_field(card)
                      and ct["quotient_sum"] == int_field(qsum), "counting_inequality",
                      "recorded cardinality or quotient sum is wrong")
    else:
        mmin = int(moduli.min())
        holds = n * gap.denominator < mmin * gap.numerator
        report.expect(ct["form"] == "min_modulus" and ct["min_modulus"] == str(mmin),
                      "counting_inequality", "recorded minimal modulus is wrong")
    report.expect(ct["holds"] is holds and holds, "counting_inequality",
                  "eps_l |M| + sum |M|/m_i < eps_(l+1) |M| does not hold")
    report.expect(rec["prior_bound_holds"] is prev.bound, "prior_bound", "prior bound flag is wrong")
    follows = prev.bound and holds
    report.expect(rec["level_bound_follows"] is follows, "level_bound", "level bound flag is wrong")
    primes = prev.primes + tuple(int(p) for p in moduli)
    return _Level(fmap, card, primes, None, follows)


def _check_witnesses(samples: list, M: FiniteModule, f, inputs: ConstructionInputs,
                     report: VerificationReport) -> None:
    expected = min(inputs.sample_size, inputs.budget.max_sample)
    report.expect(len(samples) == expected, "witness_samples", f"expected {expected} witness samples")
    crt = M.crt
    for t, s in enumerate(samples):
        j = s["upsilon"]
        if j != t % len(inputs.upsilons):
            report.fail("witness_samples", f"sample {t} names the wrong upsilon form")
            return
        ups = inputs.upsilons[j]
        values = [int(s["x"])] + [int(p) for p in s["points"]]
        if len(s["points"]) != ups.arity or any(not 0 <= v < M.order for v in values) \
                or len(s["flags"]) != ups.arity or any(b not in (0, 1) for b in s["flags"]):
            report.fail("witness_samples", f"sample {t} is not a representation over M")
            return
        rep = Representation(tuple(crt.unflatten(v) for v in values[1:]), tuple(s["flags"]))
        report.expect(rep.evaluate(ups, M, f) == crt.unflatten(values[0]), "witness_samples",
                      f"sample {t} does not evaluate to its target")


def _check_final(rec: dict, states: list[_Level], inputs: ConstructionInputs,
                 report: VerificationReport) -> None:
    h = inputs.target.arity
    last = states[-1]
    report.expect(rec["level"] == h, "final_level", "final level is wrong")
    if h == 1:
        M = last.fmap.module
        A = build_A(M, last.fmap, inputs.budget)
        card = M.order
        size = len(image(inputs.target, A, inputs.budget))
        report.expect(rec["modulus"] == str(card), "final_modulus", "final modulus is wrong")
        report.expect(rec["a_size"] == str(len(A)), "a_size", "size of A is wrong")
        sha = digest_ints(A.indices()) if A.is_bitset else None
        report.expect(rec["a_sha256"] == sha, "a_members", "members of A differ")
        report.expect(rec["image_size"] == str(size), "final_bound", "image size is wrong")
        sizes = [str(len(image(p, A, inputs.budget))) for p in inputs.phis]
        report.expect(rec["phi_image_sizes"] == sizes, "final_bound", "per-form image sizes are wrong")
        holds = size * inputs.schedule.eps.denominator < inputs.schedule.eps.numerator * card
        report.expect(rec["bound_holds"] is holds and holds, "final_bound", "|phi(A)| < eps |M| fails")
        surj = [is_surjective(u, A, budget=inputs.budget) for u in inputs.upsilons]
        report.expect(rec["surjective"] == surj and all(surj), "surjectivity", "upsilon(A) is not all of M")
        _check_witnesses(rec["witness_samples"], M, last.fmap, inputs, report)
        report.expect(rec["c"] == str(inputs.c), "c", "final record was checked against another c")
        report.expect(rec["modulus_exceeds_c"] is (card > inputs.c) and card > inputs.c, "modulus_exceeds_c", "modulus not above c")
    else:
        card = last.cardinality
        report.expect(rec["modulus"] == (int_field(card) if card is not None else None), "final_modulus", "final modulus is wrong")
        report.expect(rec["bound_follows"] is last.bound, "final_bound", "final bound flag is wrong")
        report.expect(rec["c"] == str(inputs.c), "c", "final record was checked against another c")
        above = all(p > inputs.c for p in last.primes[-1:])
        report.expect(rec["modulus_exceeds_c"] is above and above, "modulus_exceeds_c", "modulus not above c")
