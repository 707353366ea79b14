import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrlab.admissible import PairCatalog
from hrlab.config import default_budget
from hrlab.construction import (
    ConstructionInputs,
    DiagonalMap,
    EpsilonSchedule,
    FlattenedMap,
    InductiveMap,
    TableMap,
    ZeroMap,
    build_A,
    certify,
    compose,
    initial_step,
    many_forms,
    parse_rational,
    run_construction,
    run_levels,
    surjectivity_witness,
)
from hrlab.errors import BudgetExceeded, HypothesisError
from hrlab.forms import LinearForm, parse_form, subset_sums
from hrlab.images import ModuleSubset, image, is_surjective, level_image
from hrlab.modules import FiniteModule
from hrlab.primes import is_prime

from strategies import forms, subsets

F = parse_form


def inputs(ups, phi, eps, **kw):
    phis = (F(phi),)
    return ConstructionInputs((F(ups),), phis, EpsilonSchedule.uniform(eps, phis[0].arity), **kw)


class TestSchedule:
    def test_uniform(self):
        s = EpsilonSchedule.uniform("9/10", 2)
        assert s.levels == (Fraction(3, 10), Fraction(6, 10))
        assert s.gap(1) == Fraction(3, 10)

    def test_decimal_strings_are_exact(self):
        assert parse_rational("0.9") == Fraction(9, 10)
        assert parse_rational("3/7") == Fraction(3, 7)

    def test_float_refused(self):
        with pytest.raises(TypeError):
            parse_rational(0.9)

    def test_garbage(self):
        with pytest.raises(ValueError):
            parse_rational("nine tenths")

    @pytest.mark.parametrize("levels", [("1/2", "1/3"), ("1/2", "1"), ("0", "1/2"), ()])
    def test_must_increase_inside(self, levels):
        with pytest.raises(ValueError):
            EpsilonSchedule.from_values("1", levels)

    def test_schedule_length_matches_arity(self):
        with pytest.raises(ValueError):
            ConstructionInputs((F("t1-t2"),), (F("t1+t2"),), EpsilonSchedule.uniform("1/2", 3))


class TestBuildA:
    def test_zero_map(self):
        M = FiniteModule((5, 7))
        assert build_A(M, ZeroMap(M)).is_full()

    def test_negation(self):
        M = FiniteModule.cyclic(9)
        A = build_A(M, DiagonalMap(M, (-1,)))
        assert A.is_full()

    def test_toy_multiplier(self):
        # phi* = 2 and the factor of Z/7 is labelled 1: -(1) * 2^{-1} mod 7
        assert (2 * 4) % 7 == 1
        inp = inputs("t1-t2", "t1+t2", "9/10", mode="toy")
        state = initial_step(inp, random.Random(0))
        assert state.module.factors == (5, 7)
        assert state.fmap.multipliers == (0, 3)

    def test_zero_label_has_zero_multiplier(self):
        state = initial_step(inputs("t1-t2", "t1+t2", "9/10"), random.Random(0))
        labels = state.fmap.labels
        assert labels[0] == 0 and state.fmap.multipliers[0] == 0


class TestSurjectivityWitness:
    def test_difference(self):
        M = FiniteModule.cyclic(11)
        f = TableMap(M, np.arange(11) ** 2)
        for x in M:
            rep = surjectivity_witness(F("t1-t2"), M, f, x)
            assert rep.arguments(M, f) == (M.add(f(rep.points[0]), rep.points[0]), f(rep.points[1]))
            assert rep.evaluate(F("t1-t2"), M, f) == x

    def test_zero_target_and_map(self):
        M = FiniteModule.cyclic(7)
        rep = surjectivity_witness(F("t1-t2"), M, ZeroMap(M), (0,))
        assert rep.arguments(M, ZeroMap(M)) == ((0,), (0,))

    def test_three_variables_exhaustive(self):
        M = FiniteModule.cyclic(5)
        f = TableMap(M, [(x * x + 1) % 5 for x in range(5)])
        ups = F("t1+t2-2t3")
        for x in M:
            assert surjectivity_witness(ups, M, f, x).evaluate(ups, M, f) == x

    def test_nonzero_total(self):
        M = FiniteModule((7, 11))
        ups = F("t1-t2+t3")
        f = TableMap(M, {x: ((3 * x[0] + 1) % 7, (x[1] * x[1]) % 11) for x in M})
        for x in M:
            assert surjectivity_witness(ups, M, f, x).evaluate(ups, M, f) == x

    def test_hypotheses_enforced(self):
        M = FiniteModule.cyclic(7)
        with pytest.raises(HypothesisError):
            surjectivity_witness(F("t1+t2"), M, ZeroMap(M), (1,))
        with pytest.raises(HypothesisError):
            surjectivity_witness(F("t1-2t2"), FiniteModule.cyclic(4), ZeroMap(FiniteModule.cyclic(4)), (1,))

    @given(forms(2, 4), st.integers(0, 10**6))
    def test_random_forms_are_onto(self, ups, seed):
        if not subset_sums(ups).contains_zero:
            return
        bad = {abs(s) for s in subset_sums(ups).sums if s}
        m = next(p for p in range(2, 200) if is_prime(p) and all(s % p for s in bad))
        M = FiniteModule.cyclic(m)
        rng = np.random.default_rng(seed)
        f = TableMap.random(M, rng)
        A = build_A(M, f)
        assert is_surjective(ups, A)
        x = (seed % m,)
        assert surjectivity_witness(ups, M, f, x).evaluate(ups, M, f) == x


class TestInitialStep:
    def test_sum_moduli(self):
        state = initial_step(inputs("t1-t2", "t1+t2", "0.9"), random.Random(0))
        assert state.record["lower_bound"] == "10"
        assert state.primes == (11, 13, 17)
        assert state.cardinality == 2431
        rec = state.record["level_image"]
        assert rec["mode"] == "exhaustive"
        assert rec["zero_coordinate"] and rec["own_coordinate_zero"] and rec["contained"]
        assert rec["bound_holds"]

    def test_counts_recomputed_independently(self):
        inp = inputs("t1-t2", "2t1-t2", "0.9")
        state = initial_step(inp, random.Random(0))
        M = state.module
        L = level_image(inp.target, M, state.fmap, 1)
        assert int(state.record["level_image"]["size"]) == len(L)
        assert len(L) <= int(state.record["quotient_sum"])
        assert len(L) * 10 < 3 * 10 * M.order  # eps_1 = 3/10
        for w in L.elements():
            assert any(v == 0 for v in w)

    def test_hypothesis_failure(self):
        with pytest.raises(HypothesisError):
            run_construction(inputs("t1-t2", "t1-t2", "1/2", mode="toy"))
        with pytest.raises(HypothesisError):
            run_construction(inputs("t1+t2", "t1+t2", "1/2", mode="toy"))


@pytest.fixture(scope="module")
def toy_run():
    inp = inputs("t1-t2", "t1+t2", "9/10", mode="toy", seed=7, square_samples=300, sample_size=100)
    states, _ = run_levels(inp)
    return inp, states


class TestInductiveStep:
    def test_pair_count(self, toy_run):
        _, states = toy_run
        rec = states[1].record
        assert rec["pair_count"] == "2380"  # C(35, 2) * 4
        assert rec["value_tuples"] == 4

    def test_moduli_exceed_bound(self, toy_run):
        inp, states = toy_run
        mods = states[1].fmap.moduli
        bound = Fraction(2380) / inp.schedule.gap(1)
        assert all(m > bound and is_prime(int(m)) for m in mods)
        assert len(set(int(m) for m in mods)) == len(mods)
        assert not set(int(m) for m in mods) & {5, 7}

    def test_records_pass(self, toy_run):
        _, states = toy_run
        rec = states[1].record
        assert rec["commuting_square"]["passed"] == rec["commuting_square"]["samples"]
        assert rec["covering"]["passed"] == len(rec["covering"]["samples"])
        assert rec["collapse"]["passed"] == len(rec["collapse"]["samples"])
        assert rec["counting"]["holds"]

    def test_commuting_square(self, toy_run):
        _, states = toy_run
        prev, fmap = states[0], states[1].fmap
        crt = prev.module.crt
        rng = np.random.default_rng(1)
        for _ in range(1000):
            x = np.array([int(rng.integers(fmap.m0))] + [int(rng.integers(int(m))) for m in fmap.moduli], dtype=np.int64)
            assert fmap.evaluate_array(x)[0] == crt.flatten(prev.fmap(crt.unflatten(int(x[0]))))

    def test_own_coordinate_vanishes(self, toy_run):
        inp, states = toy_run
        fmap = states[1].fmap
        rng = random.Random(5)
        mods = np.concatenate([[fmap.m0], fmap.moduli]).astype(object)
        for _ in range(30):
            i = rng.randrange(1, fmap.n + 1)
            pair = fmap.catalog.pair_at(i - 1)
            w = np.zeros(fmap.n + 1, dtype=object)
            for z, a, b in zip(pair.support, pair.alpha, pair.beta):
                y = np.array([z] + [rng.randrange(int(m)) for m in fmap.moduli], dtype=np.int64)
                w = w + (a + b) * fmap.evaluate_array(y).astype(object) + b * y.astype(object)
            assert (w % mods)[i] == 0

    def test_zero_rule(self):
        base = FlattenedMap(ZeroMap(FiniteModule.cyclic(3)))
        phi = F("t1-t2")
        catalog = PairCatalog(phi, 3, 1)
        fmap = InductiveMap(base, catalog, np.array([101 + 2 * k for k in range(catalog.count)]))
        hits = 0
        for i in range(1, fmap.n + 1):
            pair = catalog.pair_at(i - 1)
            for z in range(3):
                a, b = pair.at(z)
                if a + b == 0:
                    hits += 1
                    assert fmap.multiplier(i, z) == 0
                    assert fmap.coordinate(i, z, 17) == 0
        assert hits > 0

    def test_exhaustive_mode_refuses(self):
        with pytest.raises(BudgetExceeded):
            run_construction(inputs("t1-t2", "t1+t2", "9/10", mode="exhaustive"))

    def test_enumeration_budget(self):
        inp = inputs("t1-t2", "t1+t2", "9/10", mode="toy", budget=default_budget().with_(max_enumeration=100))
        with pytest.raises(BudgetExceeded):
            run_construction(inp)


class TestRun:
    def test_single_variable(self):
        inp = inputs("t1-t2", "2t1", "1/2", c=50, mode="exhaustive")
        doc = run_construction(inp)
        final = doc["final"]
        assert len(doc["levels"]) == 1
        assert final["modulus_exceeds_c"] and int(final["modulus"]) > 50
        assert final["bound_holds"] and all(final["surjective"])
        # independent recount
        state = run_levels(inp)[0][0]
        A = build_A(state.module, state.fmap)
        assert len(image(F("2t1"), A)) == int(final["image_size"])
        assert level_image(F("2t1"), state.module, state.fmap, 1) == image(F("2t1"), A)

    def test_every_factor_exceeds_c(self):
        doc = run_construction(inputs("t1-t2", "3t1", "1/2", c=40, mode="exhaustive"))
        assert all(int(m) > 40 for m in doc["levels"][0]["moduli"])

    def test_deterministic(self, toy_run):
        inp = inputs("t1-t2", "t1+t2", "9/10", mode="toy", seed=3, square_samples=50, sample_size=20)
        assert run_construction(inp) == run_construction(inp)


class TestManyForms:
    def test_single_form(self):
        mf = many_forms([F("t1+t2")])
        assert mf.chi == F("t1+t2")

    def test_concatenation(self):
        mf = many_forms([F("t1+t2"), F("t1-t2")])
        assert mf.chi == F("t1+t2+t3-t4")
        assert subset_sums(mf.chi).contains_zero
        assert not mf.zero_notin_chi

    @given(st.integers(2, 30), st.data())
    def test_embedding(self, m, data):
        mf = many_forms([F("t1+t2"), F("t1-t2")])
        M = FiniteModule.cyclic(m)
        members = data.draw(subsets(m))
        A = ModuleSubset.from_elements(M, [(a,) for a in members])
        a_star = (data.draw(st.sampled_from(members)),)
        for k in range(2):
            shifted, chi_img = mf.embed(k, A, a_star)
            assert shifted.issubset(chi_img)
            assert len(image(mf.phis[k], A)) <= len(chi_img)


class TestCompose:
    def test_product_of_images(self):
        p1 = certify(F("t1-t2"), F("t1+t2"), 6, [0, 1, 3], Fraction(1))
        p2 = certify(F("t1-t2"), F("t1+t2"), 7, [0, 1, 3], Fraction(1))
        comp = compose([p1, p2], F("t1-t2"), F("t1+t2"))
        assert comp.product_image and comp.surjective
        assert comp.module.order == 42

    def test_trivial_part(self):
        p = certify(F("t1-t2"), F("t1+t2"), 25, [0, 1, 2, 3, 4, 5, 10, 15, 20], Fraction(2))
        one = certify(F("t1-t2"), F("t1+t2"), 1, [0], Fraction(3, 2))
        alone = compose([p], F("t1-t2"), F("t1+t2"))
        both = compose([p, one], F("t1-t2"), F("t1+t2"))
        assert alone.image_size == both.image_size
        assert alone.module == both.module

    def test_searched_certificates_meet_product_bound(self):
        from hrlab.search import PropertyQuery, property_holds

        q = PropertyQuery(F("t1-t2"), F("t1+t2"), Fraction(9, 10))
        parts = []
        for m in (6, 7):
            res = property_holds(q, m)
            assert res.holds
            parts.append(certify(q.upsilon, q.phi, m, res.members, q.eps))
        comp = compose(parts, q.upsilon, q.phi)
        assert comp.product_image and comp.surjective and comp.bound_holds
        assert comp.eps == Fraction(81, 100)

    def test_uncertified_input(self):
        with pytest.raises(HypothesisError):
            certify(F("t1-t2"), F("t1+t2"), 7, [0], Fraction(1))
        with pytest.raises(HypothesisError):
            certify(F("t1-t2"), F("t1+t2"), 1, [0], Fraction(1))
