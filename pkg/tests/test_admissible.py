import random
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrlab.admissible import (
    AdmissiblePair,
    PairCatalog,
    colex_combinations,
    colex_rank,
    colex_unrank,
    count_admissible_bruteforce,
    enumerate_admissible,
    enumerate_partitions,
    is_admissible,
    pushforward,
    set_partitions,
    value_tuples,
)
from hrlab.forms import LinearForm, parse_form, subset_sums
from hrlab.images import image, amf_set
from hrlab.modules import FiniteModule

from strategies import forms


def stirling2(n, k):
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


class TestPartitions:
    @pytest.mark.parametrize("h, ell, expected", [(2, 2, 4), (2, 1, 4), (1, 1, 2)])
    def test_counts(self, h, ell, expected):
        assert sum(1 for _ in enumerate_partitions(h, ell)) == expected

    def test_canonical_order(self):
        items = list(enumerate_partitions(2, 1))
        assert all(p.blocks == ((1, 2),) for p in items)
        assert len({p.splits for p in items}) == 4

    @given(st.integers(1, 6), st.data())
    def test_stirling_numbers(self, h, data):
        ell = data.draw(st.integers(1, h))
        parts = list(set_partitions(h, ell))
        assert len(parts) == len(set(parts)) == stirling2(h, ell)
        for blocks in parts:
            assert sorted(i for b in blocks for i in b) == list(range(1, h + 1))
            assert [b[0] for b in blocks] == sorted(b[0] for b in blocks)

    @given(st.integers(1, 5), st.data())
    def test_splits_cover_blocks(self, h, data):
        ell = data.draw(st.integers(1, h))
        items = list(enumerate_partitions(h, ell))
        assert len(items) == stirling2(h, ell) * 2 ** h
        for p in items:
            for block, (zero, one) in zip(p.blocks, p.splits):
                assert sorted(zero + one) == list(block)
                assert not set(zero) & set(one)


class TestCounts:
    def test_single_level_sum(self):
        phi = parse_form("t1+t2")
        cat = enumerate_admissible(phi, FiniteModule.cyclic(5), 1)
        assert set(v[0] for v in cat.values) == {(2, 0), (1, 1), (0, 2)}
        assert cat.count == 15 == len(list(cat))
        assert count_admissible_bruteforce(phi, range(5), 1) == 15
        assert cat.description_count() == 20

    def test_two_points_in_z2(self):
        # Function-level dedup gives 4: every description puts one index on each point.
        phi = parse_form("t1+t2")
        cat = enumerate_admissible(phi, FiniteModule.cyclic(2), 2)
        assert cat.count == 4 == count_admissible_bruteforce(phi, [(0,), (1,)], 2)
        assert cat.description_count() == 8

    @given(forms(1, 3), st.integers(1, 4))
    def test_too_few_points(self, phi, extra):
        size = max(0, phi.arity - extra)
        if size < phi.arity:
            cat = PairCatalog(phi, size, phi.arity)
            assert cat.count == 0 and list(cat) == []

    @pytest.mark.parametrize("coeffs", [(1,), (1, 1), (1, -1), (2, -1), (1, 1, 1), (1, 2, 3), (1, -1, 2)])
    @pytest.mark.parametrize("m", [1, 2, 3, 5, 7])
    def test_stream_matches_bruteforce(self, coeffs, m):
        phi = LinearForm(coeffs)
        for ell in range(1, phi.arity + 1):
            cat = PairCatalog(phi, m, ell)
            assert cat.count == count_admissible_bruteforce(phi, range(m), ell)
            assert len(set(p.as_function() for p in cat)) == cat.count

    @pytest.mark.parametrize("coeffs", [(1, 1), (1, -1, 2), (1, 1, 1)])
    def test_formula_at_35(self, coeffs):
        phi = LinearForm(coeffs)
        for ell in (1, 2):
            assert PairCatalog(phi, 35, ell).count == count_admissible_bruteforce(phi, range(35), ell)


class TestCatalog:
    @given(st.integers(1, 12), st.data())
    def test_colex_round_trip(self, n, data):
        k = data.draw(st.integers(0, n))
        combos = list(colex_combinations(n, k))
        assert [colex_rank(c) for c in combos] == list(range(len(combos)))
        assert all(colex_unrank(r, k, n) == c for r, c in enumerate(combos))

    @given(forms(1, 3), st.integers(2, 6), st.data())
    def test_index_inverts_pair_at(self, phi, m, data):
        M = FiniteModule.cyclic(m)
        ell = data.draw(st.integers(1, phi.arity))
        cat = enumerate_admissible(phi, M, ell)
        if cat.count == 0:
            return
        i = data.draw(st.integers(0, cat.count - 1))
        pair = cat.pair_at(i)
        assert is_admissible(pair, phi)
        values = list(zip(pair.alpha, pair.beta))
        perm = list(range(ell))
        random.Random(i).shuffle(perm)
        assert cat.index([pair.support[j] for j in perm], [values[j] for j in perm]) == i

    def test_pair_at_range(self):
        cat = PairCatalog(parse_form("t1+t2"), 3, 1)
        with pytest.raises(IndexError):
            cat.pair_at(cat.count)

    def test_iteration_order_matches_indices(self):
        cat = enumerate_admissible(parse_form("t1-2t2"), FiniteModule((2, 3)), 2)
        assert [cat.pair_at(i) for i in range(cat.count)] == list(cat)

    @given(forms(1, 4))
    def test_values_drawn_from_subset_sums(self, phi):
        allowed = subset_sums(phi).sums | {0}
        for ell in range(1, phi.arity + 1):
            for vals in value_tuples(phi, ell):
                assert all(a in allowed and b in allowed for a, b in vals)


class TestForward:
    @pytest.mark.parametrize("factors, coeffs", [((5,), (1, 1)), ((2, 3), (1, -1, 2)), ((7,), (2, -1))])
    def test_pair_values_lie_in_image(self, factors, coeffs):
        M = FiniteModule(factors)
        phi = LinearForm(coeffs)
        rng = random.Random(3)
        table = {x: tuple(rng.randrange(m) for m in factors) for x in M}
        f = table.__getitem__
        img = image(phi, amf_set(M, f))
        for ell in range(1, phi.arity + 1):
            for pair in enumerate_admissible(phi, M, ell):
                w = pair.evaluate(M, f)
                assert w in img
                assert pair.representation().evaluate(phi, M, f) == w


class TestPushforward:
    def test_merge_example(self):
        pair = AdmissiblePair(((2, 3), (2, 5)), (1, 1), (0, 0), (((1,), ()), ((2,), ())))
        star = pushforward(pair)
        assert star.support == (2,)
        assert star.alpha == (2,) and star.beta == (0,)
        assert is_admissible(star, parse_form("t1+t2"))

    def test_injective_projection(self):
        pair = AdmissiblePair(((1, 3), (2, 5)), (1, 0), (0, 1), (((1,), ()), ((), (2,))))
        star = pushforward(pair)
        assert star.level == 2 and star.alpha == (1, 0) and star.beta == (0, 1)

    def test_beta_zero(self):
        phi = parse_form("t1+t2+t3")
        cat = enumerate_admissible(phi, FiniteModule((3, 4)), 3)
        for pair in list(cat)[:500]:
            if not any(pair.beta):
                assert not any(pushforward(pair).beta)

    @pytest.mark.parametrize("coeffs", [(1, 1), (1, -1, 2), (1, 1, 1)])
    def test_admissible_and_commutes(self, coeffs):
        phi = LinearForm(coeffs)
        M = FiniteModule((3, 4))
        M0 = FiniteModule.cyclic(3)
        rng = random.Random(11)
        g = [rng.randrange(3) for _ in range(3)]
        table = {x: (g[x[0]], rng.randrange(4)) for x in M}
        f = table.__getitem__
        f0 = lambda z: (g[z[0]],)
        proj = lambda y: (y[0],)
        for ell in range(1, phi.arity + 1):
            for pair in enumerate_admissible(phi, M, ell):
                star = pushforward(pair, proj)
                assert is_admissible(star, phi)
                assert 1 <= star.level <= pair.level
                assert (M.project(0, pair.evaluate(M, f)),) == star.evaluate(M0, f0)
