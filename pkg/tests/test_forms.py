import math
from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrlab.errors import FormParseError, HypothesisError
from hrlab.forms import (
    LinearForm,
    admissible_moduli,
    check_hypotheses,
    parse_form,
    render,
    subset_sums,
    zero_sum_subset,
)

from strategies import forms


def brute_sums(form: LinearForm) -> set[int]:
    idx = range(form.arity)
    return {sum(form.coeffs[i] for i in I) for k in range(1, form.arity + 1) for I in combinations(idx, k)}


class TestParse:
    def test_difference(self):
        f = parse_form("t1 - t2")
        assert f.arity == 2 and f.coeffs == (1, -1)

    def test_scaled(self):
        assert parse_form("2*t1 - t2").coeffs == (2, -1)

    def test_implicit_multiplication_and_leading_minus(self):
        assert parse_form("-t1 + 3t2").coeffs == (-1, 3)

    def test_whitespace_ignored(self):
        assert parse_form("  2 * t1-t2 ").coeffs == (2, -1)

    def test_aggregation(self):
        assert parse_form("t1 + t2 + t1").coeffs == (2, 1)

    def test_cancelling_coefficient(self):
        with pytest.raises(FormParseError, match="zero coefficient for t1"):
            parse_form("t1 + t2 - t1")

    def test_gap(self):
        with pytest.raises(FormParseError, match="gap"):
            parse_form("t1 + t3")

    @pytest.mark.parametrize("bad, pos", [("t1 + ", 5), ("t1 ^ t2", 3), ("x1", 0), ("t", 1), ("", 0)])
    def test_syntax_error_position(self, bad, pos):
        with pytest.raises(FormParseError) as err:
            parse_form(bad)
        assert err.value.position == pos

    def test_zero_index(self):
        with pytest.raises(FormParseError):
            parse_form("t0 + t1")

    def test_linear_form_rejects_zero(self):
        with pytest.raises(ValueError):
            LinearForm((1, 0))

    def test_evaluation(self):
        assert parse_form("2*t1 - t2")(3, 4) == 2

    @given(forms(1, 6))
    def test_render_round_trip(self, f):
        assert parse_form(render(f)) == f

    def test_render_canonical(self):
        assert render(parse_form("-t2 + 2*t1")) == "2*t1 - t2"


class TestSubsetSums:
    def test_all_ones(self):
        assert subset_sums(parse_form("t1+t2+t3+t4")).sums == {1, 2, 3, 4}

    def test_difference(self):
        prof = subset_sums(parse_form("t1-t2"))
        assert prof.sorted() == [-1, 0, 1] and prof.contains_zero

    def test_two_t1_minus_t2(self):
        prof = subset_sums(parse_form("2*t1-t2"))
        assert prof.sorted() == [-1, 1, 2] and not prof.contains_zero

    def test_arity_cap(self):
        with pytest.raises(HypothesisError):
            subset_sums(LinearForm((1,) * 25))

    @given(forms(1, 7))
    def test_matches_enumeration(self, f):
        prof = subset_sums(f)
        assert prof.sums == brute_sums(f)
        assert len(prof.sums) <= 2**f.arity - 1
        assert prof.total == f.total and f.total in prof.sums
        assert all(c in prof.sums for c in f.coeffs)

    @given(forms(1, 7))
    def test_zero_subset_is_least(self, f):
        w = zero_sum_subset(f)
        cands = sorted(
            tuple(i + 1 for i in I)
            for k in range(1, f.arity + 1)
            for I in combinations(range(f.arity), k)
            if sum(f.coeffs[i] for i in I) == 0
        )
        assert w == (cands[0] if cands else None)


class TestHypotheses:
    def test_standard_pair(self):
        h = check_hypotheses(parse_form("t1-t2"), parse_form("t1+t2"))
        assert h.zero_in_upsilon and h.witness_zero_subset == (1, 2) and h.zero_notin_phi and h.holds

    def test_no_zero_in_upsilon(self):
        h = check_hypotheses(parse_form("t1"), parse_form("t1+t2"))
        assert not h.zero_in_upsilon and h.witness_zero_subset is None

    def test_same_form(self):
        h = check_hypotheses(parse_form("t1-t2"), parse_form("t1-t2"))
        assert h.zero_in_upsilon and not h.zero_notin_phi and not h.holds


class TestModuli:
    def test_sum_pair(self):
        assert admissible_moduli(parse_form("t1-t2"), parse_form("t1+t2"), 4, 3) == (5, 7, 11)

    def test_fractional_bound(self):
        assert admissible_moduli(parse_form("t1-t2"), parse_form("t1+t2"), 3.75, 3) == (5, 7, 11)

    def test_scaled_pair(self):
        assert admissible_moduli(parse_form("t1-t2"), parse_form("2*t1-t2"), 8, 2) == (11, 13)

    def test_empty_request(self):
        assert admissible_moduli(parse_form("t1-t2"), parse_form("t1+t2"), 100, 0) == ()

    def test_requires_zero_free_phi(self):
        with pytest.raises(HypothesisError):
            admissible_moduli(parse_form("t1-t2"), parse_form("t1-t2"), 4, 1)

    def test_skips_divisors(self):
        # subset sums are 1..6, so 2, 3 and 5 are excluded
        ms = admissible_moduli(parse_form("t1-t2"), parse_form("t1+2*t2+3*t3"), 1, 3)
        assert ms == (7, 11, 13)

    @given(forms(1, 4).filter(lambda f: 0 in subset_sums(f).sums),
           forms(1, 4).filter(lambda f: 0 not in subset_sums(f).sums),
           st.integers(0, 200), st.integers(0, 12))
    def test_properties(self, ups, phi, bound, count):
        ms = admissible_moduli(ups, phi, bound, count)
        assert len(ms) == count
        assert all(m > bound for m in ms)
        assert all(math.gcd(a, b) == 1 for a, b in combinations(ms, 2))
        sums = [s for s in subset_sums(ups).sums if s] + list(subset_sums(phi).sums)
        assert all(math.gcd(m, s) == 1 for m in ms for s in sums)
