import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrlab.modules import FiniteModule, crt_flatten, direct_sum

coprime_factors = st.lists(st.sampled_from([2, 3, 5, 7, 11, 13]), min_size=1, max_size=4, unique=True)
any_factors = st.lists(st.integers(2, 12), min_size=1, max_size=3)


def test_add():
    M = FiniteModule((5, 7))
    assert M.add((2, 3), (4, 6)) == (1, 2)


def test_negation_by_scalar():
    assert FiniteModule((5, 7)).scalar_mul(-1, (2, 3)) == (3, 4)


def test_scalar():
    assert FiniteModule.cyclic(10).scalar_mul(3, (3,)) == (9,)


def test_project():
    M = FiniteModule((5, 7, 11))
    assert M.project(1, (2, 3, 4)) == 3
    assert M.project(2, M.zero) == 0
    assert FiniteModule((5, 7)).project(1, (4, 0)) == 0
    with pytest.raises(IndexError):
        M.project(3, (2, 3, 4))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        FiniteModule((5, 7)).add((1,), (1, 2))


def test_factor_at_least_two():
    with pytest.raises(ValueError):
        FiniteModule((5, 1))


def test_order_is_exact():
    M = FiniteModule((10**9 + 7, 10**9 + 9, 998244353))
    assert M.order == (10**9 + 7) * (10**9 + 9) * 998244353


def test_crt_example():
    iso = crt_flatten(FiniteModule((5, 7)))
    assert iso.flatten((3, 0)) == 28
    assert iso.unflatten(28) == (3, 0)
    assert next(v for v in range(35) if v % 5 == 3 and v % 7 == 0) == 28


def test_crt_single_factor_is_identity():
    iso = crt_flatten(FiniteModule.cyclic(12))
    assert all(iso.flatten((v,)) == v for v in range(12))


def test_crt_requires_coprime():
    with pytest.raises(ValueError):
        crt_flatten(FiniteModule((4, 6)))


def test_direct_sum():
    assert direct_sum(FiniteModule((5,)), FiniteModule((7, 11))).factors == (5, 7, 11)


@given(any_factors, st.integers(0, 2**32))
def test_group_axioms(factors, seed):
    M = FiniteModule(tuple(factors))
    rng = random.Random(seed)
    a, b, c = (tuple(rng.randrange(m) for m in factors) for _ in range(3))
    assert M.add(M.add(a, b), c) == M.add(a, M.add(b, c))
    assert M.add(a, b) == M.add(b, a)
    assert M.add(a, M.zero) == a
    assert M.add(a, M.neg(a)) == M.zero
    assert M.sub(a, b) == M.add(a, M.neg(b))


@given(coprime_factors)
def test_crt_is_a_ring_isomorphism(factors):
    M = FiniteModule(tuple(factors))
    if M.order > 10**4:
        return
    iso = M.crt
    images = [iso.flatten(x) for x in M]
    assert sorted(images) == list(range(M.order))
    rng = random.Random(M.order)
    for _ in range(50):
        a = tuple(rng.randrange(m) for m in factors)
        b = tuple(rng.randrange(m) for m in factors)
        assert iso.flatten(M.add(a, b)) == (iso.flatten(a) + iso.flatten(b)) % M.order
        assert iso.unflatten(iso.flatten(a)) == a


@given(coprime_factors)
def test_crt_arrays(factors):
    M = FiniteModule(tuple(factors))
    v = np.arange(M.order, dtype=np.int64)
    res = M.crt.unflatten_array(v)
    assert np.array_equal(M.crt.flatten_array(res), v)


@given(any_factors)
def test_canonical_order_round_trip(factors):
    M = FiniteModule(tuple(factors))
    if M.order > 2000:
        return
    assert [M.index_of(M.element_at(k)) for k in range(M.order)] == list(range(M.order))
    assert len(set(M)) == M.order == math.prod(factors)
