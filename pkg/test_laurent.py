import pickle
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import RecordError
from laurent import (
    I_UNIT,
    INFINITY,
    ONE,
    ZERO,
    BiLaurent,
    GaussianRational,
    U,
    V,
    Z,
    is_v_holomorphic,
    truncate_u,
    u_order,
)

small_fractions = st.builds(
    Fraction, st.integers(min_value=-20, max_value=20), st.integers(min_value=1, max_value=12)
)
gaussians = st.builds(GaussianRational, small_fractions, small_fractions)
monomials = st.tuples(st.integers(min_value=0, max_value=4), st.integers(min_value=-4, max_value=4))
series = st.dictionaries(monomials, gaussians, max_size=5).map(BiLaurent)
v_monomials = monomials.filter(lambda key: key[1] <= key[0])
v_series = st.dictionaries(v_monomials, gaussians, max_size=5).map(BiLaurent)


# =============================================================================
# GAUSSIAN RATIONAL
# =============================================================================


def test_gaussian_basic_arithmetic():
    x = GaussianRational(1, 2)
    y = GaussianRational(Fraction(1, 3), -1)
    assert x + y == GaussianRational(Fraction(4, 3), 1)
    assert x * y == GaussianRational(Fraction(1, 3) + 2, Fraction(2, 3) - 1)
    assert I_UNIT * I_UNIT == -1
    assert x / x == ONE


def test_gaussian_accepts_rational_strings():
    assert GaussianRational("3/6", "-2") == GaussianRational(Fraction(1, 2), -2)


def test_gaussian_rejects_floats():
    with pytest.raises(TypeError):
        GaussianRational(0.5)
    with pytest.raises(TypeError):
        BiLaurent.constant(1.5)


def test_gaussian_rejects_malformed_string():
    with pytest.raises(RecordError):
        GaussianRational("0.5")


def test_gaussian_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        ONE / ZERO


def test_gaussian_is_immutable_and_picklable():
    x = GaussianRational(2, 3)
    with pytest.raises(AttributeError):
        x.re = Fraction(1)
    assert pickle.loads(pickle.dumps(x)) == x


def test_gaussian_hash_matches_fraction_for_reals():
    assert hash(GaussianRational(Fraction(3, 4))) == hash(Fraction(3, 4))
    assert GaussianRational(5) == 5


@given(gaussians, gaussians, gaussians)
def test_gaussian_field_axioms(x, y, w):
    assert x + y == y + x
    assert x * y == y * x
    assert (x * y) * w == x * (y * w)
    assert x * (y + w) == x * y + x * w
    if x:
        assert x * x.inverse() == ONE


@given(gaussians)
def test_gaussian_norm_is_product_with_conjugate(x):
    assert x * x.conjugate() == GaussianRational(x.norm())


# =============================================================================
# BI-LAURENT
# =============================================================================


@given(series, series, series)
def test_bilaurent_ring_axioms(f, g, h):
    assert f + g == g + f
    assert f * g == g * f
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert f - f == BiLaurent.zero()


@given(series, series)
def test_product_support_in_minkowski_sum(f, g):
    sums = {(u1 + u2, z1 + z2) for u1, z1 in f.support() for u2, z2 in g.support()}
    assert set((f * g).support()) <= sums


@given(series, series)
def test_u_order_is_additive(f, g):
    if f and g:
        assert u_order(f * g) == u_order(f) + u_order(g)


def test_zero_coefficients_are_dropped():
    f = BiLaurent({(1, 0): 0, (2, 3): GaussianRational(1)})
    assert f.support() == [(2, 3)]
    assert len(Z - Z) == 0


def test_negative_u_exponent_rejected():
    with pytest.raises(ValueError):
        BiLaurent.monomial(-1, 0)
    with pytest.raises(ValueError):
        U.shift(-2, 0)


def test_shift_multiplies_by_monomial():
    f = 3 * U + Z
    assert f.shift(2, 1) == f * Z * U * U


def test_v_holomorphy():
    assert is_v_holomorphic(V * V)
    assert is_v_holomorphic(U)
    assert is_v_holomorphic(BiLaurent.monomial(0, -3))
    assert not is_v_holomorphic(Z)
    assert not is_v_holomorphic(BiLaurent.monomial(1, 2))
    assert (U + Z).forbidden_terms() == [((0, 1), ONE)]


@given(v_series, v_series)
def test_v_holomorphy_is_closed_under_products(f, g):
    assert is_v_holomorphic(f) and is_v_holomorphic(g)
    assert is_v_holomorphic(f * g)
    assert is_v_holomorphic(f + g)


@given(series, series, st.integers(min_value=0, max_value=6))
def test_truncation_commutes_with_products(f, g, level):
    truncated = truncate_u(truncate_u(f, level) * truncate_u(g, level), level)
    assert truncate_u(f * g, level) == truncated


def test_u_order_and_truncation():
    f = BiLaurent({(1, 0): 1, (3, 2): 5})
    assert u_order(f) == 1
    assert u_order(BiLaurent.zero()) == INFINITY
    assert truncate_u(f, 2) == U
    assert f.max_uexp() == 3
    with pytest.raises(ValueError):
        truncate_u(f, -1)


def test_scalar_comparison_and_constant_term():
    f = BiLaurent.constant(Fraction(2, 3)) + U
    assert f.constant_term() == Fraction(2, 3)
    assert BiLaurent.constant(7) == 7


def test_records_use_exact_rational_strings():
    f = BiLaurent({(1, -1): GaussianRational(Fraction(-1, 2), 3)})
    assert f.to_records() == [{"u": 1, "z": -1, "re": "-1/2", "im": "3/1"}]
    assert BiLaurent.from_records(f.to_records()) == f


def test_str_is_readable():
    assert str(BiLaurent.zero()) == "0"
    assert str(U + 2 * Z) == "2*z + u"
