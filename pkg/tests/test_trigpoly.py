from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swallowtail.trigpoly import AFFINE, TORUS, CompiledPolys, GaussianRational, TrigPoly

from conftest import family, gyroid_a0, gyroid_a1, random_base

E_A = TrigPoly({(1,): 1})
E_MA = TrigPoly({(-1,): 1})
TWO_COS_A = E_A + E_MA


# -- strategies -----------------------------------------------------------

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=7)
coeffs = st.builds(GaussianRational, rationals, rationals)


def polys(n=2, backend=TORUS, max_terms=4):
    lo = 0 if backend == AFFINE else -2
    freq = st.tuples(*[st.integers(lo, 2)] * n)
    return st.dictionaries(freq, coeffs, max_size=max_terms).map(lambda d: TrigPoly(d, n, backend))


points = st.lists(st.floats(-4, 4, allow_nan=False), min_size=2, max_size=2).map(np.array)


# -- add / mul ------------------------------------------------------------

def test_add_zero_is_identity():
    p = TrigPoly({(1, -1): 3, (0, 2): Fraction(1, 2)})
    assert p + TrigPoly.zero(2) == p


def test_exponentials_sum_to_two_cosine():
    assert TWO_COS_A.terms == {(1,): GaussianRational(1), (-1,): GaussianRational(1)}
    assert TWO_COS_A.render() == "2cos(a)"


def test_honeycomb_constant_term_built_by_hand():
    u, v = TrigPoly({(1, 0): 1}), TrigPoly({(0, 1): 1})
    w = 1 + u + v
    a0 = -(w * w.conjugate())
    assert a0 == family("honeycomb").coeffs[0]
    assert a0.render("uv") == "-3 - 2cos(u) - 2cos(v) - 2cos(u-v)"


def test_mul_identity_and_unitarity():
    p = TrigPoly({(1, 2): 2, (0, -1): GaussianRational(0, 1)})
    assert p * 1 == p
    assert E_A * E_MA == TrigPoly.constant(1, 1)


def test_product_of_two_weight_sums():
    ea, eb = TrigPoly({(1, 0): 1}), TrigPoly({(0, 1): 1})
    prod = (ea + eb) * (ea.conjugate() + eb.conjugate())
    assert prod == TrigPoly({(0, 0): 2, (1, -1): 1, (-1, 1): 1})
    rng = np.random.default_rng(1)
    for b in rng.uniform(0, 2 * np.pi, size=(10, 2)):
        assert prod.evaluate(b) == pytest.approx(2 + 2 * np.cos(b[0] - b[1]), abs=1e-12)


def test_mismatched_dimension_or_backend_rejected():
    with pytest.raises(ValueError):
        _ = E_A + TrigPoly({(1, 0): 1})
    with pytest.raises(ValueError):
        _ = TrigPoly({(1,): 1}, 1, AFFINE) + E_A
    with pytest.raises(ValueError):
        TrigPoly({(-1,): 1}, 1, AFFINE)


# -- conjugate / reality --------------------------------------------------

def test_conjugate_examples():
    assert E_A.conjugate() == E_MA
    assert TWO_COS_A.conjugate() == TWO_COS_A
    p = TrigPoly({(2, 1): GaussianRational(1, 3)})
    assert p.conjugate().conjugate() == p


def test_is_real_valued():
    assert TWO_COS_A.is_real_valued()
    assert not E_A.is_real_valued()


def test_char_poly_coefficients_real_valued(zoo_name):
    cp = family(zoo_name)
    assert all(c.is_real_valued() for c in cp.coeffs)
    assert all(c.is_real_valued() for c in cp.shifted)


# -- evaluate -------------------------------------------------------------

def test_evaluate_examples():
    assert TWO_COS_A.evaluate([0.0]) == 2.0
    cp = family("gyroid")
    assert cp.coeffs[0].evaluate([0, 0, 0]) == pytest.approx(-3)
    assert cp.coeffs[1].evaluate([np.pi / 2] * 3) == pytest.approx(0, abs=1e-14)


def test_gyroid_coefficients_match_cosine_formulas():
    cp = family("gyroid")
    for b in random_base("gyroid", 50):
        assert cp.coeffs[0].evaluate(b) == pytest.approx(gyroid_a0(*b), abs=1e-12)
        assert cp.coeffs[1].evaluate(b) == pytest.approx(gyroid_a1(*b), abs=1e-12)


def test_evaluate_rejects_wrong_length():
    with pytest.raises(ValueError):
        TWO_COS_A.evaluate([0.0, 1.0])


def test_affine_evaluation():
    a2 = TrigPoly({(2, 0): 1}, 2, AFFINE) - TrigPoly({(0, 1): 3}, 2, AFFINE)
    assert a2.evaluate([3.0, 2.0]) == pytest.approx(3.0)
    assert a2.partial_derivative(0) == TrigPoly({(1, 0): 2}, 2, AFFINE)


# -- partial derivatives --------------------------------------------------

def test_partial_derivative_examples():
    d = TWO_COS_A.partial_derivative(0)
    assert d.render() == "-2sin(a)"
    assert d.evaluate([np.pi / 2]) == pytest.approx(-2)
    assert TrigPoly.constant(5, 1).partial_derivative(0).is_zero()
    a1 = family("gyroid").coeffs[1]
    assert a1.partial_derivative(0).evaluate([0, 0, 0]) == pytest.approx(0, abs=1e-14)


def test_partial_derivatives_match_finite_differences(zoo_name):
    cp = family(zoo_name)
    h = 1e-5
    B = random_base(zoo_name, 100, seed=3)
    for c in cp.coeffs:
        for axis in range(cp.n):
            d = c.partial_derivative(axis)
            E = np.zeros(cp.n)
            E[axis] = h
            for b in B[:25]:
                fd = (c.evaluate(b + E) - c.evaluate(b - E)) / (2 * h)
                exact = d.evaluate(b)
                assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


# -- compiled evaluation --------------------------------------------------

def test_compiled_matches_scalar_evaluation():
    cp = family("gyroid")
    comp = CompiledPolys(list(cp.coeffs), cp.n, cp.backend)
    B = random_base("gyroid", 20)
    vals = comp.values(B)
    for i, b in enumerate(B):
        for j, c in enumerate(cp.coeffs):
            assert vals[i, j] == pytest.approx(c.evaluate(b), abs=1e-12)


# -- serialization --------------------------------------------------------

def test_dict_round_trip_zoo(zoo_name):
    for c in family(zoo_name).coeffs:
        assert TrigPoly.from_dict(c.to_dict()) == c


# -- properties -----------------------------------------------------------

@given(polys(), polys(), polys())
def test_distributive_law(p, q, r):
    assert (p + q) * r == p * r + q * r


@given(polys(), polys())
def test_commutative(p, q):
    assert p * q == q * p and p + q == q + p


@given(polys(), polys(), points)
def test_evaluate_is_a_ring_homomorphism(p, q, b):
    lhs = complex(TrigPoly.evaluate(p * q, b))
    rhs = complex(p.evaluate(b)) * complex(q.evaluate(b))
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(rhs)) + 1e-12


@given(polys(), points)
def test_conjugate_commutes_with_evaluation(p, b):
    lhs = complex(p.conjugate().evaluate(b))
    assert abs(lhs - complex(p.evaluate(b)).conjugate()) <= 1e-12 * (1 + abs(lhs))


@given(polys())
def test_conjugate_is_involution_and_real_part_is_real(p):
    assert p.conjugate().conjugate() == p
    assert (p + p.conjugate()).is_real_valued()


@given(polys(backend=AFFINE), polys(backend=AFFINE))
def test_affine_distributive_and_round_trip(p, q):
    assert (p + q) * q == p * q + q * q
    assert TrigPoly.from_dict(p.to_dict()) == p


@given(polys())
def test_no_stored_zero_coefficients(p):
    assert all(c for c in p.terms.values())
    assert (p - p).is_zero()
