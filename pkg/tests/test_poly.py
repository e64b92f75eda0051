import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rirtool import poly
from rirtool.errors import ZeroPolynomial
from rirtool.poly import RealPolynomial

# companion eigenvalues of the nominal repressilator denominator, from numpy.roots
NOMINAL_DEN = [2.310842754465752, 0.63207147, 1.3863, 1.0]
NOMINAL_ROOTS = [-1.76804177, 0.19087089 + 1.12719793j, 0.19087089 - 1.12719793j]


def test_trailing_zeros_stripped():
    p = RealPolynomial([1.0, 2.0, 0.0, 0.0])
    assert p.degree == 1
    assert RealPolynomial([0.0, 0.0]).is_zero()


def test_arithmetic():
    a = RealPolynomial([1, 1])
    b = RealPolynomial([-1, 1])
    assert a * b == RealPolynomial([-1, 0, 1])
    q, r = divmod(a * b, a)
    assert np.allclose(q.coeffs, b.coeffs) and r.is_zero()
    assert (a - a).is_zero()


def test_roots_imaginary_pair():
    r = poly.roots(RealPolynomial([1, 0, 1])).roots
    assert np.allclose(sorted(r, key=lambda z: z.imag), [-1j, 1j])


def test_roots_factored_cubic():
    r = poly.roots(RealPolynomial([-6, 11, -6, 1])).roots
    assert np.allclose(r, [1, 2, 3], atol=1e-12)


def test_roots_nominal_repressilator():
    rs = poly.roots(RealPolynomial(NOMINAL_DEN))
    assert np.allclose(sorted(rs.roots, key=lambda z: (z.real, z.imag)),
                       sorted(NOMINAL_ROOTS, key=lambda z: (z.real, z.imag)), atol=1e-7)
    assert rs.counts == (1, 2, 0)


def test_zero_polynomial_rejected():
    with pytest.raises(ZeroPolynomial):
        poly.roots(RealPolynomial([0.0]))
    with pytest.raises(ZeroPolynomial):
        poly.classify(RealPolynomial([0.0]))


@pytest.mark.parametrize("coeffs, expected", [
    ([-1, 0, 1], (1, 1, 0)),
    ([0, 4, 0, 1], (0, 0, 3)),
    (NOMINAL_DEN, (1, 2, 0)),
])
def test_classify(coeffs, expected):
    assert poly.classify(RealPolynomial(coeffs)) == expected


@pytest.mark.parametrize("coeffs, expected", [([1, 1, 1], True), ([1, -1, 1], False)])
def test_hurwitz_simple(coeffs, expected):
    assert poly.hurwitz(RealPolynomial(coeffs)) is expected


def test_hurwitz_origin_root_and_deflation():
    zeta, k, p, q, ell = 0.3, 1.2, 3.0, 2.0, -1.0
    d = -ell / k
    cp = RealPolynomial([ell + k * d, q - d * zeta, p, 1.0])
    assert not poly.hurwitz(cp)
    deflated, rem = divmod(cp, RealPolynomial([0.0, 1.0]))
    assert rem.norm() < 1e-12
    assert poly.hurwitz(deflated)


def test_gcd_common_factor():
    a = RealPolynomial.from_roots([1.0, -2.0])
    b = RealPolynomial.from_roots([1.0, -3.0, -4.0])
    g = poly.gcd(a, b)
    assert np.allclose(g.coeffs, [-1.0, 1.0])


poly_coeffs = st.lists(st.floats(-10, 10, allow_nan=False).filter(lambda v: abs(v) > 1e-3),
                       min_size=2, max_size=9)


@settings(max_examples=1000, deadline=None)
@given(poly_coeffs)
def test_classify_matches_tags_and_residual(c):
    p = RealPolynomial(c)
    rs = poly.roots(p)
    assert len(rs) == p.degree
    assert poly.classify(p) == (rs.tags.count(poly.OLHP), rs.tags.count(poly.ORHP), rs.tags.count(poly.AXIS))
    assert np.max(p.scaled_residual(rs.roots)) <= 1e-9
    # conjugate symmetry
    assert np.allclose(np.sort_complex(rs.roots), np.sort_complex(np.conj(rs.roots)), atol=1e-9)


stable_factor = st.one_of(
    st.tuples(st.floats(0.05, 10)),
    st.tuples(st.floats(0.05, 5), st.floats(0.05, 5)),
)


@settings(max_examples=300, deadline=None)
@given(st.lists(stable_factor, min_size=1, max_size=4))
def test_hurwitz_on_products_of_stable_factors(factors):
    p = RealPolynomial([1.0])
    for f in factors:
        p = p * (RealPolynomial([f[0], 1.0]) if len(f) == 1 else RealPolynomial([f[0] ** 2 + f[1] ** 2, 2 * f[0], 1.0]))
    assert poly.hurwitz(p)
    assert poly.classify(p) == (p.degree, 0, 0)
    assert not poly.hurwitz(p * RealPolynomial([-0.5, 1.0]))
