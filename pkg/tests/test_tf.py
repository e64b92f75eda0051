import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rirtool import tf
from rirtool.errors import AxisPole, CancellationDetected, Improper, PhaseSingular, PoleAtOrigin, PoleHit
from rirtool.rir_fixed import allpass_from_critical
from rirtool.tf import RationalTF

K0 = 2.216112878300752
NOMINAL_DEN = [2.310842754465752, 0.63207147, 1.3863, 1.0]


def test_eval_simple():
    assert tf.evaluate(RationalTF([1], [1, 1]), 0.0) == pytest.approx(1.0)
    v = tf.evaluate(RationalTF([-1, 1], [1, 1]), 1j)
    assert v == pytest.approx((1j - 1) / (1j + 1))
    assert abs(v) == pytest.approx(1.0)


def test_eval_large_argument_matches_direct():
    g = RationalTF([1, 2, 3], [4, 5, 6, 7])
    s = 1e3j
    assert tf.evaluate(g, s) == pytest.approx(np.polyval([3, 2, 1], s) / np.polyval([7, 6, 5, 4], s), rel=1e-12)


def test_pole_hit():
    with pytest.raises(PoleHit):
        tf.evaluate(RationalTF([1], [1, 1]), -1.0)


def test_reduction_cancels_common_factor():
    g = RationalTF([-1, 1], [-1, 0, 1])  # (s-1)/((s-1)(s+1))
    assert g.den.degree == 1
    assert np.allclose(g.den.coeffs, [1, 1])


def test_parse_format_roundtrip():
    g = tf.parse_tf("num: 1, 2; den: 3, 4, 5")
    h = tf.parse_tf(tf.format_tf(g))
    assert np.array_equal(g.num.coeffs, h.num.coeffs) and np.array_equal(g.den.coeffs, h.den.coeffs)
    with pytest.raises(ValueError):
        tf.parse_tf("num: 1")


@pytest.mark.parametrize("g, linf, wp", [
    (RationalTF([1], [1, 1]), 1.0, 0.0),
    (RationalTF([-2, 1], [2, 1]), 1.0, 0.0),
    (RationalTF([-K0], NOMINAL_DEN), 1 / 0.404944017, 1.10125),
    (RationalTF([1], [12, 1, 2, 1]), 1 / 6.8257073223, 1.8295),
])
def test_linf_examples(g, linf, wp):
    r = tf.linf_norm(g)
    assert r.linf == pytest.approx(linf, rel=1e-6)
    assert r.omega_peak == pytest.approx(wp, abs=1e-3)


def test_linf_errors():
    with pytest.raises(AxisPole):
        tf.linf_norm(RationalTF([1], [1, 0, 1]))
    with pytest.raises(Improper):
        tf.linf_norm(RationalTF([0, 0, 1], [1, 1]))


def test_linf_biproper_limit():
    g = RationalTF([1, 10], [1, 1])  # |g| -> 10 at infinity
    assert tf.linf_norm(g).linf == pytest.approx(10.0)


def test_pip_examples():
    assert tf.pip(RationalTF([1], [2, -3, 1]))
    assert not tf.pip(RationalTF([-1, 1], [-2, -1, 1]))
    assert tf.pip(RationalTF([-K0], NOMINAL_DEN))
    with pytest.raises(AxisPole):
        tf.pip(RationalTF([1], [0, 1]))


def test_static_gain():
    assert tf.static_gain(RationalTF([1], [2, 1])) == pytest.approx(0.5)
    assert tf.static_gain(RationalTF([-1, 1], [1, 1])) == pytest.approx(-1.0)
    assert tf.static_gain(RationalTF([-K0], NOMINAL_DEN)) == pytest.approx(-K0 / NOMINAL_DEN[0])
    with pytest.raises(PoleAtOrigin):
        tf.static_gain(RationalTF([1], [0, 1]))


def test_feedback_charpoly():
    cp = tf.feedback_charpoly(RationalTF([1], [-1, 1]), RationalTF([-2]))
    assert np.allclose(cp.coeffs, [1, 1])
    zeta, k, p, q, ell, a, b = 0.4, 1.5, 2.0, 1.0, 3.0, 0.7, 0.9
    g = RationalTF([-k, zeta], [ell, q, p, 1])
    d = RationalTF([-a * b, b], [a, 1])
    cp = tf.feedback_charpoly(g, d)
    P = np.polynomial.polynomial
    quartic = P.polysub(P.polymul([ell, q, p, 1], [a, 1]), b * P.polymul([-k, zeta], [-a, 1]))
    assert np.allclose(cp.coeffs, quartic)


def test_cancellation_detected():
    g = RationalTF([-1, 1], [1, 2, 1])
    d = RationalTF([1], [-1, 1], reduce=False)
    with pytest.raises(CancellationDetected) as exc:
        tf.feedback_charpoly(g, d)
    assert exc.value.root == pytest.approx(1.0)


den_roots = st.lists(st.floats(0.1, 5.0), min_size=1, max_size=6).map(lambda r: [-x for x in r])


@settings(max_examples=60, deadline=None)
@given(den_roots, st.lists(st.one_of(st.just(0.0), st.floats(1e-3, 3), st.floats(-3, -1e-3)), min_size=1, max_size=6),
       st.integers(0, 2**32 - 1))
def test_linf_dominates_samples(roots, num, seed):
    num = num[: len(roots)]
    g = RationalTF(num if any(num) else [1.0], np.poly(roots)[::-1].real)
    w = np.random.default_rng(seed).uniform(0, 100, 10_000)
    assert tf.linf_norm(g).linf >= np.max(np.abs(g(1j * w))) * (1 - 1e-9)


@settings(max_examples=100, deadline=None)
@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=10).filter(lambda z: abs(z.imag) > 1e-3 or z.real > 0),
       st.floats(0.1, 10))
def test_allpass_flatness(dc, wc):
    try:
        ap = allpass_from_critical(dc, wc)
    except PhaseSingular:
        return
    mags = np.abs(ap.tf(1j * np.logspace(-3, 3, 200)))
    assert np.max(np.abs(mags - abs(ap.b))) <= 1e-10 * abs(ap.b)


def test_linf_keeps_small_leading_stationary_coefficient():
    # |den(0)| ~ 7e7 dwarfs the leading stationary coefficient; the peak near w = 28.7 must survive
    g = RationalTF(
        [-0.8999103, 2.61737815, -0.7326947, 1.64789525, -1.03623567],
        [7.25712616e07, -1.24451504e07, 6.20187172e05, 1.62262724e04, -1.97135496e03, 9.09188081, 1.0],
    )
    w = np.linspace(28.0, 29.5, 200_001)
    r = tf.linf_norm(g)
    assert r.linf == pytest.approx(np.max(np.abs(g(1j * w))), rel=1e-9)
    assert r.omega_peak == pytest.approx(28.725, abs=1e-3)
