import numpy as np
import pytest

from rirtool import models, rir_param as rp
from rirtool.errors import PreconditionError
from rirtool.rir_fixed import stabilizes
from rirtool.tf import RationalTF, static_gain


@pytest.fixture(scope="module")
def fam():
    return models.repressilator_family(models.RepressilatorParams.nominal())


@pytest.fixture(scope="module")
def result(fam):
    return rp.mu_star(fam)


def test_family_domain_must_contain_origin():
    with pytest.raises(ValueError):
        rp.ParamFamily(lambda e: RationalTF([1], [-1, 1]), (0.1, 1.0))


def test_sample_at_origin(fam):
    s = rp.evaluate_sample(fam, 0.0)
    assert s.rho_p == pytest.approx(0.4049, abs=5e-4)
    assert s.n_orhp == 2 and s.cond_a and s.cond_b and s.hyperbolic


def test_sample_outside_hyperbolic_window(fam):
    assert not rp.evaluate_sample(fam, -0.97).hyperbolic


def test_find_e_star_constant_rho():
    fam = rp.constant_family(RationalTF([2], [-1, 1]), (-1.0, 1.0))  # rho_p = 0.5 everywhere
    lo, hi = rp.find_e_star(rp.sample_family(fam, rp.default_e_grid(fam, 41)), fam)
    assert lo == pytest.approx(-0.5, abs=1e-8) and hi == pytest.approx(0.5, abs=1e-8)
    # without a family only the grid resolution is available
    samples = [rp.ParamSample(e, rho_p=0.5, hyperbolic=True) for e in np.linspace(-0.99, 0.99, 199)]
    lo, hi = rp.find_e_star(samples)
    assert -0.5 < lo <= -0.49 and 0.49 <= hi < 0.5
    fam = rp.constant_family(RationalTF([1], [-2, 1]), (-1.0, 1.0))  # rho_p = 2 everywhere
    lo, hi = rp.find_e_star(rp.sample_family(fam, rp.default_e_grid(fam, 41)), fam)
    assert (lo, hi) == (-1.0, 1.0)


def test_e_star_endpoints(fam, result):
    lo, hi = result.e_star
    assert lo == pytest.approx(-0.6027, abs=5e-4) and hi == pytest.approx(0.3218, abs=5e-4)
    for end, out in ((hi, hi + 1e-4), (lo, lo - 1e-4)):
        assert rp.evaluate_sample(fam, end - np.sign(end) * 1e-4).inside
        assert not rp.evaluate_sample(fam, out).inside
    assert rp.evaluate_sample(fam, hi).rho_p == pytest.approx(hi, abs=1e-4)


def test_mu_star_invariants(result, fam):
    assert result.exact
    assert result.mu_star == pytest.approx(0.3218, abs=5e-4)
    assert result.mu_star <= rp.evaluate_sample(fam, 0.0).rho_p
    for s in result.samples:
        if result.e_star[0] < s.e < result.e_star[1]:
            assert abs(s.e) < s.rho_p


def test_constant_family_odd_poles_is_lower_bound():
    fam = rp.constant_family(RationalTF([1], [-1, 1]), (-2.0, 2.0))
    r = rp.mu_star(fam, rp.default_e_grid(fam, 81))
    assert r.mu_star == pytest.approx(1.0)
    assert not r.exact and r.certificate is None


def test_fhn_family_exact():
    fp = models.FhnParams(c=1.0, tau=1.0, alpha=0.067, beta=0.8)
    fam = models.fhn_family(fp)
    r = rp.mu_star(fam)
    assert r.exact
    # second-order closed form for 1/(s^2 + b1 s + b0): peak at W = b0 - b1^2/2 when positive
    inner = [s for s in r.samples if r.e_star[0] <= s.e <= r.e_star[1]]
    for s in inner[:: max(1, len(inner) // 5)]:
        g = fam(s.e)
        b0, b1 = g.den.coeffs[0], g.den.coeffs[1]
        W = b0 - b1 * b1 / 2
        peak = 1 / abs(b0) if W <= 0 else 1 / np.sqrt(b1 * b1 * (b0 - b1 * b1 / 4))
        assert s.rho_p == pytest.approx(1 / peak, rel=1e-8)


def test_construct_delta_e_boundary_values(fam):
    adj = rp.construct_delta_e(fam, 0.3218, eps=0.05, xi_grid=(0.01,))
    assert adj.a == pytest.approx(2.253, abs=5e-3)
    assert static_gain(adj.tf) == pytest.approx(0.3218, abs=1e-10)
    assert adj.hinf == pytest.approx(0.3379, abs=5e-4)
    assert adj.gamma == pytest.approx(-0.9524, abs=5e-4)
    assert adj.stabilizing and stabilizes(fam(0.3218), adj.tf)


def test_construct_delta_e_negative_eps_does_not_stabilize(fam):
    adj = rp.construct_delta_e(fam, 0.3218, eps=-0.05, xi_grid=(0.01,), verify=False)
    assert not adj.stabilizing


def test_negated_eps_never_stabilizes(fam, result):
    lo, hi = result.e_star
    for e in np.linspace(lo, hi, 100)[1:-1]:
        adj = rp.construct_delta_e(fam, e, eps=-0.05, verify=False)
        assert not adj.stabilizing


def test_construct_delta_e_washout(fam):
    adj = rp.construct_delta_e(fam, 0.0, eps=0.05)
    assert adj.gamma == 0.0
    assert stabilizes(fam(0.0), adj.tf)
    assert adj.hinf == pytest.approx(rp.evaluate_sample(fam, 0.0).rho_p * 1.05, rel=1e-6)


def test_construct_rejects_outside_e_star(fam):
    with pytest.raises(PreconditionError):
        rp.construct_delta_e(fam, 0.4, eps=0.05)


def test_highpass_rejects_odd_pole_count():
    g = RationalTF([1], [-1, 1])
    with pytest.raises(PreconditionError):
        rp.highpass_adjust(RationalTF([-1.5]), -0.5, rp.XI_GRID, g)


def test_highpass_rejects_nonstabilizing_input(fam):
    g = fam(0.0)
    d = RationalTF([2.0], [1.0, 1.0])
    with pytest.raises(PreconditionError):
        rp.highpass_adjust(d, 1.9, rp.XI_GRID, g)


def test_highpass_gain_monotone_and_exact(fam):
    for e in (-0.5, -0.2, 0.0, 0.2, 0.3):
        adj = rp.construct_delta_e(fam, e, eps=0.05)
        assert abs(static_gain(adj.tf) - e) <= 1e-12
        w = np.logspace(-4, 3, 20_000)
        assert np.max(np.abs(adj.tf(1j * w))) <= abs(adj.b) * 1.05 * (1 + 1e-9)


def test_sample_bound_pair(fam, result):
    s0 = rp.evaluate_sample(fam, 0.0)
    assert rp.lemma2_bounds(s0) == (0.0, s0.rho_p)
    lb = rp.lemma2_bounds(rp.evaluate_sample(fam, 0.3218))
    assert lb[0] == pytest.approx(0.3218) and lb[1] == pytest.approx(0.3218, abs=1e-4)
    lb = rp.lemma2_bounds(rp.evaluate_sample(fam, -0.5))
    assert lb[1] > lb[0] == 0.5
