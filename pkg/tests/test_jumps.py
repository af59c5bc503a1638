import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

import oracles
from xcir.errors import InadmissibleJumpError, LimitNotResolvedError, NonAffineModelError
from xcir.jumps import (AtomicMeasure, DensityMeasure, ExponentPair, LKParams, check_admissibility,
                        check_full_convex_span, check_lk_admissibility, drop_to_gamma_lk,
                        exponents, sample_jump, support_infimum, transport_map)
from xcir.kernel import cir_exponents, transition_params
from xcir.model import (CIRParams, DropToGamma, GenericTransport, NoJump, TimeChange,
                        linear_transport)

P = CIRParams(0.1, 3.0, 0.1, 2.0)
DTG = DropToGamma(3.0, 1.0, 1.0)
DTG2 = DropToGamma(3.5, 1.5, 2.0)
TC = TimeChange(15.0)
U_POINTS = [-2.0, -0.5, 1j, 2j, -1 + 1j, -0.1 + 5j]


@pytest.mark.parametrize("u", U_POINTS)
@pytest.mark.parametrize("model", [DTG, DTG2, DropToGamma(2.0, 0.0, 0.5)])
def test_drop_to_gamma_against_density(model, u):
    pair = exponents(model)
    for x in (0.0, 0.7, 3.0):
        # E[exp(u (x + xi))] is the transform of the Gamma post-jump value
        ref = oracles.gamma_cf_quad(model.alpha + model.beta * x, model.lam, u)
        got = np.exp(pair(u, x) + u * x)
        assert abs(got - ref) < 1e-10


@pytest.mark.parametrize("u", U_POINTS)
def test_time_change_matches_cir_exponents(u):
    pair = exponents(TC, P)
    phi, psi = cir_exponents(P, TC.delta, u)
    assert abs(pair.gamma0(u) - phi) < 1e-14
    assert abs(pair.gamma1(u) - (psi - u)) < 1e-14
    phi_o, psi_o = oracles.riccati_exponents(P.kappa, P.theta, P.sigma, TC.delta, u)
    assert abs(pair.gamma0(u) - phi_o) < 1e-9
    assert abs(pair.gamma1(u) - (psi_o - u)) < 1e-9


def test_time_change_degenerate_cases():
    z = exponents(TimeChange(0.0), P)
    assert z.gamma0(-1 + 1j) == 0 and z.gamma1(-1 + 1j) == 0
    flat = CIRParams(0.5, 2.0, 0.0)
    pair = exponents(TimeChange(2.0), flat)
    e = math.exp(-1.0)
    assert pair.gamma0(-1.0) == pytest.approx(-2.0 * (1 - e))
    assert pair.gamma1(-1.0) == pytest.approx(-(e - 1.0))


def test_time_change_needs_params():
    with pytest.raises(ValueError):
        exponents(TC)


def test_no_jump_exponents_vanish():
    pair = exponents(NoJump())
    assert pair.gamma0(-1 + 2j) == 0 and pair.gamma1(-1 + 2j) == 0


def test_generic_without_exponents_is_non_affine():
    model = GenericTransport(lambda x, z: z)
    with pytest.raises(NonAffineModelError, match="no affine representation available"):
        exponents(model)


def test_drop_to_gamma_sampling_ks():
    rng = np.random.default_rng(4)
    x = np.full(20_000, 1.7)
    post = x + sample_jump(DTG2, P, x, rng)
    ref = stats.gamma(DTG2.alpha + DTG2.beta * 1.7, scale=1 / DTG2.lam)
    assert stats.kstest(post, ref.cdf).pvalue > 0.01


def test_time_change_sampling_ks():
    rng = np.random.default_rng(8)
    x = np.full(20_000, 2.5)
    post = x + sample_jump(TC, P, x, rng)
    c, nu, lam = transition_params(P, 2.5, TC.delta)
    assert stats.kstest(post / c, stats.ncx2(nu, lam).cdf).pvalue > 0.01


def test_generic_sampling_and_inadmissible():
    rng = np.random.default_rng(0)
    shift_up = linear_transport(1.0, 0.0)
    np.testing.assert_allclose(sample_jump(shift_up, P, np.array([0.0, 2.0]), rng), [1.0, 1.0])
    bad = GenericTransport(lambda x, z: -x - 1.0)
    with pytest.raises(InadmissibleJumpError, match="inadmissible jump sample"):
        sample_jump(bad, P, np.array([1.0]), rng)
    scalar_only = GenericTransport(lambda x, z: float(-0.5 * x * z))
    out = sample_jump(scalar_only, P, np.array([1.0, 2.0]), rng)
    assert out.shape == (2,) and np.all(out <= 0)


@pytest.mark.parametrize("model", [DTG, TC, NoJump()])
def test_transport_map_is_admissible_and_monotone(model):
    f = transport_map(model, P)
    z = np.linspace(0.001, 0.999, 50)
    for x in (0.0, 0.5, 5.0):
        post = x + f(x, z)
        assert np.all(post >= -1e-12)
        assert np.all(np.diff(post) >= -1e-12)


def test_transport_map_matches_sampler_law():
    rng = np.random.default_rng(13)
    z = rng.random(20_000)
    a = 1.2 + transport_map(DTG, P)(1.2, z)
    b = 1.2 + sample_jump(DTG, P, np.full(20_000, 1.2), np.random.default_rng(14))
    assert stats.ks_2samp(a, b).pvalue > 0.01


@pytest.mark.parametrize("model", [DTG, DTG2, TC, NoJump()])
def test_builtin_models_admissible(model):
    rep = check_admissibility(exponents(model, P))
    assert rep.passed, rep.reasons
    assert abs(rep.limit_gamma0) <= 1e-4
    expected_g1 = 0.0 if isinstance(model, NoJump) else 1.0
    assert abs(rep.limit_gamma1 - expected_g1) <= 1e-4


def test_adversarial_linear_model_rejected():
    rep = check_admissibility(exponents(linear_transport(0.0, -2.0)))
    assert not rep.passed
    assert rep.limit_gamma1 == pytest.approx(2.0, abs=1e-6)


def test_positive_drift_in_gamma0_rejected():
    pair = ExponentPair(lambda u: -0.5 * complex(u), lambda u: 0j)
    assert not check_admissibility(pair).passed


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_analytic_exponent_raises():
    pair = ExponentPair(lambda u: complex(np.log(complex(u) + 1.0)), lambda u: 0j)
    with pytest.raises(ValueError, match="not analytic"):
        check_admissibility(pair)


@pytest.mark.parametrize("model", [DTG, TC])
@pytest.mark.parametrize("x", [0.5, 1.0, 5.0])
def test_support_infimum(model, x):
    est = support_infimum(exponents(model, P), x)
    assert est.value == pytest.approx(-x, abs=1e-3)


def test_support_infimum_unresolved_at_small_range():
    with pytest.raises(LimitNotResolvedError):
        support_infimum(exponents(TC, P), 1.0, y_max=1e3, n_points=4)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(0.0, 20.0), k=st.integers(8, 10))
def test_support_infimum_stable_in_range(x, k):
    """Estimates at successively larger ranges agree: the extrapolation has converged."""
    pair = exponents(DTG2)
    a = support_infimum(pair, x, y_max=10.0**k, n_points=k + 1)
    b = support_infimum(pair, x, y_max=10.0 ** (k + 1), n_points=k + 2)
    assert abs(a.value - b.value) <= 1e-5 * max(1.0, x)
    assert a.value == pytest.approx(-x, abs=1e-3 * max(1.0, x))


LK_POINTS = [complex(-r * math.cos(a), r * math.sin(a))
             for r in (0.05, 0.5, 2.0, 8.0) for a in np.linspace(-1.5, 1.5, 5)]


@pytest.mark.parametrize("model", [DTG, DTG2])
def test_levy_khintchine_matches_closed_form(model):
    lk = drop_to_gamma_lk(model)
    pair = exponents(model)
    assert len(LK_POINTS) == 20
    for u in LK_POINTS:
        assert abs(lk.gamma0(u) - pair.gamma0(u)) <= 1e-10 * max(1.0, abs(pair.gamma0(u)))
        assert abs(lk.gamma1(u) - pair.gamma1(u)) <= 1e-10 * max(1.0, abs(pair.gamma1(u)))
    assert check_lk_admissibility(lk).passed


def test_lk_rejections():
    neg = DensityMeasure(lambda s: 1.0, -1.0, 0.0, "uniform(-1,0)")
    rep = check_lk_admissibility(LKParams(0.0, 0.0, neg, None))
    assert not rep.passed and "not supported on R+" in rep.reasons[0]
    assert not check_lk_admissibility(LKParams(0.0, -1.5)).passed
    assert not check_lk_admissibility(LKParams(-0.1, 0.0)).passed
    assert not check_lk_admissibility(LKParams(0.0, 0.0, AtomicMeasure((-1.0,), (0.5,)))).passed


def test_atomic_measure_exponent():
    nu = AtomicMeasure((2.0, 0.5), (1.0, 3.0))
    u = -0.3 + 0.7j
    expected = 2.0 * (np.exp(u) - 1) + 0.5 * (np.exp(3 * u) - 1)
    assert abs(nu.exponent(u) - expected) < 1e-15


def test_full_convex_span_heuristic():
    xs = np.linspace(0.0, 10.0, 21)
    zs = np.linspace(0.0, 0.999, 21)
    rep = check_full_convex_span(DTG, P, xs, zs)
    assert rep.inf_ok and rep.sup_ok and rep.passed
    lifted = check_full_convex_span(linear_transport(1.0, 0.0), P, xs, zs)
    assert not lifted.inf_ok
    assert lifted.min_g == pytest.approx(1.0)
    assert "heuristic" in rep.to_dict()["note"]
