import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as si

from udncov import specfun
from udncov.channel import (AllLos, AllNlos, Buildings, FadingSpec, PathlossParams, Step,
                            ThreeGpp)
from udncov.coverage import (CoverageResult, Method, NetworkConfig, alzer_sum, ase,
                             coverage_alzer_upper, coverage_elevated, coverage_general,
                             coverage_los_closed, coverage_nlos_closed,
                             coverage_simplified_3gpp, expected_interference_strongest,
                             interference_term, nearest_interference, optimal_density, psi)
from udncov.laplace import AssociationPolicy

C, S = AssociationPolicy.CLOSEST, AssociationPolicy.STRONGEST
P_NLOS_C = 1 / (1 + math.pi / 4)
P_NLOS_S = 2 / math.pi


def net(lam=1e-3, theta=1.0, alpha=4.0, alpha_nlos=None, h=0.0, m=1, n_t=1, model=AllNlos(), policy=C):
    pl = PathlossParams(alpha, alpha if alpha_nlos is None else alpha_nlos, h)
    return NetworkConfig(lam, theta, pl, FadingSpec(m, n_t), model, policy)


# ---- general route ----

def test_rayleigh_baselines():
    r = coverage_general(net())
    assert r.method is Method.GENERAL_QUADRATURE
    assert r.value == pytest.approx(P_NLOS_C, abs=1e-6)
    assert r.value == pytest.approx(0.560100, abs=1e-6)
    assert coverage_general(net(policy=S)).value == pytest.approx(P_NLOS_S, abs=1e-6)
    assert r.err_estimate < 1e-6


@pytest.mark.parametrize("policy", [C, S])
def test_3gpp_low_density_close_to_nlos_at_1e6(policy):
    v = coverage_general(net(lam=1e-6, m=10, model=ThreeGpp(), policy=policy)).value
    assert abs(v - coverage_nlos_closed(1.0, 4, policy)) < 0.01


@pytest.mark.parametrize("model", [ThreeGpp(), Step(18.0), Buildings(0.01, 10.0)])
@pytest.mark.parametrize("policy", [C, S])
def test_density_limits(model, policy):
    low = coverage_general(net(lam=1e-6, m=10, model=model, policy=policy)).value
    high = coverage_general(net(lam=1e-1, m=10, model=model, policy=policy)).value
    assert abs(low - coverage_nlos_closed(1.0, 4, policy)) < 0.01
    assert abs(high - coverage_los_closed(1.0, 10, 4, policy)) < 0.01


def test_general_matches_closed_forms():
    for m in (1, 2, 5, 10):
        for theta in (0.3, 1.0, 4.0):
            for pol in (C, S):
                if pol is S and theta < 1:
                    continue  # the single-BS event is exclusive only for theta >= 1
                v = coverage_general(net(theta=theta, m=m, model=AllLos(), policy=pol)).value
                assert v == pytest.approx(coverage_los_closed(theta, m, 4, pol), abs=1e-5)
    for h in (5.0, 20.0):
        for lam in (1e-4, 3e-3):
            for pol in (C, S):
                v = coverage_general(net(lam=lam, h=h, policy=pol)).value
                assert v == pytest.approx(coverage_elevated(1.0, lam, h, 4.0, pol), abs=1e-5)


def test_result_invariants():
    with pytest.raises(ValueError):
        CoverageResult(1.5, Method.CLOSED_FORM)
    with pytest.raises(ValueError):
        net(lam=0.0)
    with pytest.raises(ValueError):
        net(theta=0.0)


# ---- Alzer bound ----

def test_alzer_sum_single_term_is_transform():
    assert alzer_sum(lambda s: math.exp(-s), 1, 0.7) == math.exp(-0.7)


@given(st.integers(min_value=2, max_value=30), st.floats(min_value=1e-3, max_value=50.0))
def test_alzer_sum_bounds_gamma_ccdf(n, z):
    # deterministic interference I = 1: L(s) = e^{-s}
    bound = alzer_sum(lambda s: math.exp(-s), n, z)
    # alternating binomial sum: rounding error up to ~2^n eps
    assert bound >= specfun.gamma_ccdf(n, z, rate=1.0) - 2.0**n * 1e-16


def test_alzer_equals_general_for_rayleigh():
    for pol in (C, S):
        cfg = net(lam=2e-4, h=10.0, policy=pol, model=ThreeGpp())
        assert coverage_alzer_upper(cfg).value == pytest.approx(coverage_general(cfg).value, abs=1e-9)


def test_alzer_tight_at_low_density():
    cfg = net(lam=1e-5, m=10, model=ThreeGpp())
    gap = coverage_alzer_upper(cfg).value - coverage_general(cfg).value
    assert 0 <= gap <= 0.02


@given(st.floats(min_value=1e-5, max_value=1e-2), st.sampled_from([ThreeGpp(), AllLos(), Step(25.0), Buildings(0.02, 10.0)]),
       st.integers(min_value=2, max_value=10), st.floats(min_value=1.0, max_value=10.0),
       st.floats(min_value=0.0, max_value=20.0), st.sampled_from([C, S]))
@settings(max_examples=20)
def test_alzer_is_upper_bound(lam, model, m, theta, h, pol):
    cfg = net(lam=lam, m=m, theta=theta, h=h, model=model, policy=pol, alpha=3.0, alpha_nlos=4.0)
    b = coverage_alzer_upper(cfg)
    g = coverage_general(cfg)
    assert b.value >= g.value - (b.err_estimate + g.err_estimate)


# ---- step model split form ----

@pytest.mark.parametrize("lam", [1e-5, 1e-3, 1e-1])
@pytest.mark.parametrize("policy", [C, S])
def test_simplified_agrees_with_general(lam, policy):
    cfg = net(lam=lam, m=10, model=Step(18.0), policy=policy)
    assert coverage_simplified_3gpp(cfg).value == pytest.approx(coverage_general(cfg).value, abs=1e-6)


def test_simplified_agrees_elevated_two_slope():
    cfg = net(lam=3e-4, m=4, n_t=2, model=Step(40.0), alpha=3.0, alpha_nlos=4.0, h=10.0, policy=S)
    assert coverage_simplified_3gpp(cfg).value == pytest.approx(coverage_general(cfg).value, abs=1e-6)


def test_simplified_limits():
    for pol in (C, S):
        v = coverage_simplified_3gpp(net(m=10, model=Step(1e-9), policy=pol)).value
        assert v == pytest.approx(coverage_nlos_closed(1.0, 4, pol), abs=1e-6)
    v = coverage_simplified_3gpp(net(m=10, model=Step(1e7), policy=S)).value
    assert v == pytest.approx(P_NLOS_S, abs=1e-6)


def test_simplified_close_to_3gpp_at_1e3_closest():
    step = coverage_simplified_3gpp(net(lam=1e-3, m=10, model=Step(18.0))).value
    full = coverage_general(net(lam=1e-3, m=10, model=ThreeGpp())).value
    assert abs(step - full) < 0.02


def test_simplified_needs_step():
    with pytest.raises(ValueError):
        coverage_simplified_3gpp(net(model=ThreeGpp()))


# ---- Nakagami closed forms ----

def test_los_closed_rayleigh():
    assert coverage_los_closed(1.0, 1, 4, C) == pytest.approx(0.560100, abs=1e-6)


def test_strongest_is_independent_of_m():
    ref = coverage_los_closed(1.0, 1, 4, S)
    assert ref == pytest.approx(2 / math.pi, rel=1e-14)
    for m in range(1, 11):
        assert coverage_los_closed(1.0, m, 4, S) == ref


def test_closest_m10_bracketed_and_matches_general():
    v = coverage_los_closed(1.0, 10, 4, C)
    assert P_NLOS_C < v < P_NLOS_S
    assert v == pytest.approx(coverage_general(net(m=10, model=AllLos())).value, abs=1e-5)


def test_psi_is_positive_and_matches_direct_definition():
    import mpmath as mp
    d = mp.mpf(2) / 4
    for k in range(1, 10):
        eta = mp.hyp2f1(10, -d, 1 - d, -1)
        head = mp.fsum(mp.rf(10, k - j) / mp.rf(1 - d, k - j) * mp.mpf(2) ** (-10 - k + j) for j in range(1, k + 1))
        ref = -mp.rf(-d, k) * (eta - head)
        assert psi(k, 1.0, 10, 4.0) == pytest.approx(float(ref), rel=1e-9)
        assert psi(k, 1.0, 10, 4.0) > 0


@pytest.mark.parametrize("theta", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("alpha", [3.0, 4.0])
def test_closest_increasing_in_m(theta, alpha):
    vals = [coverage_los_closed(theta, m, alpha, C) for m in range(1, 26)]
    limit = coverage_los_closed(theta, 1, alpha, S)
    for a, b in zip(vals, vals[1:]):
        if limit - a > 1e-12:
            assert b > a
        else:
            # converged to the limit; closed-form rounding noise is ~1e-13
            assert abs(b - limit) < 1e-12
    assert all(v < limit + 1e-12 for v in vals)


def test_closest_converges_to_strongest():
    assert abs(coverage_los_closed(1.0, 25, 4, C) - 2 / math.pi) < 0.01


# ---- elevated BSs ----

def test_elevated_values():
    assert coverage_elevated(1.0, 1e-3, 0.0, 4, C) == pytest.approx(0.560100, abs=1e-6)
    assert coverage_elevated(1.0, 1e-9, 10.0, 4, S) == pytest.approx(2 / math.pi, abs=1e-4)
    v = coverage_elevated(1.0, 1e-2, 20.0, 4, C)
    assert v == pytest.approx(P_NLOS_C * math.exp(-math.pi * 1e-2 * 400 * math.pi / 4), rel=1e-10)
    assert v == pytest.approx(2.9e-5, rel=0.02)


def test_elevated_strongest_against_direct_quadrature():
    lam, h, alpha = 1e-3, 10.0, 4.0

    def outer(r):
        s = r**alpha
        inner = si.quad(lambda t: s * t / (t**alpha + s), h, np.inf, epsabs=0, epsrel=1e-11, limit=200)[0]
        return math.exp(-2 * math.pi * lam * inner) * r
    ref = 2 * math.pi * lam * si.quad(outer, h, np.inf, epsabs=1e-13, epsrel=1e-10, limit=200)[0]
    assert coverage_elevated(1.0, lam, h, alpha, S) == pytest.approx(ref, rel=1e-7)


@pytest.mark.parametrize("policy", [C, S])
def test_elevated_decreasing_in_density(policy):
    lams = np.logspace(-5, -1, 13)
    vals = [coverage_elevated(1.0, lam, 20.0, 4, policy) for lam in lams]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert coverage_elevated(1.0, 1e-2, 20.0, 4, C) < 0.01


# ---- optimal density and ASE ----

def test_optimal_density_values():
    lam, amax = optimal_density(1.0, 10.0, 4.0)
    assert lam == pytest.approx(4 / (math.pi**2 * 100), rel=1e-12)
    assert lam == pytest.approx(4.05e-3, rel=0.01)
    assert amax == pytest.approx(0.84e-3, rel=0.02)
    assert optimal_density(1.0, 20.0, 4.0)[1] == pytest.approx(0.21e-3, rel=0.02)
    assert amax / optimal_density(1.0, 20.0, 4.0)[1] == pytest.approx(4.0, rel=1e-14)


def test_optimal_density_is_argmax_of_ase():
    lam, amax = optimal_density(2.0, 15.0, 3.5)
    grid = lam * np.exp(np.linspace(-0.5, 0.5, 101))
    vals = [ase(2.0, x, coverage_elevated(2.0, x, 15.0, 3.5, C)) for x in grid]
    assert max(vals) == pytest.approx(amax, rel=1e-5)
    assert vals[50] == pytest.approx(amax, rel=1e-12)


@given(st.floats(min_value=0.5, max_value=100.0), st.floats(min_value=0.01, max_value=100.0))
def test_ase_max_scales_as_inverse_square_height(h, theta):
    a1 = optimal_density(theta, h, 4.0)[1] * h * h
    a2 = optimal_density(theta, 1.0, 4.0)[1]
    assert a1 == pytest.approx(a2, rel=1e-12)


def test_optimal_density_degenerate():
    with pytest.raises(ValueError):
        optimal_density(1.0, 0.0, 4.0)


def test_ase_values():
    assert ase(1.0, 1e-3, 0.0) == 0.0
    assert ase(1.0, 2e-3, 0.3) == pytest.approx(6e-4, rel=1e-15)
    assert ase(1.0, 4.05e-3, math.exp(-1) / (1 + math.pi / 4)) == pytest.approx(0.84e-3, rel=0.01)
    with pytest.raises(ValueError):
        ase(1.0, 1e-3, 1.2)


# ---- MISO ----

def test_miso_rayleigh_improves_coverage():
    one = coverage_general(net()).value
    two = coverage_general(net(n_t=2)).value
    four = coverage_general(net(n_t=4)).value
    assert one < two < four < 1


# ---- expected interference ----

def _ith_nearest_oracle(i, lam, h, alpha):
    def f(r):
        pdf = 2 * (math.pi * lam) ** i * r ** (2 * i - 1) * math.exp(-math.pi * lam * r * r) / math.gamma(i)
        return (r * r + h * h) ** (-alpha / 2) * pdf
    return si.quad(f, 0, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0]


def test_nearest_term_against_distance_pdf():
    lam, h, alpha = 1e-3, 10.0, 4.0
    _, nearest = expected_interference_strongest(lam, h, alpha)
    z = 0.1 * math.pi
    assert nearest == pytest.approx(math.pi * lam / h**2 * math.exp(z) * specfun.exp_integral(2, z), rel=1e-12)
    assert nearest == pytest.approx(_ith_nearest_oracle(1, lam, h, alpha), rel=1e-6)


@pytest.mark.parametrize("i", [1, 2, 3])
def test_series_terms_against_distance_pdf(i):
    lam, h, alpha = 1e-3, 10.0, 4.0
    t = interference_term(i, lam, h, alpha)
    assert t > 0
    assert t == pytest.approx(_ith_nearest_oracle(i, lam, h, alpha), rel=1e-6)
    if i == 1:
        assert t == pytest.approx(nearest_interference(lam, h, alpha), rel=1e-6)


def test_series_partial_sums_converge_to_closed_form():
    lam, h, alpha = 1e-3, 10.0, 4.0
    full, _ = expected_interference_strongest(lam, h, alpha)
    assert full == pytest.approx(2 * math.pi * lam * h**-2 / 2, rel=1e-14)
    partial = [expected_interference_strongest(lam, h, alpha, n)[0] for n in (5, 20, 80)]
    assert partial[0] < partial[1] < partial[2] < full
    # terms decay like i^(-alpha/2): the remainder after n terms is O(n^(1-alpha/2))
    gaps = [full - p for p in partial]
    assert gaps[2] < gaps[1] / 3 < gaps[0] / 9


def test_interference_preconditions():
    with pytest.raises(ValueError):
        expected_interference_strongest(1e-3, 0.0, 4.0)
    with pytest.raises(ValueError):
        expected_interference_strongest(1e-3, 10.0, 2.0)
