import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hdphmm_lt import transitions as tr
from hdphmm_lt.errors import ParameterError
from hdphmm_lt.rand import RandomStream
from hdphmm_lt.transitions import HdpHyper, TransitionState


def make_state(J=3, **kw):
    s = TransitionState.empty(J)
    for k, v in kw.items():
        setattr(s, k, np.asarray(v) if isinstance(v, list) else v)
    return s


def test_hyper_validation():
    with pytest.raises(ParameterError):
        HdpHyper(alpha=0.0)
    with pytest.raises(ParameterError):
        HdpHyper(kappa=-1.0)
    with pytest.raises(ParameterError):
        HdpHyper(J=1)


# -- u and Q ------------------------------------------------------------------------


def test_u_gamma_mean():
    s = make_state(J=2, N=np.array([[5, 0], [0, 0]]), pi=np.array([[2.0, 1.0], [1.0, 1.0]]))
    phi = np.array([[1.0, 0.0], [0.0, 1.0]])  # T_0 = 2
    shape, rate = tr.u_posterior_params(s, phi)
    assert shape[0] == 5 and rate[0] == 2.0
    rng = RandomStream(0)
    draws = [tr.sample_u(s, phi, rng)[0] for _ in range(20_000)]
    assert abs(np.mean(draws) - 2.5) < 0.03


def test_u_is_zero_for_unvisited_state():
    s = make_state(J=3, N=np.array([[1, 1, 0], [0, 0, 0], [0, 2, 0]]))
    u = tr.sample_u(s, np.ones((3, 3)), RandomStream(1))
    assert u[1] == 0.0 and u[0] > 0 and u[2] > 0


def test_row_total_with_constant_kernel():
    pi = np.array([[2.0, 1.0, 1.0]] * 3)
    assert tr.row_totals(pi, np.ones((3, 3)))[0] == 4.0


def test_q_zero_where_phi_is_one():
    s = make_state(J=2, u=np.array([5.0, 5.0]), pi=np.full((2, 2), 3.0))
    Q = tr.sample_q(s, np.ones((2, 2)), RandomStream(0))
    assert not Q.any()


def test_q_poisson_mean():
    s = make_state(J=2, u=np.array([2.0, 0.0]), pi=np.array([[1.0, 1.0], [1.0, 1.0]]))
    phi = np.array([[1.0, 0.5], [0.5, 1.0]])
    rng = RandomStream(2)
    q = [tr.sample_q(s, phi, rng)[0, 1] for _ in range(100_000)]
    assert abs(np.mean(q) - 1.0) < 0.02


def test_poisson_thinning_marginals():
    rng = RandomStream(3)
    rate, keep = 2.5, 0.3
    attempts = rng.poisson(rate, size=200_000)
    ok = rng.binomial(attempts, keep)
    fail = attempts - ok
    for x, mean in ((ok, rate * keep), (fail, rate * (1 - keep))):
        assert abs(x.mean() - mean) < 4 * math.sqrt(mean / x.size)
        assert abs(x.var() - mean) < 0.03
    assert abs(np.corrcoef(ok, fail)[0, 1]) < 0.01


# -- pi and pi0 ---------------------------------------------------------------------------


def test_pi_conditional_plug_in():
    s = make_state(J=2, beta=np.array([0.5, 0.5]), N=np.array([[0, 3], [0, 0]]),
                   Q=np.array([[0, 2], [0, 0]]), u=np.array([4.0, 0.0]))
    shape, rate = tr.pi_posterior_params(s, HdpHyper(alpha=1.0, J=2))
    assert shape[0, 1] == 5.5 and rate[0, 1] == 5.0
    assert math.isclose(shape[0, 1] / rate[0, 1], 1.1)


def test_pi_conditional_without_data_is_prior():
    s = make_state(J=3, beta=np.array([0.2, 0.3, 0.5]))
    shape, rate = tr.pi_posterior_params(s, HdpHyper(alpha=2.0, J=3))
    assert np.allclose(shape, 2.0 * s.beta[None, :]) and np.all(rate == 1.0)


def test_pi_sticky_shape():
    s = make_state(J=4, beta=np.full(4, 0.25))
    shape, _ = tr.pi_posterior_params(s, HdpHyper(alpha=1.0, kappa=2.0, J=4))
    assert shape[1, 1] == 2.25 and shape[1, 0] == 0.25


def test_pi0_shape_counts_initial_states():
    s = make_state(J=3, N0=np.array([0, 1, 0]))
    shape, rate = tr.pi0_posterior_params(s, HdpHyper(alpha=3.0, J=3))
    assert np.allclose(shape, [1.0, 2.0, 1.0])
    assert np.all(rate == 1.0)  # holding time of the initial row is zero until sampled
    tr.sample_pi0(s, HdpHyper(alpha=3.0, J=3), RandomStream(0))
    assert abs((s.pi0 / s.pi0.sum()).sum() - 1.0) < 1e-12


def test_pi_entries_are_conditionally_independent():
    # permuting other entries' inputs leaves an entry's conditional unchanged
    rng = RandomStream(4)
    s = make_state(J=3, beta=np.array([0.2, 0.3, 0.5]), N=rng.poisson(2, (3, 3)),
                   Q=rng.poisson(1, (3, 3)), u=np.array([1.0, 2.0, 3.0]))
    h = HdpHyper(alpha=1.5, J=3)
    shape, rate = tr.pi_posterior_params(s, h)
    s2 = make_state(J=3, beta=s.beta, N=s.N.copy(), Q=s.Q.copy(), u=s.u)
    s2.N[1:] = s2.N[1:][::-1]
    s2.Q[:, 2] = 7
    shape2, rate2 = tr.pi_posterior_params(s2, h)
    assert shape2[0, 0] == shape[0, 0] and shape2[0, 1] == shape[0, 1] and rate2[0, 0] == rate[0, 0]


# -- tables, beta, alpha, gamma ---------------------------------------------------------------


def test_table_counts_trivial_cases():
    s = make_state(J=2, N=np.array([[0, 1], [0, 0]]))
    tr.sample_m(s, HdpHyper(alpha=1.0, J=2), RandomStream(0))
    assert s.M.tolist() == [[0, 1], [0, 0]]


def test_table_count_two_customers_unit_mass():
    s = make_state(J=2, beta=np.array([0.5, 0.5]), N=np.array([[0, 2], [0, 0]]))
    h = HdpHyper(alpha=2.0, J=2)
    rng = RandomStream(5)
    ones = sum(tr.sample_m(s, h, rng)[0, 1] == 1 for _ in range(20_000))
    assert abs(ones / 20_000 - 0.5) < 0.01


def test_table_counts_include_failed_jumps():
    s = make_state(J=2, beta=np.array([0.5, 0.5]), N=np.zeros((2, 2), int),
                   Q=np.array([[0, 3], [0, 0]]))
    tr.sample_m(s, HdpHyper(alpha=1.0, J=2), RandomStream(0))
    assert s.M[0, 1] >= 1


def test_beta_conditional_plug_in():
    s = make_state(J=3, M=np.array([[1, 1, 0], [2, 0, 0], [0, 0, 0]]))
    assert np.allclose(tr.beta_posterior_params(s, HdpHyper(gamma_conc=3.0, J=3)), [4, 2, 1])
    s0 = make_state(J=4)
    assert np.allclose(tr.beta_posterior_params(s0, HdpHyper(gamma_conc=4.0, J=4)), 1.0)
    tr.sample_beta(s, HdpHyper(gamma_conc=3.0, J=3), RandomStream(0))
    assert abs(s.beta.sum() - 1.0) < 1e-12


def test_alpha_conditional_plug_in():
    u = np.array([math.e - 1.0, math.e - 1.0, 0.0])  # sum log(1 + u) = 2
    s = make_state(J=3, M=np.array([[4, 0, 0], [0, 6, 0], [0, 0, 0]]), u=u)
    shape, rate = tr.alpha_posterior_params(s, HdpHyper(a_alpha=0.1, b_alpha=0.1, J=3))
    assert math.isclose(shape, 10.1) and math.isclose(rate, 2.1)


def test_alpha_without_data_is_prior():
    s = make_state(J=3)
    assert tr.alpha_posterior_params(s, HdpHyper(a_alpha=0.7, b_alpha=0.2, J=3)) == (0.7, 0.2)


def test_alpha_draw_moments():
    s = make_state(J=3, M=np.array([[4, 0, 0], [0, 6, 0], [0, 0, 0]]),
                   u=np.array([math.e - 1.0, math.e - 1.0, 0.0]))
    h = HdpHyper(J=3)
    rng = RandomStream(6)
    draws = [tr.sample_alpha(s, h, rng) for _ in range(20_000)]
    assert abs(np.mean(draws) / (10.1 / 2.1) - 1.0) < 0.01


def test_r_w_edge_cases():
    s = make_state(J=3, M=np.array([[1, 0, 0], [0, 0, 0], [0, 0, 0]]))
    r, w = tr.sample_r_w(s, HdpHyper(J=3), RandomStream(0))
    assert r.tolist() == [1, 0, 0] and 0 < w < 1
    s0 = make_state(J=3)
    r, w = tr.sample_r_w(s0, HdpHyper(J=3), RandomStream(0))
    assert w is None and not r.any()


def test_w_uniform_when_gamma_and_tables_are_one():
    s = make_state(J=2, M=np.array([[1, 0], [0, 0]]))
    h = HdpHyper(gamma_conc=1.0, J=2)
    rng = RandomStream(7)
    w = [tr.sample_r_w(s, h, rng)[1] for _ in range(10_000)]
    assert stats.kstest(w, "uniform").pvalue > 0.01


def test_gamma_conditional_plug_in():
    s = make_state(J=4, r=np.array([2, 1, 1, 0]), w=math.exp(-1.0))
    shape, rate = tr.gamma_posterior_params(s, HdpHyper(a_gamma=0.1, b_gamma=0.1, J=4))
    assert math.isclose(shape, 4.1) and math.isclose(rate, 1.1)
    assert tr.gamma_posterior_params(make_state(J=4), HdpHyper(J=4)) == (0.1, 0.1)


# -- sticky ------------------------------------------------------------------------------------


def test_sticky_split_partitions_diagonal_tables():
    rng = RandomStream(8)
    s = make_state(J=3, beta=np.array([0.3, 0.3, 0.4]), N=np.diag([9, 5, 7]))
    h = HdpHyper(alpha=1.0, kappa=3.0, sticky=True, J=3)
    for _ in range(50):
        tr.sample_m(s, h, rng)
        assert np.all(s.sticky_m <= np.diag(s.M))
        assert np.all(tr.regular_column_counts(s) >= 0)


def test_zero_kappa_makes_every_table_regular():
    s = make_state(J=2, N=np.diag([4, 4]))
    tr.sample_m(s, HdpHyper(alpha=1.0, kappa=0.0, J=2), RandomStream(0))
    assert not s.sticky_m.any()


def test_rho_without_self_transitions_is_uniform():
    s = make_state(J=2)
    h = HdpHyper(alpha=1.0, kappa=1.0, sticky=True, J=2)
    rng = RandomStream(9)
    rhos = []
    for _ in range(5000):
        h.alpha, h.kappa = 1.0, 1.0
        tr.sticky_rho_update(s, h, rng)
        rhos.append(h.rho)
    assert stats.kstest(rhos, "uniform").pvalue > 0.01


def test_rho_posterior_with_zero_initial_holding_time_is_beta():
    s = make_state(J=2, M=np.diag([3, 2]), sticky_m=np.array([2, 1]))
    h = HdpHyper(alpha=1.0, kappa=1.0, sticky=True, J=2)
    rng = RandomStream(10)
    rhos = []
    for _ in range(5000):
        tr.sticky_rho_update(s, h, rng)
        rhos.append(h.rho)
    # three sticky tables, two regular
    assert stats.kstest(rhos, stats.beta(4, 3).cdf).pvalue > 0.01


# -- properties ----------------------------------------------------------------------------------


@given(st.integers(2, 6), st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_row_total_bounds(J, seed):
    rng = RandomStream(seed)
    pi = rng.gamma(0.5, 1.0, size=(J, J)) + 1e-9
    phi = np.exp(-rng.uniform(0, 3, size=(J, J)))
    phi = np.minimum(phi, phi.T)
    np.fill_diagonal(phi, 1.0)
    T = tr.row_totals(pi, phi)
    assert np.all(pi[:, 0] * phi[:, 0] <= T + 1e-12)
    assert np.all(T <= pi.sum(axis=1) + 1e-12)


@given(st.integers(2, 5), st.integers(0, 2**31))
@settings(max_examples=30, deadline=None)
def test_table_count_invariant(J, seed):
    rng = RandomStream(seed)
    s = make_state(J=J, N=rng.poisson(3, (J, J)), Q=rng.poisson(1, (J, J)))
    tr.sample_m(s, HdpHyper(alpha=1.3, kappa=0.5, J=J), rng)
    assert np.all(s.M <= s.N + s.Q)
    assert np.all((s.M > 0) == (s.N + s.Q > 0))
