import numpy as np
import pytest

from rdsnet.likelihood import build_workspace, log_likelihood_matrix
from rdsnet.param_est import ParamSpace, estimate_theta
from rdsnet.waiting_time import make_model
from tests.conftest import simulated_study, two_chain_study


def _exponential_mle_oracle(a, study):
    """Closed-form unit-free MLE: with constant hazard lambda the matrix
    log-likelihood is m log(lambda) + sum log(active) - lambda * exposure,
    maximized at lambda = (#non-seeds) / exposure."""
    a = np.asarray(a)
    n = study.n
    t = study.times
    u = study.degrees - a.sum(axis=1)
    exposure = 0.0
    for i in range(1, n):
        for j in range(n):
            n_j = study.coupons[j, i] * (a[j, i:].sum() + u[j])
            exposure += n_j * (t[i] - max(t[j], t[i - 1]))
    m = n - len(study.recruitment_graph.seeds)
    return m / exposure


@pytest.mark.parametrize("true_a", [False, True])
def test_exponential_closed_form_mle(true_a):
    sim = simulated_study(n=40, sim_seed=17, pop_n=120)
    s = sim.observed
    a = sim.true_subgraph if true_a else s.recruitment_adjacency()
    theta, logpost, report = estimate_theta(a, s, "exponential", (0.5,))
    oracle = _exponential_mle_oracle(a, s)
    assert theta[0] == pytest.approx(oracle, rel=1e-4)
    assert report.converged


def test_returned_point_is_local_max():
    sim = simulated_study(n=30, model=make_model("gamma", shape=0.7, scale=1.3),
                          sim_seed=19, pop_n=90)
    s = sim.observed
    theta, logpost, _ = estimate_theta(sim.true_subgraph, s, "gamma", (1.0, 1.0))
    space = ParamSpace("gamma")
    z_hat = space.to_unconstrained(theta)

    def value(z):
        th = space.to_constrained(z)
        model = make_model("gamma", shape=th[0], scale=th[1])
        ws = build_workspace(s, model)
        return log_likelihood_matrix(sim.true_subgraph, s, ws)

    for k in range(2):
        for sgn in (-1.0, 1.0):
            z = z_hat.copy()
            z[k] += sgn * 1e-3
            assert value(z) <= logpost + 1e-6


def test_transform_round_trip():
    for family, theta in [("exponential", [2.3]),
                          ("gamma", [0.5, 2.0]),
                          ("gamma_unit_mean", [1.7])]:
        space = ParamSpace(family)
        back = space.to_constrained(space.to_unconstrained(theta))
        np.testing.assert_allclose(back, theta, rtol=1e-12)
    space = ParamSpace("power_law", x_min_bound=0.8)
    back = space.to_constrained(space.to_unconstrained([2.2, 0.3]))
    np.testing.assert_allclose(back, [2.2, 0.3], rtol=1e-12)


def test_transform_rejects_out_of_space():
    with pytest.raises(ValueError):
        ParamSpace("gamma").to_unconstrained([-1.0, 1.0])
    space = ParamSpace("power_law", x_min_bound=0.5)
    with pytest.raises(ValueError):
        space.to_unconstrained([2.0, 0.7])  # x_min above the bound
    with pytest.raises(ValueError):
        space.to_unconstrained([0.9, 0.1])  # shape must exceed 1


def test_bad_start_raises():
    s = two_chain_study(degrees=(1, 1))
    # x_min above the smallest recruitment gap puts zero mass on the data
    with pytest.raises(ValueError):
        estimate_theta(s.recruitment_adjacency(), s, "power_law", (2.0, 1.2))
    with pytest.raises(ValueError):
        estimate_theta(s.recruitment_adjacency(), s, "gamma", (-1.0, 1.0))


def test_power_law_recovery():
    model = make_model("power_law", shape=2.0, x_min=0.5)
    sim = simulated_study(n=60, model=model, sim_seed=23, pop_n=150)
    s = sim.observed
    theta, _, _ = estimate_theta(sim.true_subgraph, s, "power_law", (1.5, 0.2))
    assert 1.5 < theta[0] < 3.0
    assert 0.3 < theta[1] < 0.7


def test_unit_mean_gamma_estimation():
    model = make_model("gamma_unit_mean", shape=1.5)
    sim = simulated_study(n=80, model=model, sim_seed=29, pop_n=200)
    theta, _, rep = estimate_theta(sim.true_subgraph, sim.observed,
                                   "gamma_unit_mean", (1.0,))
    assert rep.converged
    assert abs(theta[0] - 1.5) < 0.5


def test_consistency_trend():
    # mean |alpha_hat - alpha| shrinks as the sample grows
    alpha = 1.0
    model = make_model("gamma_unit_mean", shape=alpha)
    errs = {}
    for n, pop in ((50, 200), (400, 900)):
        vals = []
        for seed in range(6):
            sim = simulated_study(n=n, model=model, sim_seed=100 + seed,
                                  pop_n=pop, pop_p=min(1.0, 25 / pop))
            theta, _, _ = estimate_theta(sim.true_subgraph, sim.observed,
                                         "gamma_unit_mean", (1.0,))
            vals.append(abs(theta[0] - alpha))
        errs[n] = float(np.mean(vals))
    assert errs[400] < errs[50]
