import numpy as np
import pytest

from rdsnet.estimator import NetworkReconstructor
from rdsnet.graph import check_compatible
from tests.conftest import simulated_study, two_chain_study


def test_get_set_params_round_trip():
    est = NetworkReconstructor(family="gamma", anneal_iters=100)
    params = est.get_params()
    assert params["family"] == "gamma"
    est.set_params(anneal_iters=200, rng_seed=4)
    assert est.anneal_iters == 200
    assert est.rng_seed == 4


def test_fit_predict_score():
    sim = simulated_study(n=15, sim_seed=41)
    est = NetworkReconstructor(family="exponential", anneal_iters=1000,
                               outer_iters=1, rng_seed=0)
    fitted = est.fit(sim.observed)
    assert fitted is est
    a = est.predict()
    assert check_compatible(a, sim.observed).is_compatible
    assert np.isfinite(est.score(sim.observed))
    assert est.theta_.shape == (1,)
    assert est.n_subjects_ == 15


def test_fit_is_deterministic_given_seed():
    sim = simulated_study(n=15, sim_seed=43)
    a = NetworkReconstructor(anneal_iters=1000, rng_seed=7).fit(sim.observed)
    b = NetworkReconstructor(anneal_iters=1000, rng_seed=7).fit(sim.observed)
    np.testing.assert_array_equal(a.adjacency_, b.adjacency_)
    np.testing.assert_array_equal(a.theta_, b.theta_)


def test_single_point_space():
    s = two_chain_study(degrees=(1, 1))
    est = NetworkReconstructor(anneal_iters=50, rng_seed=1).fit(s)
    np.testing.assert_array_equal(est.adjacency_, s.recruitment_adjacency())


def test_unfitted_raises():
    est = NetworkReconstructor()
    with pytest.raises(RuntimeError):
        est.predict()


def test_bad_inputs():
    sim = simulated_study(n=10, sim_seed=45)
    with pytest.raises(TypeError):
        NetworkReconstructor().fit(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        NetworkReconstructor(family="weibull").fit(sim.observed)


def test_explicit_schedule_used():
    sim = simulated_study(n=12, sim_seed=47)
    est = NetworkReconstructor(gamma0=5.0, cool_rate=0.99, gamma_floor=1e-3,
                               anneal_iters=500, rng_seed=2)
    est.fit(sim.observed)
    assert hasattr(est, "adjacency_")
