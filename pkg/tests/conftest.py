import numpy as np
import pytest

from rdsnet.graph import ObservedStudy, RecruitmentGraph, derive_coupon_matrix
from rdsnet.simulate import SimConfig, generate_population, simulate
from rdsnet.waiting_time import make_model


def chain_study(n, degrees=None, times=None, coupons_per_subject=3):
    """Study whose recruitment graph is the chain 1 -> 2 -> ... -> n."""
    g = RecruitmentGraph(
        n=n,
        directed_edges=tuple((i, i + 1) for i in range(1, n)),
        seeds=frozenset({1}),
    )
    if degrees is None:
        degrees = [2] * n
    if times is None:
        times = np.arange(n, dtype=float)
    coup = derive_coupon_matrix(g, coupons_per_subject)
    return ObservedStudy(recruitment_graph=g, degrees=np.array(degrees),
                         times=np.asarray(times, dtype=float), coupons=coup)


def two_chain_study(degrees=(1, 1)):
    """The n=2 hand-computed case: seed at t=0 recruits subject 2 at t=1."""
    g = RecruitmentGraph(n=2, directed_edges=((1, 2),), seeds=frozenset({1}))
    coup = np.array([[0, 1], [0, 0]], dtype=np.int8)
    return ObservedStudy(recruitment_graph=g, degrees=np.array(degrees),
                         times=np.array([0.0, 1.0]), coupons=coup)


def simulated_study(n=20, model=None, pop_n=60, pop_p=0.25, sim_seed=0,
                    coupons=3, n_seeds=1):
    """A small realistic study straight out of the simulator."""
    model = model or make_model("exponential", rate=1.0)
    g = generate_population("erdos_renyi", {"n": pop_n, "p": pop_p},
                            rng_seed=sim_seed)
    seeds = tuple((v, 0.0) for v in range(n_seeds))
    config = SimConfig(population_graph=g, seed_vertices=seeds,
                       coupons_per_subject=coupons, target_sample_size=n,
                       model=model, rng_seed=sim_seed)
    return simulate(config)


def random_compatible(study, rng, n_moves=30):
    """Random compatible matrix reached by valid toggles from A_R."""
    from rdsnet.annealer import AnnealState, StuckError, propose
    from rdsnet.likelihood import build_workspace, make_prior

    ws = build_workspace(study, make_model("exponential", rate=1.0))
    state = AnnealState(study.recruitment_adjacency(), study, ws,
                        make_prior("uniform"))
    for _ in range(n_moves):
        try:
            (x, y), add = propose(state, rng)
        except StuckError:
            break
        state.toggle(x, y, add)
    return state.a.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
