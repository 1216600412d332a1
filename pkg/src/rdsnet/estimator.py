"""Scikit-learn-style estimator facade over the reconstruction pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .annealer import CoolingSchedule
from .graph import ObservedStudy
from .likelihood import build_workspace, log_posterior, make_prior
from .pipeline import RenderConfig, render
from .waiting_time import FAMILIES, make_model

__all__ = ["NetworkReconstructor"]


class NetworkReconstructor(BaseEstimator):
    """Reconstruct the hidden recruitment-induced subgraph from an RDS study.

    fit(study) alternates simulated-annealing search over compatible
    adjacency matrices with derivative-free refits of the waiting-time
    parameters; afterwards ``adjacency_`` holds the estimated matrix and
    ``theta_`` the estimated parameters.

    Parameters mirror :class:`rdsnet.pipeline.RenderConfig`.
    """

    def __init__(self, family="exponential", theta0=None, outer_iters=3,
                 anneal_iters=20000, gamma0=None, cool_rate=0.999,
                 gamma_floor=1e-4, prior="uniform", chains=1,
                 cold_start=False, rng_seed=None):
        self.family = family
        self.theta0 = theta0
        self.outer_iters = outer_iters
        self.anneal_iters = anneal_iters
        self.gamma0 = gamma0
        self.cool_rate = cool_rate
        self.gamma_floor = gamma_floor
        self.prior = prior
        self.chains = chains
        self.cold_start = cold_start
        self.rng_seed = rng_seed

    def _validate(self, study):
        if not isinstance(study, ObservedStudy):
            raise TypeError("expected an ObservedStudy")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        make_prior(self.prior)

    def _config(self):
        theta0 = self.theta0
        if theta0 is None:
            theta0 = {"exponential": (1.0,), "gamma": (1.0, 1.0),
                      "gamma_unit_mean": (1.0,),
                      "power_law": (2.0, 0.1)}[self.family]
        schedule = None
        if self.gamma0 is not None:
            schedule = CoolingSchedule(gamma0=self.gamma0, rate=self.cool_rate,
                                       floor=self.gamma_floor)
        return RenderConfig(family=self.family, theta0=tuple(theta0),
                            iota_max=self.outer_iters,
                            anneal_iters=self.anneal_iters,
                            schedule=schedule, prior=self.prior,
                            chains=self.chains, cold_start=self.cold_start)

    def fit(self, study, y=None):
        self._validate(study)
        rng = np.random.default_rng(self.rng_seed)
        result = render(study, self._config(), rng=rng)
        self.adjacency_ = result.a_hat
        self.theta_ = result.theta_hat
        self.logpost_ = result.logpost
        self.final_adjacency_ = result.final_a
        self.trace_ = result.trace
        self.n_subjects_ = study.n
        return self

    def predict(self, study=None):
        """Estimated adjacency matrix of the recruitment-induced subgraph."""
        self._check_fitted()
        return self.adjacency_

    def score(self, study, y=None):
        """Log-posterior of the fitted (matrix, theta) under the study."""
        self._check_fitted()
        model = make_model(self.family, **dict(
            zip(FAMILIES[self.family].theta_names, self.theta_)))
        ws = build_workspace(study, model)
        return log_posterior(self.adjacency_, study, ws, make_prior(self.prior))

    def _check_fitted(self):
        if not hasattr(self, "adjacency_"):
            raise RuntimeError("estimator is not fitted; call fit first")
