"""Derivative-free maximization of the log-posterior over theta.

Given a fixed adjacency matrix, the objective rebuilds the hazard/survival
workspace per evaluation and is maximized by Nelder-Mead in an
unconstrained transform of the parameter space (componentwise log for
positive parameters; the power-law lower bound maps through a logistic
onto (0, min observed recruitment gap] so the likelihood stays finite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .graph import ObservedStudy
from .likelihood import build_workspace, log_likelihood_matrix
from .waiting_time import FAMILIES, make_model

__all__ = ["ParamSpace", "EstimationReport", "estimate_theta"]

_LOGIT_CLIP = 30.0


def _min_recruitment_gap(study: ObservedStudy):
    t = study.times
    gaps = [t[v - 1] - t[u - 1] for u, v in study.recruitment_graph.directed_edges]
    return min(gaps) if gaps else float(t[-1] - t[0]) or 1.0


@dataclass(frozen=True)
class ParamSpace:
    """Bijection between constrained theta and unconstrained R^p."""

    family: str
    x_min_bound: float = None

    @property
    def p(self):
        return len(FAMILIES[self.family].theta_names)

    def to_unconstrained(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.family == "power_law":
            shape, x_min = theta
            if not 0.0 < x_min < self.x_min_bound:
                raise ValueError(
                    f"x_min must lie in (0, {self.x_min_bound:g}); got {x_min:g}")
            if shape <= 1.0:
                raise ValueError("power-law shape must exceed 1")
            q = x_min / self.x_min_bound
            return np.array([math.log(shape - 1.0), math.log(q / (1.0 - q))])
        if np.any(theta <= 0):
            raise ValueError("parameters must be strictly positive")
        return np.log(theta)

    def to_constrained(self, z):
        z = np.asarray(z, dtype=float)
        if self.family == "power_law":
            z1 = float(np.clip(z[1], -_LOGIT_CLIP, _LOGIT_CLIP))
            x_min = self.x_min_bound / (1.0 + math.exp(-z1))
            return np.array([1.0 + math.exp(z[0]), x_min])
        return np.exp(z)


@dataclass(frozen=True)
class EstimationReport:
    converged: bool
    n_evaluations: int
    n_iterations: int
    message: str


def estimate_theta(a, study: ObservedStudy, family, theta0,
                   log_theta_prior=None, maxiter=None):
    """Nelder-Mead fit of theta for a fixed adjacency matrix.

    Returns (theta_hat, logpost_at_opt, EstimationReport).  The theta prior
    defaults to flat on the parameter space, making this a pure MLE step.
    """
    space = ParamSpace(family, x_min_bound=_min_recruitment_gap(study)
                       if family == "power_law" else None)
    z0 = space.to_unconstrained(theta0)
    p = space.p

    def objective(z):
        theta = space.to_constrained(z)
        try:
            model = make_model(family, **dict(zip(FAMILIES[family].theta_names, theta)))
        except ValueError:
            return math.inf
        ws = build_workspace(study, model)
        ll = log_likelihood_matrix(a, study, ws)
        if log_theta_prior is not None:
            ll += log_theta_prior(theta)
        return -ll

    f0 = objective(z0)
    if not math.isfinite(f0):
        raise ValueError(
            "objective is not finite at theta0; try a different start")

    simplex = np.vstack([z0] + [z0 + 0.05 * np.eye(p)[k] for k in range(p)])
    res = optimize.minimize(
        objective, z0, method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": 1e-6,
            "fatol": 1e-8,
            "maxiter": maxiter if maxiter is not None else 500 * p,
            "maxfev": 10 * (maxiter if maxiter is not None else 500 * p),
        })
    theta_hat = space.to_constrained(res.x)
    report = EstimationReport(converged=bool(res.success),
                              n_evaluations=int(res.nfev),
                              n_iterations=int(res.nit),
                              message=str(res.message))
    return theta_hat, -float(res.fun), report
