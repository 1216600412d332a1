"""Recruitment-time-series likelihood: product form, matrix form, caches.

Notation (all matrices n x n, indices 0-based; event j is subject j+1):

    H[u, i] = hazard of the edge clock from u at elapsed time t_i - t_u
    S[u, i] = log of the conditional survival of that clock over
              (t_{i-1} - t_u, t_i - t_u]
    B = C o H,  D = C o S        (o = entrywise product with coupon mask)

The log-likelihood has the matrix form  sum_{i not seed} log ebeta_i +
sum_i delta_i  where, for a candidate adjacency matrix A with pendant
counts u = d - A.1,

    ebeta = B'u + LowerTri(A B)' 1  =  B'd - StrictlyUpperTri(A B)' 1
    delta = D'u + LowerTri(A D)' 1  =  D'd - StrictlyUpperTri(A D)' 1.

The second (d-based) form depends on A only through the strictly-upper
triangular sums, which change by at most two matrix rows per single-edge
toggle; that is what the incremental cache updates exploit.  Toggling edge
{x, y} (0-based, x < y) changes entry j by -(B[y,j] 1{x<j} + B[x,j] 1{y<j})
on an add and by the negation on a remove.  The printed recurrence in the
source derivation carries a minus between the two terms, but expanding the
two strictly-upper-triangular contributions gives a sum; the recompute
oracle in the tests pins this convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import ObservedStudy, check_compatible
from .waiting_time import WaitingTimeModel

__all__ = [
    "LikelihoodWorkspace",
    "LikelihoodCache",
    "build_workspace",
    "log_likelihood_direct",
    "log_likelihood_matrix",
    "init_cache",
    "apply_toggle",
    "cache_log_likelihood",
    "log_posterior",
    "UniformPrior",
    "BernoulliEdgePrior",
    "make_prior",
]


@dataclass(frozen=True)
class LikelihoodWorkspace:
    """Precomputed per-(study, theta) matrices; immutable, freely shared."""

    H: np.ndarray
    S: np.ndarray
    B: np.ndarray
    D: np.ndarray
    m: np.ndarray          # 1{i not seed}, float 0/1
    nonseed_idx: np.ndarray
    degrees: np.ndarray
    times: np.ndarray
    Btd: np.ndarray        # B' d
    Dtd: np.ndarray        # D' d


def build_workspace(study: ObservedStudy, model: WaitingTimeModel):
    """Evaluate the hazard/survival matrices for one (study, theta)."""
    n = study.n
    t = study.times
    elapsed = t[None, :] - t[:, None]               # t_i - t_u
    prev = np.concatenate(([t[0]], t[:-1]))         # t_{i-1} (t_0 for i=0; masked)
    cond = prev[None, :] - t[:, None]               # tau(u; i) = t_{i-1} - t_u
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)

    H = np.zeros((n, n))
    S = np.zeros((n, n))
    eu = elapsed[upper]
    cu = cond[upper]
    log_sf_end = model.log_sf(eu)
    log_sf_start = model.log_sf(cu)
    if np.any(np.isneginf(log_sf_start)):
        u, i = map(int, np.argwhere(upper)[np.flatnonzero(np.isneginf(log_sf_start))[0]])
        raise ValueError(
            f"survival vanished while conditioning pair (u={u + 1}, i={i + 1})")
    H[upper] = model.hazard(eu)
    S[upper] = log_sf_end - log_sf_start

    coup = study.coupons.astype(float)
    B = coup * H
    D = coup * S
    m = (~study.seed_mask()).astype(float)
    d = study.degrees.astype(float)
    return LikelihoodWorkspace(
        H=H, S=S, B=B, D=D, m=m, nonseed_idx=np.flatnonzero(m),
        degrees=d, times=t, Btd=B.T @ d, Dtd=D.T @ d)


# ---------------------------------------------------------------------------
# direct (product-form) evaluation: the slow oracle


def log_likelihood_direct(a, study: ObservedStudy, model: WaitingTimeModel):
    """Log-likelihood by explicit iteration over recruiter sets.

    Deliberately written as a literal transcription of the product form;
    used as the oracle for the matrix form.
    """
    a = np.asarray(a)
    n = study.n
    t = study.times
    coup = study.coupons
    seeds = study.seed_mask()
    pend = study.degrees - a.sum(axis=1)  # u_j: neighbors never sampled
    total = 0.0
    for i in range(1, n):
        prior = np.arange(i)
        # recruiters just before event i: coupon holders with >= 1 recruitee
        # |I_u(i)| = unsampled neighbors + sampled-but-not-yet-recruited ones
        n_recruitees = coup[prior, i] * (a[prior, i:].sum(axis=1) + pend[prior])
        active = prior[n_recruitees > 0]
        if active.size:
            counts = n_recruitees[active]
            s = t[i - 1] - t[active]
            haz = model.cond_hazard(s, t[i] - t[active])
            surv = model.log_cond_survival(s, t[i] - t[active])
            total += float(counts @ surv)
            hazard_sum = float(counts @ haz)
        else:
            hazard_sum = 0.0
        if not seeds[i]:
            if hazard_sum <= 0.0:
                return -math.inf
            total += math.log(hazard_sum)
    return total


# ---------------------------------------------------------------------------
# matrix (vectorized) evaluation


def log_likelihood_matrix(a, study: ObservedStudy, ws: LikelihoodWorkspace):
    """Vectorized log-likelihood  m'beta + 1'delta."""
    a = np.asarray(a, dtype=float)
    u = ws.degrees - a.sum(axis=1)
    ebeta = ws.B.T @ u + np.tril(a @ ws.B).sum(axis=0)
    delta = ws.D.T @ u + np.tril(a @ ws.D).sum(axis=0)
    eb = ebeta[ws.nonseed_idx]
    if np.any(eb <= 0.0):
        return -math.inf
    return float(np.log(eb).sum() + delta.sum())


# ---------------------------------------------------------------------------
# incremental cache


@dataclass
class LikelihoodCache:
    """Per-chain mutable state supporting O(n) single-toggle updates."""

    u: np.ndarray        # pendant counts d - A.1 (int)
    ebeta: np.ndarray    # B'd - StrictlyUpperTri(AB)' 1
    delta: np.ndarray    # D'd - StrictlyUpperTri(AD)' 1

    def copy(self):
        return LikelihoodCache(self.u.copy(), self.ebeta.copy(), self.delta.copy())


def init_cache(a, ws: LikelihoodWorkspace):
    a = np.asarray(a, dtype=float)
    u = (ws.degrees - a.sum(axis=1)).astype(int)
    ebeta = ws.Btd - np.triu(a @ ws.B, k=1).sum(axis=0)
    delta = ws.Dtd - np.triu(a @ ws.D, k=1).sum(axis=0)
    return LikelihoodCache(u=u, ebeta=ebeta, delta=delta)


def apply_toggle(cache: LikelihoodCache, ws: LikelihoodWorkspace, x, y, add):
    """Update the cache for toggling edge {x, y} (0-based); O(n).

    ``add`` True adds the edge, False removes it.  The caller guarantees
    the toggle preserves compatibility.
    """
    if x > y:
        x, y = y, x
    sign = -1.0 if add else 1.0
    cache.ebeta[x + 1:] += sign * ws.B[y, x + 1:]
    cache.ebeta[y + 1:] += sign * ws.B[x, y + 1:]
    cache.delta[x + 1:] += sign * ws.D[y, x + 1:]
    cache.delta[y + 1:] += sign * ws.D[x, y + 1:]
    step = -1 if add else 1
    cache.u[x] += step
    cache.u[y] += step
    return cache


def cache_log_likelihood(cache: LikelihoodCache, ws: LikelihoodWorkspace):
    eb = cache.ebeta[ws.nonseed_idx]
    if np.any(eb <= 0.0):
        return -math.inf
    return float(np.log(eb).sum() + cache.delta.sum())


# ---------------------------------------------------------------------------
# priors over (A, theta)


class UniformPrior:
    """Flat over compatible matrices and over theta."""

    def log_prior(self, a, study):
        return 0.0

    def toggle_delta(self, add):
        return 0.0


class BernoulliEdgePrior:
    """Independent Bernoulli(p) prior on non-recruitment edges.

    log Pr(A) = (#extra edges) log p + (#absent pairs) log(1-p) + const,
    so each added edge contributes log(p / (1-p)).
    """

    def __init__(self, p):
        if not 0.0 < p < 1.0:
            raise ValueError("edge probability must be in (0, 1)")
        self.p = float(p)
        self._logit = math.log(p) - math.log1p(-p)

    def log_prior(self, a, study):
        from .graph import count_removable
        return count_removable(a, study) * self._logit

    def toggle_delta(self, add):
        return self._logit if add else -self._logit


def make_prior(spec):
    """Parse a prior spec: 'uniform' or 'bernoulli:p'."""
    if isinstance(spec, (UniformPrior, BernoulliEdgePrior)):
        return spec
    if spec == "uniform":
        return UniformPrior()
    if isinstance(spec, str) and spec.startswith("bernoulli:"):
        return BernoulliEdgePrior(float(spec.split(":", 1)[1]))
    raise ValueError(f"unknown prior spec {spec!r}")


def log_posterior(a, study, ws, prior=None):
    """Matrix-form log-likelihood plus the log prior of the candidate."""
    prior = make_prior(prior or "uniform")
    report = check_compatible(a, study)
    if not report.is_compatible:
        return -math.inf
    return log_likelihood_matrix(a, study, ws) + prior.log_prior(a, study)
