"""Simulated-annealing search over compatible adjacency matrices.

The proposal toggles one edge, drawn uniformly from the current valid
moves (additions keeping every row sum within the reported degree, and
removals of non-recruitment edges).  The Metropolis correction for this
asymmetric proposal is the quotient of total valid-move counts before and
after the toggle.  Move sets are maintained incrementally; the
rejection-loop proposal from the source procedure is available behind
``rejection_loop=True`` and draws from the identical distribution.

Acceptance uses the posterior-maximizing convention: an uphill move with
unit proposal ratio is always accepted, psi = min(1, exp(dlogpost/gamma) *
ratio).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import ObservedStudy, check_compatible
from .likelihood import (LikelihoodWorkspace, apply_toggle, cache_log_likelihood,
                         init_cache, make_prior)

__all__ = ["CoolingSchedule", "AnnealState", "AnnealResult", "anneal",
           "acceptance_prob", "propose", "StuckError"]


class StuckError(RuntimeError):
    """The compatible space is a single point: no valid move exists."""


class _IndexedSet:
    """Set with O(1) add/discard/uniform-choice (swap-with-last trick)."""

    __slots__ = ("_pos", "_items")

    def __init__(self):
        self._pos = {}
        self._items = []

    def __len__(self):
        return len(self._items)

    def __contains__(self, item):
        return item in self._pos

    def add(self, item):
        if item not in self._pos:
            self._pos[item] = len(self._items)
            self._items.append(item)

    def discard(self, item):
        pos = self._pos.pop(item, None)
        if pos is None:
            return
        last = self._items.pop()
        if pos < len(self._items):
            self._items[pos] = last
            self._pos[last] = pos

    def choose(self, rng):
        return self._items[int(rng.integers(len(self._items)))]

    def items(self):
        return list(self._items)


@dataclass(frozen=True)
class CoolingSchedule:
    """Temperature sequence gamma_j, nonincreasing toward a positive floor."""

    kind: str = "geometric"
    gamma0: float = 1.0
    rate: float = 0.999
    floor: float = 1e-4

    def __post_init__(self):
        if self.gamma0 <= 0 or self.floor <= 0:
            raise ValueError("gamma0 and floor must be positive")
        if self.kind not in ("geometric", "linear", "logarithmic"):
            raise ValueError(f"unknown cooling kind {self.kind!r}")

    def gamma(self, j, j_max):
        if self.kind == "geometric":
            g = self.gamma0 * self.rate ** j
        elif self.kind == "linear":
            g = self.gamma0 * (1.0 - j / max(j_max, 1))
        else:
            g = self.gamma0 / math.log(j + math.e)
        return max(g, self.floor)


class AnnealState:
    """Current matrix plus the caches that make one step O(n).

    Maintains the addable/removable move sets, the pendant-count vector,
    and the likelihood cache; ``toggle``/``untoggle`` keep all of them
    consistent.
    """

    def __init__(self, a, study: ObservedStudy, ws: LikelihoodWorkspace, prior):
        report = check_compatible(a, study)
        if not report.is_compatible:
            raise ValueError(f"initial matrix not compatible: {report}")
        self.a = np.array(a, dtype=np.int8)
        self.study = study
        self.ws = ws
        self.prior = prior
        self.n = study.n
        self.a_r = study.recruitment_adjacency()
        self.cache = init_cache(self.a, ws)
        self.free = self.cache.u > 0
        self.addable = _IndexedSet()
        self.removable = _IndexedSet()
        n = self.n
        for x in range(n):
            for y in range(x + 1, n):
                if self.a[x, y]:
                    if not self.a_r[x, y]:
                        self.removable.add((x, y))
                elif self.free[x] and self.free[y]:
                    self.addable.add((x, y))
        self.log_prior = prior.log_prior(self.a, study)

    # -- move-set bookkeeping ------------------------------------------------

    def _saturate(self, x):
        self.free[x] = False
        a_row = self.a[x]
        for z in np.flatnonzero(self.free):
            if a_row[z] == 0 and z != x:
                self.addable.discard((min(x, z), max(x, z)))

    def _unsaturate(self, x):
        a_row = self.a[x]
        for z in np.flatnonzero(self.free):
            if a_row[z] == 0 and z != x:
                self.addable.add((min(x, z), max(x, z)))
        self.free[x] = True

    def move_count(self):
        return len(self.addable) + len(self.removable)

    def toggle(self, x, y, add):
        """Apply one valid toggle to matrix, caches, and move sets."""
        if add:
            self.addable.discard((x, y))
            self.a[x, y] = self.a[y, x] = 1
            if not self.a_r[x, y]:
                self.removable.add((x, y))
            apply_toggle(self.cache, self.ws, x, y, True)
            for v in (x, y):
                if self.cache.u[v] == 0:
                    self._saturate(v)
        else:
            self.removable.discard((x, y))
            self.a[x, y] = self.a[y, x] = 0
            apply_toggle(self.cache, self.ws, x, y, False)
            for v in (x, y):
                if self.cache.u[v] == 1 and not self.free[v]:
                    self._unsaturate(v)
            if self.free[x] and self.free[y]:
                self.addable.add((x, y))
        self.log_prior += self.prior.toggle_delta(add)

    def log_posterior(self):
        return cache_log_likelihood(self.cache, self.ws) + self.log_prior


def propose(state: AnnealState, rng, rejection_loop=False):
    """Uniformly random valid toggle; returns ((x, y), add).

    ``rejection_loop=True`` draws unordered vertex pairs until one passes
    the add or remove guard, reproducing the literal procedure; the result
    distribution is identical (uniform over valid moves).
    """
    total = state.move_count()
    if total == 0:
        raise StuckError("no valid move: compatible space is a single point")
    if rejection_loop:
        while True:
            x, y = rng.choice(state.n, size=2, replace=False)
            if x > y:
                x, y = y, x
            x, y = int(x), int(y)
            if state.a[x, y] == 0:
                if state.free[x] and state.free[y]:
                    return (x, y), True
            elif not state.a_r[x, y]:
                return (x, y), False
    k = int(rng.integers(total))
    if k < len(state.addable):
        return state.addable._items[k], True
    return state.removable._items[k - len(state.addable)], False


def acceptance_prob(delta_logpost, ratio, gamma):
    """psi = min(1, exp(delta_logpost / gamma) * ratio)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not math.isfinite(delta_logpost):
        return 0.0 if delta_logpost < 0 else 1.0
    x = delta_logpost / gamma + math.log(ratio)
    return 1.0 if x >= 0 else math.exp(x)


def probe_gamma0(state: AnnealState, rng, probes=100):
    """Standard deviation of |dlogpost| over random probe toggles from the
    initial state; used to scale the default geometric schedule."""
    deltas = []
    cur = state.log_posterior()
    for _ in range(probes):
        try:
            (x, y), add = propose(state, rng)
        except StuckError:
            return 1.0
        state.toggle(x, y, add)
        deltas.append(state.log_posterior() - cur)
        state.toggle(x, y, not add)
    deltas = np.array([d for d in deltas if math.isfinite(d)])
    if deltas.size < 2:
        return 1.0
    sd = float(np.std(deltas))
    return sd if sd > 0 else 1.0


@dataclass
class AnnealResult:
    best_a: np.ndarray
    best_logpost: float
    final_a: np.ndarray
    final_logpost: float
    accept_rate: float
    iterations: int
    trace: list                 # (iter, gamma, logpost, accepted)
    stuck: bool = False


def anneal(study, ws, prior, schedule, a_init, j_max, rng,
           rejection_loop=False, trace_every=100, refresh_every=4096):
    """Run j_max single-toggle annealing iterations from a_init.

    Returns both the best-visited matrix (the reported estimate) and the
    final-state matrix.  The likelihood cache is refreshed from scratch
    every ``refresh_every`` accepted moves to cap floating-point drift.
    """
    prior = make_prior(prior)
    state = AnnealState(a_init, study, ws, prior)
    if schedule is None:
        schedule = CoolingSchedule(gamma0=probe_gamma0(state, rng))
    cur = state.log_posterior()
    best = cur
    best_a = state.a.copy()
    accepted = 0
    trace = []
    stuck = False
    for j in range(1, j_max + 1):
        gamma = schedule.gamma(j, j_max)
        total_before = state.move_count()
        if total_before == 0:
            stuck = True
            break
        (x, y), add = propose(state, rng, rejection_loop=rejection_loop)
        state.toggle(x, y, add)
        new = state.log_posterior()
        ratio = total_before / state.move_count()
        psi = acceptance_prob(new - cur, ratio, gamma)
        accept = psi >= 1.0 or rng.random() < psi
        if accept:
            cur = new
            accepted += 1
            if cur > best:
                best = cur
                best_a = state.a.copy()
            if accepted % refresh_every == 0:
                state.cache = init_cache(state.a, ws)
                cur = state.log_posterior()
        else:
            state.toggle(x, y, not add)
        if trace_every and j % trace_every == 0:
            trace.append((j, gamma, cur, accept))
    return AnnealResult(best_a=best_a, best_logpost=best,
                        final_a=state.a.copy(), final_logpost=cur,
                        accept_rate=accepted / max(j_max, 1),
                        iterations=j_max, trace=trace, stuck=stuck)
