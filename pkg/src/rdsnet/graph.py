"""Recruitment graphs, observed-study data, and compatibility machinery.

Subjects are labeled 1..n in recruitment order.  Adjacency matrices are
dense 0/1 numpy arrays indexed 0..n-1 (label i lives at index i-1).  A
candidate adjacency matrix ``a`` is *compatible* with a study when it is
symmetric, binary, zero-diagonal, contains every recruitment edge, and its
row sums do not exceed the reported degrees.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DataValidationError",
    "RecruitmentGraph",
    "ObservedStudy",
    "CompatibilityReport",
    "validate_adjacency",
    "undirected_projection",
    "check_compatible",
    "count_addable",
    "count_removable",
    "compatible_path",
    "derive_coupon_matrix",
]

TIE_EPS = 1e-9


class DataValidationError(ValueError):
    """Raised when ingested study data violates a structural invariant."""


def validate_adjacency(a):
    """Check symmetric / binary / zero-diagonal; return the matrix as int8."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataValidationError("adjacency matrix must be square")
    if not np.isin(a, (0, 1)).all():
        raise DataValidationError("adjacency matrix entries must be 0/1")
    if np.any(np.diag(a) != 0):
        raise DataValidationError("adjacency matrix must have a zero diagonal")
    if not np.array_equal(a, a.T):
        raise DataValidationError("adjacency matrix must be symmetric")
    return a.astype(np.int8)


@dataclass(frozen=True)
class RecruitmentGraph:
    """Directed who-recruited-whom graph over subjects labeled 1..n."""

    n: int
    directed_edges: tuple  # of (recruiter, recruitee) label pairs
    seeds: frozenset

    def __post_init__(self):
        object.__setattr__(self, "directed_edges",
                           tuple((int(u), int(v)) for u, v in self.directed_edges))
        object.__setattr__(self, "seeds", frozenset(int(s) for s in self.seeds))
        indeg = {v: 0 for v in range(1, self.n + 1)}
        for u, v in self.directed_edges:
            if not (1 <= u <= self.n and 1 <= v <= self.n) or u == v:
                raise DataValidationError(f"bad recruitment edge ({u}, {v})")
            if u >= v:
                raise DataValidationError(
                    f"recruiter label must precede recruitee label, got ({u}, {v})")
            indeg[v] += 1
        for v in range(1, self.n + 1):
            if v in self.seeds:
                if indeg[v] != 0:
                    raise DataValidationError(f"seed {v} has a recruiter")
            elif indeg[v] != 1:
                raise DataValidationError(
                    f"non-seed {v} has in-degree {indeg[v]}, expected 1")

    def seed_mask(self):
        m = np.zeros(self.n, dtype=bool)
        for s in self.seeds:
            m[s - 1] = True
        return m


def undirected_projection(g: RecruitmentGraph):
    """Adjacency matrix A_R of the recruitment graph viewed as undirected."""
    a = np.zeros((g.n, g.n), dtype=np.int8)
    for u, v in g.directed_edges:
        a[u - 1, v - 1] = 1
        a[v - 1, u - 1] = 1
    return a


def derive_coupon_matrix(g: RecruitmentGraph, coupons_per_subject):
    """Reconstruct the coupon matrix C from per-subject coupon counts.

    Subjects receive ``coupons_per_subject`` coupons on entry and spend one
    per successful recruitment; C[i, j] = 1 iff subject i+1 holds at least
    one coupon just before recruitment event j+1.
    """
    n = g.n
    c = int(coupons_per_subject)
    if c <= 0:
        raise DataValidationError("coupons_per_subject must be positive")
    recruiter_of = {v: u for u, v in g.directed_edges}
    held = np.zeros(n, dtype=int)
    coup = np.zeros((n, n), dtype=np.int8)
    for j in range(1, n + 1):
        coup[: j - 1, j - 1] = held[: j - 1] > 0
        u = recruiter_of.get(j)
        if u is not None:
            if held[u - 1] <= 0:
                raise DataValidationError(
                    f"recruiter {u} out of coupons before event {j}")
            held[u - 1] -= 1
        held[j - 1] = c
    return coup


@dataclass(frozen=True)
class ObservedStudy:
    """The observed RDS data: recruitment graph, degrees, times, coupons."""

    recruitment_graph: RecruitmentGraph
    degrees: np.ndarray
    times: np.ndarray
    coupons: np.ndarray
    original_ids: tuple = None  # optional map label -> ingested subject id

    def __post_init__(self):
        g = self.recruitment_graph
        n = g.n
        d = np.asarray(self.degrees, dtype=int)
        t = np.asarray(self.times, dtype=float)
        coup = np.asarray(self.coupons)
        object.__setattr__(self, "degrees", d)
        object.__setattr__(self, "coupons", coup.astype(np.int8))
        if d.shape != (n,) or t.shape != (n,):
            raise DataValidationError("degrees and times must have length n")
        if np.any(d <= 0):
            raise DataValidationError("degrees must be positive")
        if np.any(np.diff(t) == 0):
            t = _break_time_ties(t)
        if np.any(np.diff(t) <= 0):
            raise DataValidationError("recruitment times must be increasing")
        object.__setattr__(self, "times", t)
        if coup.shape != (n, n) or not np.isin(coup, (0, 1)).all():
            raise DataValidationError("coupon matrix must be n x n binary")
        if np.any(np.tril(coup) != 0):
            raise DataValidationError(
                "coupon matrix must be zero on and below the diagonal")
        a_r = undirected_projection(g)
        bad = np.flatnonzero(a_r.sum(axis=1) > d)
        if bad.size:
            raise DataValidationError(
                f"reported degree below recruitment degree for subjects "
                f"{[int(i) + 1 for i in bad]}; no compatible matrix exists")
        for u, v in g.directed_edges:
            if coup[u - 1, v - 1] != 1:
                raise DataValidationError(
                    f"recruiter {u} holds no coupon before event {v}")

    @property
    def n(self):
        return self.recruitment_graph.n

    def recruitment_adjacency(self):
        return undirected_projection(self.recruitment_graph)

    def seed_mask(self):
        return self.recruitment_graph.seed_mask()


def _break_time_ties(t):
    """Nudge tied times by rank * TIE_EPS; the model puts zero mass on ties."""
    t = np.array(t, dtype=float)
    warnings.warn("tied recruitment times broken by adding k*1e-9", stacklevel=3)
    out = t.copy()
    k = 0
    for i in range(1, len(t)):
        if out[i] <= out[i - 1]:
            k += 1
            out[i] = out[i - 1] + k * TIE_EPS
        else:
            k = 0
    return out


@dataclass(frozen=True)
class CompatibilityReport:
    is_compatible: bool
    violated_subgraph_pairs: tuple = ()
    violated_degree_vertices: tuple = ()


def check_compatible(a, study: ObservedStudy):
    """Report every A >= A_R and A.1 <= d violation of a candidate matrix."""
    a = validate_adjacency(a)
    if a.shape[0] != study.n:
        raise DataValidationError("candidate matrix dimension mismatch")
    a_r = study.recruitment_adjacency()
    miss = np.argwhere((a_r == 1) & (a == 0))
    pairs = tuple((int(i) + 1, int(j) + 1) for i, j in miss if i < j)
    over = np.flatnonzero(a.sum(axis=1) > study.degrees)
    verts = tuple(int(i) + 1 for i in over)
    return CompatibilityReport(not pairs and not verts, pairs, verts)


def count_addable(a, study: ObservedStudy):
    """Number of unordered pairs whose addition preserves compatibility."""
    a = np.asarray(a)
    slack = study.degrees - a.sum(axis=1)
    free = slack > 0
    ok = np.triu((a == 0) & np.outer(free, free), k=1)
    return int(ok.sum())


def count_removable(a, study: ObservedStudy):
    """Number of present edges that are not recruitment edges."""
    a = np.asarray(a)
    a_r = study.recruitment_adjacency()
    return int(np.triu((a == 1) & (a_r == 0), k=1).sum())


def compatible_path(a1, a2, study: ObservedStudy):
    """Single-edge toggle moves from a1 to a2 through compatible states.

    Removes the edges of a1 outside the entrywise intersection first, then
    adds the edges of a2 outside it; every intermediate stays compatible.
    Moves are ((i, j), "remove"|"add") with 1-based i < j.
    """
    a1 = validate_adjacency(a1)
    a2 = validate_adjacency(a2)
    moves = []
    for i, j in np.argwhere(np.triu((a1 == 1) & (a2 == 0), k=1)):
        moves.append(((int(i) + 1, int(j) + 1), "remove"))
    for i, j in np.argwhere(np.triu((a1 == 0) & (a2 == 1), k=1)):
        moves.append(((int(i) + 1, int(j) + 1), "add"))
    return moves


def apply_move(a, move):
    """Apply one toggle move in place; returns the matrix."""
    (i, j), kind = move
    val = 1 if kind == "add" else 0
    a[i - 1, j - 1] = val
    a[j - 1, i - 1] = val
    return a
