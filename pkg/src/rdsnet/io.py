"""File formats: edge lists, observed-study JSON, DOT export, manifests.

Observed-study JSON schema::

    {
      "n": 5,
      "seeds": [1],
      "times": [0.0, 0.7, ...],            # strictly increasing
      "degrees": [3, 2, ...],              # positive integers
      "recruitment_edges": [[1, 2], ...],  # [recruiter, recruitee]
      "coupons": [[0,1,...], ...]          # dense 0/1 rows, or
      "coupons": {"per_subject_coupons": 3, "derive": true}
    }

Subject identifiers may be arbitrary; they are relabeled 1..n by
recruitment time and the original ids are kept for export.
"""

from __future__ import annotations

import csv
import hashlib
import json
from datetime import datetime, timezone

import numpy as np

from .graph import (DataValidationError, ObservedStudy, RecruitmentGraph,
                    derive_coupon_matrix)

__all__ = [
    "read_edge_list", "write_edge_list",
    "load_study", "dump_study", "study_to_dict",
    "write_dot", "write_event_log", "write_csv_rows",
    "write_manifest", "file_digest",
]


def read_edge_list(path):
    """Read 'u<TAB>v' pairs, '#' comments allowed; returns list of tuples."""
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataValidationError(f"{path}:{lineno}: expected 'u v'")
            edges.append((parts[0], parts[1]))
    return edges


def write_edge_list(path, edges):
    with open(path, "w") as fh:
        for u, v in edges:
            fh.write(f"{u}\t{v}\n")


def _relabel(raw):
    """Relabel arbitrary subject ids to 1..n by recruitment-time order."""
    times = raw["times"]
    ids = raw.get("ids", list(range(1, len(times) + 1)))
    order = sorted(range(len(ids)), key=lambda k: times[k])
    label = {ids[k]: rank + 1 for rank, k in enumerate(order)}
    return label, [ids[k] for k in order]


def load_study(path_or_dict):
    """Load an ObservedStudy from a JSON file path or a parsed dict."""
    if isinstance(path_or_dict, dict):
        raw = path_or_dict
    else:
        with open(path_or_dict) as fh:
            raw = json.load(fh)
    for key in ("n", "seeds", "times", "degrees", "recruitment_edges", "coupons"):
        if key not in raw:
            raise DataValidationError(f"observed-study JSON missing field {key!r}")
    n = int(raw["n"])
    if len(raw["times"]) != n or len(raw["degrees"]) != n:
        raise DataValidationError("field times/degrees length differs from n")
    label, original = _relabel(raw)
    times = sorted(float(t) for t in raw["times"])
    idx = {orig: i for i, orig in enumerate(original)}
    degrees = [0] * n
    for orig, d in zip(raw.get("ids", list(range(1, n + 1))), raw["degrees"]):
        degrees[label[orig] - 1] = int(d)
    edges = tuple(sorted((label[u], label[v]) for u, v in raw["recruitment_edges"]))
    seeds = frozenset(label[s] for s in raw["seeds"])
    graph = RecruitmentGraph(n=n, directed_edges=edges, seeds=seeds)
    coup = raw["coupons"]
    if isinstance(coup, dict):
        if not coup.get("derive"):
            raise DataValidationError("coupons dict requires derive: true")
        coupons = derive_coupon_matrix(graph, coup["per_subject_coupons"])
    else:
        coupons = np.asarray(coup)
    return ObservedStudy(recruitment_graph=graph, degrees=np.array(degrees),
                         times=np.array(times), coupons=coupons,
                         original_ids=tuple(original))


def study_to_dict(study: ObservedStudy):
    g = study.recruitment_graph
    return {
        "n": study.n,
        "seeds": sorted(g.seeds),
        "times": [float(t) for t in study.times],
        "degrees": [int(d) for d in study.degrees],
        "recruitment_edges": [[u, v] for u, v in sorted(g.directed_edges)],
        "coupons": study.coupons.astype(int).tolist(),
        "original_ids": list(study.original_ids) if study.original_ids else None,
    }


def dump_study(study: ObservedStudy, path):
    with open(path, "w") as fh:
        json.dump(study_to_dict(study), fh, indent=1)
        fh.write("\n")


def write_dot(path, study: ObservedStudy, estimated_a=None):
    """DOT graph: recruitment edges as solid arrows, inferred extra edges
    of the estimate as gray dashed lines."""
    a_r = study.recruitment_adjacency()
    lines = ["digraph rds {"]
    for s in sorted(study.recruitment_graph.seeds):
        lines.append(f'  {s} [shape=doublecircle];')
    for u, v in sorted(study.recruitment_graph.directed_edges):
        lines.append(f"  {u} -> {v};")
    if estimated_a is not None:
        est = np.asarray(estimated_a)
        for i, j in np.argwhere(np.triu((est == 1) & (a_r == 0), k=1)):
            lines.append(f"  {int(i) + 1} -> {int(j) + 1}"
                         " [dir=none, style=dashed, color=gray];")
    lines.append("}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_event_log(path, event_log):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "recruiter", "recruitee"])
        for t, u, v in event_log:
            w.writerow([repr(float(t)), u, v])


def write_csv_rows(path, rows, columns=None):
    if not rows:
        raise ValueError("no rows to write")
    columns = columns or list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in columns})


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, subcommand, config, rng_seed, inputs=(),
                   started=None, finished=None):
    """One manifest per output directory; replays the job deterministically."""
    from . import __version__
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "rng_seed": rng_seed,
        "build": f"rdsnet {__version__}",
        "input_digests": {str(p): file_digest(p) for p in inputs},
        "started": started or datetime.now(timezone.utc).isoformat(),
        "finished": finished or datetime.now(timezone.utc).isoformat(),
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return manifest
