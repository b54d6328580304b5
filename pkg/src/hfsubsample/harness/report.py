"""Aggregate replication tables into summary CSVs and density curves."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .kde import default_grid, kde

__all__ = ["load_rows", "aggregate", "write_report"]

_GROUP = ("model", "noise", "n", "theta", "L", "p", "estimator")


def load_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _floats(rows, key):
    vals = []
    for r in rows:
        s = r.get(key, "")
        if s not in ("", None):
            vals.append(float(s))
    return np.array(vals)


def aggregate(rows):
    """Fractions of nonpositive-definite, negative-variance and ill-conditioned estimates plus z moments."""
    groups = {}
    for r in rows:
        if r.get("error"):
            continue
        groups.setdefault(tuple(r[k] for k in _GROUP), []).append(r)
    z_keys = sorted({k for r in rows for k in r if k.startswith("z") and k[1:].isdigit()})
    out = []
    for key, rs in sorted(groups.items()):
        entry = dict(zip(_GROUP, key))
        entry["count"] = len(rs)
        for col in ("nonpositive_definite", "negative_variance", "ill_conditioned"):
            v = _floats(rs, col)
            entry[col] = float(v.mean()) if v.size else math.nan
        for zk in z_keys + ["jump_z"]:
            z = _floats(rs, zk)
            z = z[np.isfinite(z)]
            entry[f"{zk}_mean"] = float(z.mean()) if z.size else math.nan
            entry[f"{zk}_std"] = float(z.std(ddof=1)) if z.size > 1 else math.nan
        jz = _floats(rs, "jump_z")
        jz = jz[np.isfinite(jz)]
        entry["jump_reject_95"] = float(np.mean(jz > 1.6448536269514722)) if jz.size else math.nan
        out.append(entry)
    return out


def write_report(rows, out_dir, grid=None):
    """Write ``table.csv`` and one ``kde_<group>_<z>.csv`` per group and studentized component."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = aggregate(rows)
    if table:
        with open(out / "table.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(table[0]), lineterminator="\n")
            w.writeheader()
            for e in table:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in e.items()})
    grid = default_grid() if grid is None else np.asarray(grid)
    groups = {}
    for r in rows:
        if not r.get("error"):
            groups.setdefault(tuple(r[k] for k in _GROUP), []).append(r)
    written = []
    for key, rs in sorted(groups.items()):
        tag = "_".join(str(k) for k in key).replace("/", "-")
        for zk in sorted(k for k in rs[0] if (k.startswith("z") and k[1:].isdigit()) or k == "jump_z"):
            z = _floats(rs, zk)
            z = z[np.isfinite(z)]
            if z.size < 2:
                continue
            dens = kde(z, grid)
            path = out / f"kde_{tag}_{zk}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["x", "density"])
                for x, d in zip(grid, dens):
                    w.writerow([repr(float(x)), repr(float(d))])
            written.append(path)
    return table, written
