"""CSV/JSON persistence and the run manifest.

Floats are written with ``repr`` so every value round-trips exactly, and no
file other than the manifest carries timestamps; two runs of the same manifest
therefore produce byte-identical CSVs.
"""
from __future__ import annotations

import csv
import json
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .geometry import RadialProfile

MANIFEST_NAME = "manifest.json"


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([_cell(x) for x in row])
    return path


def read_csv(path) -> tuple[list, list]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")
    return path


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# -- manifest -------------------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int
    tolerances: dict
    tool_version: str
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    environment: dict = field(default_factory=lambda: {
        "python": platform.python_version(), "numpy": np.__version__})

    def add(self, path):
        name = Path(path).name
        if name not in self.outputs:
            self.outputs.append(name)

    def write(self, out_dir) -> Path:
        self.outputs.sort()
        return write_json(Path(out_dir) / MANIFEST_NAME, asdict(self))

    @classmethod
    def read(cls, path) -> "RunManifest":
        d = read_json(path)
        return cls(**d)


# -- domain objects -------------------------------------------------------------------

def write_profile(path, profile: RadialProfile, n: int) -> tuple[Path, Path]:
    """CSV ``coordinate,value`` plus a JSON sidecar with the coordinate kind."""
    path = Path(path)
    csv_path = write_csv(path, ["coordinate", "value"], zip(profile.grid, profile.values))
    meta = {k: v for k, v in profile.metadata.items()}
    side = write_json(path.with_suffix(".json"),
                      {"coordinate_kind": profile.coordinate, "n": n, "metadata": meta})
    return csv_path, side


def read_profile(path) -> tuple[RadialProfile, int]:
    path = Path(path)
    _, rows = read_csv(path)
    side = read_json(path.with_suffix(".json"))
    arr = np.array(rows, dtype=float)
    prof = RadialProfile(arr[:, 0], arr[:, 1], side["coordinate_kind"],
                         signed=bool(np.any(arr[:, 1] <= 0)), metadata=side.get("metadata", {}))
    return prof, side["n"]


def write_basis(out_dir, basis, stem="basis") -> list[Path]:
    out_dir = Path(out_dir)
    return [write_json(out_dir / f"{stem}.json", {"N": basis.N, "K": basis.K, "M": basis.M}),
            write_csv(out_dir / f"{stem}_nodes.csv", ["j", "node", "weight"],
                      ((j, x, w) for j, (x, w) in enumerate(zip(basis.nodes, basis.weights))))]


def write_coeffs(path, f) -> Path:
    return write_csv(path, ["k", "coeff"], enumerate(f.coeffs))


BRANCH_HEADER = ["lambda", "norm_inf", "min_w", "max_w", "nodal_class", "residual"]


def branch_rows(branch):
    t = np.linspace(-1, 1, 2049)
    for pt in branch.points:
        vals = pt.w.basis.table(t) @ pt.w.coeffs
        yield (pt.lam, float(np.max(np.abs(vals))), float(vals.min()), float(vals.max()),
               pt.nodal_class, pt.residual_norm)


def write_branch(out_dir, branch, stem) -> list[Path]:
    out_dir = Path(out_dir)
    K = branch.points[0].w.basis.K
    return [write_csv(out_dir / f"{stem}.csv", BRANCH_HEADER, branch_rows(branch)),
            write_csv(out_dir / f"{stem}_coeffs.csv", ["lambda"] + [f"c{k}" for k in range(K)],
                      ([pt.lam, *pt.w.coeffs] for pt in branch.points))]


def write_trajectory(out_dir, traj, stem="trajectory") -> list[Path]:
    out_dir = Path(out_dir)
    return [write_csv(out_dir / f"{stem}.csv", ["t", "w", "wprime", "h"],
                      zip(traj.t, traj.w, traj.wp, traj.energy)),
            write_csv(out_dir / f"{stem}_events.csv",
                      ["direction", "t", "bracket_lo", "bracket_hi", "w_at_event"],
                      ((e.direction, e.t, e.bracket[0], e.bracket[1], e.w_at_event)
                       for e in traj.events))]
