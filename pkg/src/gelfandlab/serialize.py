"""Deterministic file output: CSV for profiles/tables/diagrams, JSON for
specs and reports, and a manifest per CLI run.

Numbers go out with 17 significant digits; no timestamps anywhere, so two
runs of the same configuration produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .branch import BranchDiagram
from .grid import RadialProfile
from .reconstruct import NonlinearityTable


def fmt(x) -> str:
    return format(float(x), ".17g")


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=False) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else fmt_nonfinite(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def fmt_nonfinite(x: float) -> str:
    if np.isnan(x):
        return "nan"
    return "inf" if x > 0 else "-inf"


def config_hash(config: dict) -> str:
    blob = json.dumps(_plain(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def write_json(path: Path, obj) -> None:
    path.write_text(canonical_json(obj))


def write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    n = len(columns[0])
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(fmt(col[i]) for col in columns))
    path.write_text("\n".join(lines) + "\n")


def write_profile_csv(path: Path, prof: RadialProfile, value_name: str = "omega",
                      ) -> None:
    """Columns t, r, value, log_value; t survives when r underflows."""
    t = prof.grid.nodes
    with np.errstate(over="ignore"):
        vals = prof.linear_values()
    if prof.positive:
        logs = prof.log_values()
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(vals > 0, np.log(np.maximum(np.abs(vals), 1e-300)), -np.inf)
    write_csv(path, ["t", "r", value_name, f"log_{value_name}"],
              [t, np.exp(t), vals, logs])


def write_table_csv(path: Path, table: NonlinearityTable) -> None:
    write_csv(path, ["s", "f", "fprime", "fsecond", "log_f", "log_fprime",
                     "log_fsecond"],
              [table.s, table.f, table.fp, table.fpp, table.log_f, table.log_fp,
               table.log_fpp])


def write_diagram_csv(path: Path, diag: BranchDiagram) -> None:
    write_csv(path, ["m", "R", "lambda"], [diag.m, diag.R, diag.lam])


def write_manifest(path: Path, command: str, config: dict, outputs: list[str],
                   stats: dict, version: str, backend: str) -> None:
    import numpy
    import scipy
    write_json(path, {
        "command": command,
        "config": config,
        "config_sha256": config_hash(config),
        "package_version": version,
        "backend": backend,
        "numpy_version": numpy.__version__,
        "scipy_version": scipy.__version__,
        "outputs": outputs,
        "stats": stats,
    })
