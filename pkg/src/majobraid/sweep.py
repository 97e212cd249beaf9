"""Parameter sweeps, run records and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import UNITS, RunConfig
from .errors import NormCalculator
from .propagation import analytic_norm
from .schedule import PathSpec

# couplings whose closed form is shared through the symmetry equalities
ANALYTIC_ALIAS = {"b2": "b2", "g1": "b2", "11": "11", "22": "11", "32": "11", "12": "12", "31": "12", "21": "21"}
CONVERGENCE_RTOL = 0.005
CONVERGENCE_ATOL = 1e-8
FLOAT_FORMAT = "%.17g"


@dataclass
class RunRecord:
    config_hash: str
    version: str
    params: dict
    norms: dict = field(default_factory=dict)
    analytic: dict = field(default_factory=dict)
    converged: bool = True
    wall_time: float = 0.0
    fidelities: dict = field(default_factory=dict)
    pflip: list = field(default_factory=list)
    refined: dict = field(default_factory=dict)  # doubled-grid norms, when checked


# one calculator per (coupling, path, grid) and worker process
_CALCULATORS: dict = {}


def _calculator(which: str, path: PathSpec, steps: int) -> NormCalculator:
    key = (which, path, steps)
    if key not in _CALCULATORS:
        _CALCULATORS[key] = NormCalculator(which, path, steps)
    return _CALCULATORS[key]


def _evaluate(task) -> tuple[int, dict, dict, dict, bool, float]:
    index, variable, value, couplings, path, steps, sector, check = task
    t0 = time.perf_counter()
    delta = value if variable == "delta" else 0.0
    if variable == "delta_max":
        path = PathSpec(path.kind, value, None, path.t0, path.direction, path.start_corner)
    norms, analytic, refined, converged = {}, {}, {}, True
    for which in couplings:
        n = _calculator(which, path, steps).norm(delta, parity=sector)
        norms[which] = n
        analytic[which] = analytic_norm(ANALYTIC_ALIAS[which], delta, path.delta_max)
        if check:
            n2 = refined[which] = _calculator(which, path, 2 * steps).norm(delta, parity=sector)
            if abs(n2 - n) > CONVERGENCE_RTOL * max(n, n2) + CONVERGENCE_ATOL:
                converged = False
    if variable == "delta_max":
        # calculators for a one-off path are not reused
        for key in [k for k in _CALCULATORS if k[1] == path]:
            del _CALCULATORS[key]
    return index, norms, analytic, refined, converged, time.perf_counter() - t0


def sweep_delta(cfg: RunConfig, workers: int = 1) -> list[RunRecord]:
    """Norm curves over ``cfg.sweep``; rows follow the sweep order, not completion order."""
    sw = cfg.sweep
    if sw.variable not in ("delta", "delta_max"):
        raise ValueError("sweep-delta sweeps delta or delta_max")
    values = sw.values()
    tasks = [
        (i, sw.variable, float(v), sw.couplings, cfg.path, cfg.steps_per_leg, sw.sector, sw.check_convergence)
        for i, v in enumerate(values)
    ]
    if workers <= 1:
        results = [_evaluate(t) for t in tasks]
    else:
        # contiguous chunks keep each worker's calculator cache warm
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate, tasks, chunksize=chunk))
    results.sort(key=lambda r: r[0])
    h = cfg.hash
    return [
        RunRecord(h, __version__, {sw.variable: float(values[i])}, norms, analytic, conv, wall, refined=refined)
        for i, norms, analytic, refined, conv, wall in results
    ]


def _header(cfg: RunConfig, kind: str) -> list[str]:
    return [
        f"# majobraid {kind}",
        f"# version: {__version__}",
        f"# config_sha256: {cfg.hash}",
        f"# units: {UNITS}",
    ]


def sweep_columns(cfg: RunConfig) -> list[str]:
    cs = cfg.sweep.couplings
    return [cfg.sweep.variable] + [f"norm_{c}" for c in cs] + [f"analytic_{c}" for c in cs] + ["converged"]


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return FLOAT_FORMAT % x
    return str(x)


def sweep_csv(records: list[RunRecord], cfg: RunConfig) -> str:
    buf = io.StringIO()
    buf.write("\n".join(_header(cfg, "sweep-delta")) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(sweep_columns(cfg))
    var = cfg.sweep.variable
    for r in records:
        row = [r.params[var]] + [r.norms[c] for c in cfg.sweep.couplings]
        row += [r.analytic[c] for c in cfg.sweep.couplings] + [r.converged]
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def report_json(kind: str, cfg: RunConfig, payload: dict) -> str:
    doc = {"kind": kind, "version": __version__, "config_sha256": cfg.hash, "units": UNITS}
    doc.update(payload)
    return json.dumps(_json_safe(doc), indent=2, sort_keys=False) + "\n"


def sweep_json(records: list[RunRecord], cfg: RunConfig) -> str:
    return report_json(
        "sweep-delta",
        cfg,
        {"columns": sweep_columns(cfg), "records": [asdict(r) for r in records]},
    )


def write_atomic(path: Path, text: str) -> Path:
    """Write ``text`` to ``path`` through ``path.partial``.

    An interrupted run leaves only the ``.partial`` file behind, so complete
    and incomplete outputs are never confused.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def read_hash(path: Path) -> str | None:
    """Config hash recorded in a CSV header or JSON report."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return json.loads(text).get("config_sha256")
    for line in text.splitlines():
        if line.startswith("# config_sha256:"):
            return line.split(":", 1)[1].strip()
    return None
