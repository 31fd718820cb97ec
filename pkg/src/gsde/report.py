"""Deterministic output documents: JSON summaries and delimited data files.

Summaries are canonical JSON (sorted keys, fixed indentation, no timestamps)
so equal configurations produce byte-identical documents.  Every document
carries a schema-version field.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import SCHEMA_VERSION
from .diagnostics import ConvergenceReport, group_by_scenario
from .engine import Trajectory
from .scenarios import ScenarioFamily, VolatilityScenario

_LOG_FLOOR = math.log(float(np.finfo(float).tiny))


def clean_for_json(obj):
    """Recursively convert to JSON-safe types; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): clean_for_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_for_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean_for_json(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):  # before int: bool subclasses int
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_summary(path: str | Path, payload: dict) -> Path:
    """Write a canonical JSON document with the schema version stamped in."""
    doc = dict(payload)
    doc["schema_version"] = SCHEMA_VERSION
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(clean_for_json(doc), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n")
    return path


def _stats(values: np.ndarray) -> dict:
    if values.size == 0:
        return {"min": None, "max": None, "mean": None, "median": None}
    return {
        "min": float(np.min(values)),
        "max": float(np.max(values)),
        "mean": float(np.mean(values)),
        "median": float(np.median(values)),
    }


def batch_summary(
    batch: Sequence[Trajectory],
    family: ScenarioFamily,
    config_echo: dict,
    convergence: ConvergenceReport | None = None,
    case: str | None = None,
) -> dict:
    """Structured description of a simulation batch for the summary document."""
    reasons_total: dict[str, int] = {}
    per_scenario = []
    by_scenario = group_by_scenario(batch)
    scen_by_id = {s.id: s for s in family}
    for sid in sorted(by_scenario):
        trajs = by_scenario[sid]
        reasons: dict[str, int] = {}
        for tr in trajs:
            reasons[tr.stop_reason] = reasons.get(tr.stop_reason, 0) + 1
            reasons_total[tr.stop_reason] = reasons_total.get(tr.stop_reason, 0) + 1
        terminal = np.array([tr.terminal_norm for tr in trajs])
        min_norms = np.array([tr.min_norm for tr in trajs])
        scen = scen_by_id.get(sid)
        row = {
            "scenario_id": sid,
            "n_trials": len(trajs),
            "stop_reasons": reasons,
            "terminal_norm": _stats(terminal),
            "min_norm": _stats(min_norms),
        }
        if scen is not None and scen.is_constant():
            row["sigma_sq_constant"] = [float(v) for v in scen.values[0]]
        per_scenario.append(row)
    summary = {
        "kind": "batch_summary",
        "case": case,
        "config": config_echo,
        "n_scenarios": len(by_scenario),
        "n_trajectories": len(batch),
        "stop_reasons": reasons_total,
        "per_scenario": per_scenario,
        "caveat": (
            "worst-case statistics over a finite scenario family are lower"
            " bounds on the true sublinear values"
        ),
    }
    if convergence is not None:
        summary["convergence"] = convergence.to_summary()
    return summary


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trajectories_csv(
    path: str | Path, trajs: Sequence[Trajectory], scenario: VolatilityScenario
) -> Path:
    """Rows of t, state components, and driving variances, one file per scenario.

    A leading trial column distinguishes the paths sharing the file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d = trajs[0].states.shape[1]
    m = scenario.m
    header = (
        ["trial", "t"]
        + [f"x_{i + 1}" for i in range(d)]
        + [f"sigma_sq_{j + 1}" for j in range(m)]
    )
    lines = [",".join(header)]
    n_steps = scenario.n_steps
    for tr in sorted(trajs, key=lambda tr: tr.trial):
        for k, t in enumerate(tr.times):
            step = min(int(round(t / scenario.dt)), n_steps - 1)
            row = (
                [str(tr.trial), _fmt(t)]
                + [_fmt(v) for v in tr.states[k]]
                + [_fmt(v) for v in scenario.values[step]]
            )
            lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def lognorm_table(
    batch: Sequence[Trajectory], max_rows: int = 512
) -> tuple[np.ndarray, list[str], np.ndarray, list[int]]:
    """Align log|x(t)| across trajectories on the longest recorded grid.

    Returns (times, column labels, matrix with NaN padding, scenario ids per
    column).  Norms are clamped at the smallest positive double before the
    log, so fully decayed states chart at the floor instead of -inf.
    """
    longest = max(batch, key=lambda tr: len(tr.times))
    times = np.asarray(longest.times)
    stride = max(1, (len(times) - 1) // max_rows) if len(times) > 1 else 1
    keep = np.arange(0, len(times), stride)
    if keep[-1] != len(times) - 1:
        keep = np.append(keep, len(times) - 1)
    times = times[keep]
    cols = np.full((len(times), len(batch)), np.nan)
    labels = []
    scenario_ids = []
    for j, tr in enumerate(batch):
        norms = np.linalg.norm(tr.states, axis=1)
        vals = np.log(np.maximum(norms, float(np.finfo(float).tiny)))
        take = keep[keep < len(vals)]
        cols[: len(take), j] = vals[take]
        labels.append(f"s{tr.scenario_id}_t{tr.trial}")
        scenario_ids.append(tr.scenario_id)
    return times, labels, cols, scenario_ids


def write_lognorm_csv(
    path: str | Path,
    times: np.ndarray,
    labels: list[str],
    matrix: np.ndarray,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(["t"] + labels)]
    for i, t in enumerate(times):
        row = [_fmt(t)]
        for v in matrix[i]:
            row.append("" if not math.isfinite(v) else _fmt(v))
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_metrics_csv(path: str | Path, convergence: ConvergenceReport) -> Path:
    """Per-trajectory convergence metrics, one row each, excluded rows last."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = (
        "scenario_id,trial,tail_oscillation,terminal_eta,exponent,"
        "kernel_distance,min_norm,stop_reason"
    )
    lines = [header]
    for m in list(convergence.metrics) + list(convergence.excluded):
        lines.append(
            ",".join(
                [
                    str(m.scenario_id),
                    str(m.trial),
                    _fmt(m.tail_oscillation),
                    _fmt(m.terminal_eta),
                    _fmt(m.exponent),
                    _fmt(m.kernel_distance),
                    _fmt(m.min_norm),
                    m.stop_reason,
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def write_margins_csv(path: str | Path, points: np.ndarray, margins: np.ndarray) -> Path:
    """Generator-bound margins against sample radius, for external plotting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["radius,margin"]
    radii = np.linalg.norm(points, axis=1)
    for r, mg in zip(radii, margins):
        if math.isfinite(mg):
            lines.append(f"{_fmt(r)},{_fmt(mg)}")
    path.write_text("\n".join(lines) + "\n")
    return path
