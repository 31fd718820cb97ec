"""Batch post-processing into worst-case (sublinear) estimates.

All estimates over a finite scenario family are lower bounds on the true
worst case over the full measure family; every result object carries that
caveat.  "Quasi-sure" claims are operationalized as: the property holds on
every trial of every scenario, which makes these folds a falsification
harness, not a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .engine import EXPLODED, FAILED, Trajectory
from .errors import DomainError
from .lyapunov import LyapunovSpec

FAMILY_CAVEAT = (
    "estimate over a finite scenario family: a lower bound on the true"
    " worst-case value"
)

_TINY = float(np.finfo(float).tiny)


def group_by_scenario(batch: Sequence[Trajectory]) -> dict[int, list[Trajectory]]:
    groups: dict[int, list[Trajectory]] = {}
    for tr in batch:
        groups.setdefault(tr.scenario_id, []).append(tr)
    return groups


@dataclass
class ScenarioMean:
    scenario_id: int
    mean: float
    std_error: float
    n: int
    n_excluded: int


@dataclass
class SublinearEstimate:
    """Per-scenario Monte Carlo means and their supremum."""

    value: float
    argmax_scenario: int
    per_scenario: list[ScenarioMean]
    caveat: str = FAMILY_CAVEAT

    @property
    def std_error(self) -> float:
        for row in self.per_scenario:
            if row.scenario_id == self.argmax_scenario:
                return row.std_error
        return math.nan


def sublinear_expectation(
    functional: Callable[[Trajectory], float], batch: Sequence[Trajectory]
) -> SublinearEstimate:
    """Supremum over scenarios of the Monte Carlo mean of the functional.

    Non-finite functional values are excluded from the mean and counted on
    the per-scenario row.
    """
    if not batch:
        raise DomainError("batch must be nonempty")
    rows = []
    for sid, trajs in sorted(group_by_scenario(batch).items()):
        vals = np.array([float(functional(tr)) for tr in trajs])
        finite = np.isfinite(vals)
        kept = vals[finite]
        if kept.size == 0:
            raise DomainError(f"scenario {sid}: every functional value is non-finite")
        se = float(kept.std(ddof=1) / math.sqrt(kept.size)) if kept.size > 1 else 0.0
        rows.append(
            ScenarioMean(
                scenario_id=sid,
                mean=float(kept.mean()),
                std_error=se,
                n=int(kept.size),
                n_excluded=int((~finite).sum()),
            )
        )
    best = max(rows, key=lambda r: r.mean)
    return SublinearEstimate(
        value=best.mean, argmax_scenario=best.scenario_id, per_scenario=rows
    )


@dataclass
class ScenarioProbability:
    scenario_id: int
    probability: float
    wilson_low: float
    wilson_high: float
    n: int


@dataclass
class CapacityEstimate:
    """Supremum over scenarios of empirical event probabilities."""

    event: str
    supremum: float
    per_scenario: list[ScenarioProbability]
    family_size: int
    caveat: str = FAMILY_CAVEAT


def _wilson(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    p = k / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def capacity(
    event: Callable[[Trajectory], bool],
    batch: Sequence[Trajectory],
    description: str = "",
) -> CapacityEstimate:
    """Worst-case probability of the event over the scenario family."""
    if not batch:
        raise DomainError("batch must be nonempty")
    rows = []
    for sid, trajs in sorted(group_by_scenario(batch).items()):
        hits = sum(1 for tr in trajs if bool(event(tr)))
        n = len(trajs)
        lo, hi = _wilson(hits, n)
        rows.append(
            ScenarioProbability(
                scenario_id=sid,
                probability=hits / n,
                wilson_low=lo,
                wilson_high=hi,
                n=n,
            )
        )
    return CapacityEstimate(
        event=description,
        supremum=max(r.probability for r in rows),
        per_scenario=rows,
        family_size=len(rows),
    )


@dataclass
class TrajectoryMetrics:
    scenario_id: int
    trial: int
    tail_oscillation: float
    terminal_eta: float
    exponent: float
    exponent_clamped: bool
    kernel_distance: float
    min_norm: float
    stop_reason: str


@dataclass
class ConvergenceReport:
    """Per-trajectory convergence metrics with worst-case aggregates.

    Aggregates run over completed (and target-hitting) trajectories;
    exploded or failed ones are listed separately, never silently dropped.
    """

    metrics: list[TrajectoryMetrics]
    tail_fraction: float
    max_tail_oscillation: float
    max_terminal_eta: float
    max_exponent: float
    max_kernel_distance: float
    min_min_norm: float
    quantiles: dict = field(default_factory=dict)
    excluded: list[TrajectoryMetrics] = field(default_factory=list)
    n_exploded: int = 0
    n_failed: int = 0
    caveat: str = FAMILY_CAVEAT

    def to_summary(self) -> dict:
        return {
            "tail_fraction": self.tail_fraction,
            "max_tail_oscillation": self.max_tail_oscillation,
            "max_terminal_eta": self.max_terminal_eta,
            "max_exponent": self.max_exponent,
            "max_kernel_distance": self.max_kernel_distance,
            "min_min_norm": self.min_min_norm,
            "quantiles": self.quantiles,
            "n_trajectories": len(self.metrics),
            "n_exploded": self.n_exploded,
            "n_failed": self.n_failed,
            "caveat": self.caveat,
        }


def lyapunov_exponent(tr: Trajectory) -> tuple[float, bool]:
    """Pathwise rate log(|x(T)| / |x(0)|) / T, clamped away from zero norm."""
    term = tr.terminal_norm
    clamped = False
    if term < _TINY:
        term = _TINY
        clamped = True
    elapsed = tr.elapsed
    if elapsed <= 0:
        return math.nan, clamped
    return math.log(term / tr.initial_norm) / elapsed, clamped


def _metrics_for(
    tr: Trajectory,
    spec: LyapunovSpec | None,
    kernel_distance: Callable[[np.ndarray], float],
    tail_fraction: float,
) -> TrajectoryMetrics:
    n = len(tr.times)
    k0 = min(n - 1, int(math.floor((1.0 - tail_fraction) * (n - 1))))
    if spec is not None:
        tail_vals = [
            spec.value(tr.states[k], float(tr.times[k])) for k in range(k0, n)
        ]
        osc = float(max(tail_vals) - min(tail_vals))
        eta_T = spec.eta_value(tr.states[-1])
    else:
        osc = math.nan
        eta_T = math.nan
    expo, clamped = lyapunov_exponent(tr)
    return TrajectoryMetrics(
        scenario_id=tr.scenario_id,
        trial=tr.trial,
        tail_oscillation=osc,
        terminal_eta=eta_T,
        exponent=expo,
        exponent_clamped=clamped,
        kernel_distance=float(kernel_distance(tr.states[-1])),
        min_norm=tr.min_norm,
        stop_reason=tr.stop_reason,
    )


def convergence_report(
    batch: Sequence[Trajectory],
    spec: LyapunovSpec | None = None,
    kernel_distance: Callable[[np.ndarray], float] | None = None,
    tail_fraction: float = 0.2,
) -> ConvergenceReport:
    """Fold a batch into the quantities the convergence statements speak about.

    Tail oscillation is the max-minus-min of V over the final
    ``tail_fraction`` of each recorded path (the finite-horizon surrogate for
    "the limit of V exists"); the default kernel distance |x| corresponds to
    comparison functions vanishing only at the origin.
    """
    if not batch:
        raise DomainError("batch must be nonempty")
    if not (0.0 < tail_fraction < 1.0):
        raise DomainError("tail_fraction must lie in (0, 1)")
    if kernel_distance is None:
        kernel_distance = lambda x: float(np.linalg.norm(x))  # noqa: E731
    kept: list[TrajectoryMetrics] = []
    excluded: list[TrajectoryMetrics] = []
    n_exploded = n_failed = 0
    for tr in batch:
        m = _metrics_for(tr, spec, kernel_distance, tail_fraction)
        if tr.stop_reason == EXPLODED:
            n_exploded += 1
            excluded.append(m)
        elif tr.stop_reason == FAILED:
            n_failed += 1
            excluded.append(m)
        else:
            kept.append(m)
    if kept:
        exps = np.array([m.exponent for m in kept])
        oscs = np.array([m.tail_oscillation for m in kept])
        etas = np.array([m.terminal_eta for m in kept])
        kds = np.array([m.kernel_distance for m in kept])
        mins = np.array([m.min_norm for m in kept])
        quantiles = {
            "exponent_q50": float(np.nanquantile(exps, 0.5)),
            "exponent_q90": float(np.nanquantile(exps, 0.9)),
            "terminal_eta_q50": float(np.nanquantile(etas, 0.5)),
        }
        agg = dict(
            max_tail_oscillation=float(np.nanmax(oscs)),
            max_terminal_eta=float(np.nanmax(etas)),
            max_exponent=float(np.nanmax(exps)),
            max_kernel_distance=float(np.nanmax(kds)),
            min_min_norm=float(np.nanmin(mins)),
        )
    else:
        quantiles = {}
        agg = dict(
            max_tail_oscillation=math.nan,
            max_terminal_eta=math.nan,
            max_exponent=math.nan,
            max_kernel_distance=math.nan,
            min_min_norm=math.nan,
        )
    return ConvergenceReport(
        metrics=kept,
        tail_fraction=tail_fraction,
        quantiles=quantiles,
        excluded=excluded,
        n_exploded=n_exploded,
        n_failed=n_failed,
        **agg,
    )


def upcrossings(series: Sequence[float], alpha: float, beta: float) -> int:
    """Completed upcrossings of [alpha, beta]: reach <= alpha, then >= beta.

    Implements the recursive stopping rule directly on the ordered samples;
    the count over a finite index set equals the supremum over its subsets,
    so a full scan is exact.
    """
    if not alpha < beta:
        raise DomainError("need alpha < beta")
    count = 0
    below = False
    for v in series:
        if not below:
            if v <= alpha:
                below = True
        elif v >= beta:
            count += 1
            below = False
    return count


@dataclass
class UpcrossingCheck:
    """Monte Carlo comparison of the upcrossing-count bound."""

    passed: bool
    lhs: float
    lhs_std_error: float
    rhs: float
    rhs_std_error: float
    alpha: float
    beta: float
    n_paths: int
    horizon: int
    notes: str


def upcrossing_inequality_check(
    samplers,
    alpha: float,
    beta: float,
    n_paths: int,
    horizon: int,
    seed: int = 0,
) -> UpcrossingCheck:
    """Estimate both sides of E[U(alpha, beta)] <= E[(M(N) - alpha)+]/(beta - alpha).

    ``samplers`` is one callable ``(rng, n_paths, horizon) -> (n_paths,
    horizon)`` array of process values M(1..N), or a list of them (one per
    measure); suprema of both sides are taken across the list.  The
    supermartingale hypothesis on -M is asserted by the caller, not checked;
    a failing comparison flags it as the likely cause.
    """
    if not alpha < beta:
        raise DomainError("need alpha < beta")
    if callable(samplers):
        samplers = [samplers]
    lhs_rows, rhs_rows = [], []
    for i, sampler in enumerate(samplers):
        rng = np.random.default_rng([seed, i])
        paths = np.asarray(sampler(rng, n_paths, horizon), dtype=float)
        if paths.shape != (n_paths, horizon):
            raise DomainError(
                f"sampler must return shape ({n_paths}, {horizon}), got {paths.shape}"
            )
        counts = np.array([upcrossings(p, alpha, beta) for p in paths], dtype=float)
        bound = np.maximum(paths[:, -1] - alpha, 0.0) / (beta - alpha)
        lhs_rows.append((counts.mean(), counts.std(ddof=1) / math.sqrt(n_paths)))
        rhs_rows.append((bound.mean(), bound.std(ddof=1) / math.sqrt(n_paths)))
    lhs, lhs_se = max(lhs_rows)
    rhs, rhs_se = max(rhs_rows)
    combined = math.hypot(lhs_se, rhs_se)
    passed = lhs <= rhs + 3.0 * combined
    notes = "" if passed else (
        "inequality violated: the supermartingale hypothesis on -M likely fails"
    )
    return UpcrossingCheck(
        passed=passed,
        lhs=lhs,
        lhs_std_error=lhs_se,
        rhs=rhs,
        rhs_std_error=rhs_se,
        alpha=alpha,
        beta=beta,
        n_paths=n_paths,
        horizon=horizon,
        notes=notes,
    )
