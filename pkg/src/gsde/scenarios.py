"""Volatility scenarios: piecewise-constant selections from the uncertainty set.

Each scenario fixes one variance value per noise channel per time step and
thereby selects a single probability measure from the family indexed by the
uncertainty set.  Monte Carlo estimates over a finite scenario family are
lower bounds on the corresponding worst-case (sublinear) quantities; every
report downstream carries that caveat.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ConfigurationError, DomainError
from .gfunc import DIAGONAL, SCALAR, UncertaintySet

CONSTANT = "constant"
PIECEWISE_RANDOM = "piecewise_random"
ENDPOINTS = "endpoints"

_MODES = (CONSTANT, PIECEWISE_RANDOM, ENDPOINTS)
_ENDPOINT_CAP = 256  # 2^m combinations enumerated only for m <= 8


@dataclass(frozen=True)
class VolatilityScenario:
    """One admissible variance path: values[n, i] is sigma_i^2 on step n."""

    values: np.ndarray  # shape (n_steps, m)
    dt: float
    id: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DomainError("scenario values must be a nonempty (n_steps, m) array")
        if self.dt <= 0:
            raise DomainError("scenario dt must be positive")
        object.__setattr__(self, "values", v)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0]))


@dataclass(frozen=True)
class ScenarioFamily:
    """A finite list of scenarios sharing (n_steps, m, dt)."""

    scenarios: tuple[VolatilityScenario, ...]
    mode: str
    grid_k: int

    def __post_init__(self):
        if not self.scenarios:
            raise DomainError("scenario family must be nonempty")
        s0 = self.scenarios[0]
        for s in self.scenarios:
            if (s.n_steps, s.m, s.dt) != (s0.n_steps, s0.m, s0.dt):
                raise DomainError("all scenarios in a family must share n_steps, m, dt")

    def __iter__(self) -> Iterator[VolatilityScenario]:
        return iter(self.scenarios)

    def __len__(self) -> int:
        return len(self.scenarios)

    @property
    def dt(self) -> float:
        return self.scenarios[0].dt

    @property
    def n_steps(self) -> int:
        return self.scenarios[0].n_steps

    @property
    def m(self) -> int:
        return self.scenarios[0].m

    def to_manifest(self) -> dict:
        """Reproducibility manifest; constant scenarios stay compact."""
        rows = []
        for s in self.scenarios:
            if s.is_constant():
                rows.append({"id": s.id, "constant": [float(v) for v in s.values[0]]})
            else:
                rows.append({"id": s.id, "values": s.values.tolist()})
        return {
            "mode": self.mode,
            "grid_k": self.grid_k,
            "n_steps": self.n_steps,
            "m": self.m,
            "dt": self.dt,
            "scenarios": rows,
        }


def variance_grid(lo: float, hi: float, grid_k: int) -> np.ndarray:
    """Closed uniform partition of [lo, hi] into grid_k intervals (k+1 points)."""
    if lo == hi:
        return np.array([lo])
    if grid_k < 1:
        raise ConfigurationError("grid_k must be >= 1 for a non-degenerate interval")
    return lo + (hi - lo) * np.arange(grid_k + 1) / grid_k


def generate_family(
    u: UncertaintySet,
    n_steps: int,
    dt: float,
    grid_k: int,
    mode: str,
    n_scenarios: int = 1,
    seed: int = 0,
) -> ScenarioFamily:
    """Build a scenario family from the uncertainty set.

    Modes:

    * ``constant`` -- one scenario per grid point, held for all steps and
      channels (channel i uses its own interval's grid point at the same
      fractional position).
    * ``piecewise_random`` -- ``n_scenarios`` scenarios with every entry drawn
      uniformly from the grid, seeded and reproducible.
    * ``endpoints`` -- the extreme constant scenarios: 2 for a scalar
      interval, all 2^m per-channel combinations for diagonal intervals
      (capped at 2^8; beyond the cap, ``n_scenarios`` random corner
      assignments are drawn instead).

    The family is a pure function of all arguments.
    """
    if u.kind not in (SCALAR, DIAGONAL):
        raise ConfigurationError(
            "scenario generation requires an interval-kind uncertainty set"
        )
    if mode not in _MODES:
        raise ConfigurationError(f"unknown scenario mode {mode!r}")
    if n_steps < 1:
        raise ConfigurationError("n_steps must be >= 1")
    if dt <= 0:
        raise ConfigurationError("dt must be positive")
    if n_scenarios < 1:
        raise ConfigurationError("n_scenarios must be >= 1")

    lo, hi = u.sigma_sq_lo, u.sigma_sq_hi
    degenerate = bool(np.all(lo == hi))
    if grid_k < 1 and not degenerate:
        raise ConfigurationError("grid_k must be >= 1 for a non-degenerate interval")

    scenarios: list[VolatilityScenario] = []

    if degenerate:
        values = np.tile(lo, (n_steps, 1))
        scenarios.append(VolatilityScenario(values=values, dt=dt, id=0))
        return ScenarioFamily(tuple(scenarios), mode=mode, grid_k=grid_k)

    if mode == CONSTANT:
        # fractional grid positions shared across channels
        fracs = np.arange(grid_k + 1) / grid_k
        for j, frac in enumerate(fracs):
            level = lo + (hi - lo) * frac
            scenarios.append(
                VolatilityScenario(values=np.tile(level, (n_steps, 1)), dt=dt, id=j)
            )
    elif mode == PIECEWISE_RANDOM:
        rng = np.random.default_rng(seed)
        grids = [variance_grid(float(lo[i]), float(hi[i]), grid_k) for i in range(u.m)]
        for j in range(n_scenarios):
            values = np.empty((n_steps, u.m))
            for i, grid in enumerate(grids):
                values[:, i] = grid[rng.integers(0, len(grid), size=n_steps)]
            scenarios.append(VolatilityScenario(values=values, dt=dt, id=j))
    else:  # ENDPOINTS
        if u.kind == SCALAR:
            corners = [lo.copy(), hi.copy()]
        elif 2 ** u.m <= _ENDPOINT_CAP:
            corners = []
            for mask in range(2 ** u.m):
                pick = [(mask >> i) & 1 for i in range(u.m)]
                corners.append(np.where(pick, hi, lo).astype(float))
        else:
            rng = np.random.default_rng(seed)
            corners = [
                np.where(rng.integers(0, 2, size=u.m), hi, lo).astype(float)
                for _ in range(n_scenarios)
            ]
        for j, corner in enumerate(corners):
            scenarios.append(
                VolatilityScenario(values=np.tile(corner, (n_steps, 1)), dt=dt, id=j)
            )

    return ScenarioFamily(tuple(scenarios), mode=mode, grid_k=grid_k)


def validate_scenario(s: VolatilityScenario, u: UncertaintySet) -> bool:
    """True iff every entry lies inside the closed per-channel interval."""
    if u.kind not in (SCALAR, DIAGONAL):
        raise ConfigurationError("validation requires an interval-kind uncertainty set")
    if s.m != u.m:
        raise DomainError(f"scenario has m={s.m}, uncertainty set has m={u.m}")
    return bool(
        np.all(s.values >= u.sigma_sq_lo) and np.all(s.values <= u.sigma_sq_hi)
    )
