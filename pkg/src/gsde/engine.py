"""Euler-Maruyama simulation of G-SDEs under fixed volatility scenarios.

The state equation is

    dx = f(x, t) dt + g(x, t) dB(t) + h(x, t) d<B>(t),

where B is the uncertain-volatility noise.  Under a fixed scenario the
channel increments are independent Gaussians dB_i ~ N(0, sigma_i,n^2 dt) and
the quadratic-variation increments are the deterministic d<B_i> =
sigma_i,n^2 dt; cross-variations between channels are identically zero, so
the h tensor is contracted only on its diagonal noise indices.

Randomness is counter-based: every (base_seed, scenario id, trial) triple
keys its own Philox stream, which makes batches reproducible, independent of
execution order, and safe to parallelize.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError
from .scenarios import ScenarioFamily, VolatilityScenario

COMPLETED = "completed"
EXPLODED = "exploded"
HIT_TARGET = "hit_target"
FAILED = "failed"

DEFAULT_EXPLODE_RADIUS = 1e8

# target number of array elements per vectorized chunk (memory / speed knob;
# the per-chunk increment block is this many float64s, ~160 MB)
_CHUNK_ELEMENTS = 20_000_000


def trial_entropy(base_seed: int, scenario_id: int, trial: int) -> tuple[int, int, int]:
    """Entropy tuple keying the RNG streams of one (scenario, trial) pair."""
    return (int(base_seed), int(scenario_id), int(trial))


def _rng_pair(entropy) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent Philox streams for (increments, initial condition)."""
    ss = np.random.SeedSequence([int(v) for v in entropy])
    inc_ss, x0_ss = ss.spawn(2)
    return (
        np.random.Generator(np.random.Philox(inc_ss)),
        np.random.Generator(np.random.Philox(x0_ss)),
    )


class GSdeSystem:
    """The (f, g, h) triple defining a G-SDE on R^d with m noise channels.

    Callbacks take (x, t) with x of shape (d,) and return arrays of shape
    (d,), (d, m) and (d, m, m) respectively; h must be symmetric in its last
    two indices and may be omitted (treated as zero).  Callbacks that also
    accept stacked states of shape (B, d), returning results stacked along
    the leading axis, are detected at construction and enable the vectorized
    batch path.
    """

    def __init__(
        self,
        d: int,
        m: int,
        f: Callable,
        g: Callable,
        h: Callable | None = None,
        name: str = "system",
    ):
        if d < 1 or m < 1:
            raise ConfigurationError("state and noise dimensions must be >= 1")
        self.d = int(d)
        self.m = int(m)
        self.f = f
        self.g = g
        self.h = h
        self.name = name
        self._probe()

    def _probe(self) -> None:
        rng = np.random.default_rng(0xC0FFEE)
        X = 0.5 * rng.standard_normal((2, self.d))
        for t in (0.0, 1.0):
            rows_f = [np.asarray(self.f(X[i], t), dtype=float) for i in range(2)]
            rows_g = [np.asarray(self.g(X[i], t), dtype=float) for i in range(2)]
            if rows_f[0].shape != (self.d,):
                raise ConfigurationError(
                    f"f must return shape ({self.d},), got {rows_f[0].shape}"
                )
            if rows_g[0].shape != (self.d, self.m):
                raise ConfigurationError(
                    f"g must return shape ({self.d}, {self.m}), got {rows_g[0].shape}"
                )
            if self.h is not None:
                for i in range(2):
                    hv = np.asarray(self.h(X[i], t), dtype=float)
                    if hv.shape != (self.d, self.m, self.m):
                        raise ConfigurationError(
                            f"h must return shape ({self.d}, {self.m}, {self.m}),"
                            f" got {hv.shape}"
                        )
                    if not np.allclose(hv, hv.transpose(0, 2, 1), atol=1e-9):
                        raise DomainError("h must be symmetric in its last two indices")
        self._f_batched = self._batch_capable(self.f, X, (2, self.d))
        self._g_batched = self._batch_capable(self.g, X, (2, self.d, self.m))
        self._h_batched = (
            self._batch_capable(self.h, X, (2, self.d, self.m, self.m))
            if self.h is not None
            else True
        )

    @staticmethod
    def _batch_capable(fn, X, want_shape) -> bool:
        try:
            out = np.asarray(fn(X, 0.0), dtype=float)
        except Exception:
            return False
        if out.shape != want_shape:
            return False
        rows = np.stack([np.asarray(fn(X[i], 0.0), dtype=float) for i in range(X.shape[0])])
        # tolerance, not equality: BLAS may round batched and row-wise
        # evaluations of the same callback differently by an ulp
        return bool(np.allclose(out, rows, rtol=1e-9, atol=1e-12))

    # batched evaluation (row loop fallback when a callback is per-state only)

    def eval_f(self, X: np.ndarray, t: float) -> np.ndarray:
        if self._f_batched:
            return np.asarray(self.f(X, t), dtype=float)
        return np.stack([np.asarray(self.f(x, t), dtype=float) for x in X])

    def eval_g(self, X: np.ndarray, t: float) -> np.ndarray:
        if self._g_batched:
            return np.asarray(self.g(X, t), dtype=float)
        return np.stack([np.asarray(self.g(x, t), dtype=float) for x in X])

    def eval_h(self, X: np.ndarray, t: float) -> np.ndarray | None:
        if self.h is None:
            return None
        if self._h_batched:
            return np.asarray(self.h(X, t), dtype=float)
        return np.stack([np.asarray(self.h(x, t), dtype=float) for x in X])


@dataclass
class Trajectory:
    """One simulated path plus full-resolution scalar statistics.

    ``states`` holds the path at the recording stride; ``min_norm``,
    ``max_norm`` and ``quadratic_variation`` are accumulated at every
    executed step regardless of stride.  For runs that stop early the last
    recorded point is the exact stopping state, so the final time interval
    may be shorter than the stride; completed runs have uniform times.
    """

    times: np.ndarray
    states: np.ndarray
    scenario_id: int
    trial: int
    seed_entropy: tuple
    dt: float
    stop_reason: str
    stop_step: int
    n_steps_total: int
    min_norm: float
    max_norm: float
    quadratic_variation: np.ndarray
    record_stride: int = 1
    note: str = ""

    @property
    def initial_state(self) -> np.ndarray:
        return self.states[0]

    @property
    def terminal_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def terminal_norm(self) -> float:
        return float(np.linalg.norm(self.states[-1]))

    @property
    def initial_norm(self) -> float:
        return float(np.linalg.norm(self.states[0]))

    @property
    def elapsed(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def completed(self) -> bool:
        return self.stop_reason == COMPLETED


def _resolve_x0(x0, rng_x0: np.random.Generator, d: int) -> np.ndarray:
    if callable(x0):
        v = np.asarray(x0(rng_x0), dtype=float)
    else:
        v = np.asarray(x0, dtype=float)
    if v.shape != (d,):
        raise DomainError(f"x0 must have shape ({d},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError("x0 must be finite")
    return v


def _record_grid(n_steps: int, stride: int) -> np.ndarray:
    return np.arange(0, n_steps + 1, stride)


def _simulate_chunk(
    sys: GSdeSystem,
    scen: VolatilityScenario,
    x0s: np.ndarray,
    rngs: list[np.random.Generator],
    explode_radius: float,
    target_radius: float,
    record_stride: int,
) -> list[dict]:
    """Advance a chunk of trials through all steps of one scenario.

    Returns per-trial raw records; trial freezing handles early stops so the
    surviving rows stay vectorized.
    """
    B = x0s.shape[0]
    N, m, d, dt = scen.n_steps, scen.m, sys.d, scen.dt
    values = scen.values
    sqrt_v_dt = np.sqrt(values * dt)  # (N, m) Gaussian std per step/channel
    dv = values * dt  # (N, m) quadratic-variation increments

    # per-trial standard-normal blocks, one stream each
    Z = np.empty((B, N, m))
    for b, rng in enumerate(rngs):
        Z[b] = rng.standard_normal((N, m))

    grid = _record_grid(N, record_stride)
    rec = np.empty((B, len(grid), d))
    rec[:, 0] = x0s

    X = x0s.copy()
    norms = np.linalg.norm(X, axis=1)
    min_norm = norms.copy()
    max_norm = norms.copy()
    qv = np.zeros((B, m))
    stop_step = np.full(B, N, dtype=int)
    reason = np.array([COMPLETED] * B, dtype=object)
    note = np.array([""] * B, dtype=object)
    # stopping state for early stops (exact, possibly off the record grid)
    stop_state = np.zeros((B, d))
    active = np.ones(B, dtype=bool)

    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(N):
            if not active.any():
                break
            idx = np.flatnonzero(active)
            Xa = X[idx]
            t = n * dt
            dB = Z[idx, n, :] * sqrt_v_dt[n]
            Fa = sys.eval_f(Xa, t)
            Ga = sys.eval_g(Xa, t)
            Xn = Xa + Fa * dt + np.einsum("bij,bj->bi", Ga, dB)
            Ha = sys.eval_h(Xa, t)
            if Ha is not None:
                diag_h = np.einsum("bkii->bki", Ha)
                Xn = Xn + diag_h @ dv[n]

            finite = np.isfinite(Xn).all(axis=1)
            if not finite.all():
                # revert non-finite rows to their pre-step state and stop them
                bad = idx[~finite]
                stop_state[bad] = Xa[~finite]
                stop_step[bad] = n
                reason[bad] = EXPLODED
                note[bad] = "non-finite state"
                active[bad] = False
                idx = idx[finite]
                Xn = Xn[finite]
                if idx.size == 0:
                    continue

            X[idx] = Xn
            qv[idx] += dv[n]
            nn = np.linalg.norm(Xn, axis=1)
            # a finite state can still overflow the squared norm; such rows
            # are far past any sane radius, so they stop as exploded too
            nn_ok = np.isfinite(nn)
            if nn_ok.any():
                ok = idx[nn_ok]
                min_norm[ok] = np.minimum(min_norm[ok], nn[nn_ok])
                max_norm[ok] = np.maximum(max_norm[ok], nn[nn_ok])

            exploded = ~nn_ok | (nn >= explode_radius)
            if target_radius > 0:
                hit = (nn <= target_radius) & ~exploded
            else:
                hit = np.zeros_like(exploded)
            stopped = exploded | hit
            if stopped.any():
                rows = idx[stopped]
                stop_state[rows] = Xn[stopped]
                stop_step[rows] = n + 1
                reason[rows] = np.where(exploded[stopped], EXPLODED, HIT_TARGET)
                active[rows] = False

            if (n + 1) % record_stride == 0:
                rec[:, (n + 1) // record_stride] = X  # frozen rows repeat; truncated below

    out = []
    for b in range(B):
        if reason[b] == COMPLETED:
            times = grid * dt
            states = rec[b]
        else:
            s = stop_step[b]
            n_grid = s // record_stride + 1  # grid points at steps <= s
            times = grid[:n_grid] * dt
            states = rec[b, :n_grid]
            if (s % record_stride) != 0:
                times = np.append(times, s * dt)
                states = np.vstack([states, stop_state[b][None, :]])
            else:
                states = states.copy()
                states[-1] = stop_state[b]
        out.append(
            dict(
                times=times,
                states=states,
                stop_reason=str(reason[b]),
                stop_step=int(stop_step[b]),
                min_norm=float(min_norm[b]),
                max_norm=float(max_norm[b]),
                quadratic_variation=qv[b].copy(),
                note=str(note[b]),
            )
        )
    return out


def simulate(
    sys: GSdeSystem,
    scen: VolatilityScenario,
    x0,
    seed,
    explode_radius: float = DEFAULT_EXPLODE_RADIUS,
    target_radius: float = 0.0,
    record_stride: int = 1,
    trial: int = 0,
) -> Trajectory:
    """Simulate one path of the system under a fixed scenario.

    ``x0`` is either a state vector or a callable drawing one from a
    dedicated RNG stream.  ``seed`` may be an int or an entropy tuple (see
    :func:`trial_entropy`); equal seeds and scenarios give bit-identical
    trajectories.  Radius thresholds stop the run early: growing past
    ``explode_radius`` (or going non-finite) marks the path exploded, and a
    positive ``target_radius`` marks paths that reach it.
    """
    if scen.m != sys.m:
        raise DomainError(f"scenario has m={scen.m}, system has m={sys.m}")
    if record_stride < 1 or scen.n_steps % record_stride != 0:
        raise ConfigurationError("record_stride must be >= 1 and divide n_steps")
    if explode_radius <= target_radius:
        raise ConfigurationError("explode_radius must exceed target_radius")
    entropy = (int(seed),) if np.isscalar(seed) else tuple(int(v) for v in seed)
    rng_inc, rng_x0 = _rng_pair(entropy)
    x0v = _resolve_x0(x0, rng_x0, sys.d)
    rec = _simulate_chunk(
        sys,
        scen,
        x0v[None, :],
        [rng_inc],
        explode_radius,
        target_radius,
        record_stride,
    )[0]
    return Trajectory(
        scenario_id=scen.id,
        trial=trial,
        seed_entropy=entropy,
        dt=scen.dt,
        n_steps_total=scen.n_steps,
        record_stride=record_stride,
        **rec,
    )


def simulate_batch(
    sys: GSdeSystem,
    family: ScenarioFamily,
    x0,
    n_trials_per_scenario: int,
    base_seed: int,
    explode_radius: float = DEFAULT_EXPLODE_RADIUS,
    target_radius: float = 0.0,
    record_stride: int = 1,
) -> list[Trajectory]:
    """Simulate ``n_trials_per_scenario`` paths under every scenario.

    Each (scenario, trial) pair owns a Philox stream keyed on
    ``(base_seed, scenario id, trial)``, so the result is a deterministic
    function of the arguments and independent of execution order; a batch of
    one reproduces :func:`simulate` with the derived entropy.  Per-trajectory
    failures are tagged on the returned records instead of aborting the
    batch.
    """
    if n_trials_per_scenario < 1:
        raise ConfigurationError("n_trials_per_scenario must be >= 1")
    if explode_radius <= target_radius:
        raise ConfigurationError("explode_radius must exceed target_radius")
    N, m = family.n_steps, family.m
    if record_stride < 1 or N % record_stride != 0:
        raise ConfigurationError("record_stride must be >= 1 and divide n_steps")
    chunk = max(1, min(n_trials_per_scenario, _CHUNK_ELEMENTS // max(1, N * m)))
    out: list[Trajectory] = []
    for scen in family:
        if scen.m != sys.m:
            raise DomainError(f"scenario has m={scen.m}, system has m={sys.m}")
        for lo in range(0, n_trials_per_scenario, chunk):
            trials = range(lo, min(lo + chunk, n_trials_per_scenario))
            entropies = [trial_entropy(base_seed, scen.id, t) for t in trials]
            pairs = [_rng_pair(e) for e in entropies]
            x0s = np.stack([_resolve_x0(x0, p[1], sys.d) for p in pairs])
            try:
                recs = _simulate_chunk(
                    sys,
                    scen,
                    x0s,
                    [p[0] for p in pairs],
                    explode_radius,
                    target_radius,
                    record_stride,
                )
            except Exception:
                # isolate the failing trial(s); survivors still complete
                recs = []
                for b, trial in enumerate(trials):
                    try:
                        recs.append(
                            _simulate_chunk(
                                sys,
                                scen,
                                x0s[b : b + 1],
                                [_rng_pair(entropies[b])[0]],
                                explode_radius,
                                target_radius,
                                record_stride,
                            )[0]
                        )
                    except Exception as exc:  # tagged failure, batch continues
                        recs.append(
                            dict(
                                times=np.array([0.0]),
                                states=x0s[b : b + 1].copy(),
                                stop_reason=FAILED,
                                stop_step=0,
                                min_norm=float(np.linalg.norm(x0s[b])),
                                max_norm=float(np.linalg.norm(x0s[b])),
                                quadratic_variation=np.zeros(m),
                                note=repr(exc),
                            )
                        )
            for trial, entropy, rec in zip(trials, entropies, recs):
                out.append(
                    Trajectory(
                        scenario_id=scen.id,
                        trial=int(trial),
                        seed_entropy=entropy,
                        dt=scen.dt,
                        n_steps_total=N,
                        record_stride=record_stride,
                        **rec,
                    )
                )
    return out


def sphere_sampler(radius: float, d: int) -> Callable[[np.random.Generator], np.ndarray]:
    """Initial-condition sampler: uniform on the sphere of the given radius."""
    if radius <= 0:
        raise ConfigurationError("sampler radius must be positive")

    def sample(rng: np.random.Generator) -> np.ndarray:
        v = rng.standard_normal(d)
        return radius * v / np.linalg.norm(v)

    return sample
