"""Preset case bundles: three stabilization studies with pinned constants.

Each bundle packages a system, its Lyapunov candidate, the volatility
uncertainty, a recommended simulation protocol, and the claims its
verification checks certify.  Bundles are constructible with parameter
overrides but default to the pinned study settings, and serialize to the
CLI's config manifest.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .engine import GSdeSystem, sphere_sampler
from .errors import ConfigurationError
from .gfunc import UncertaintySet, c_constant_matrix
from .lyapunov import LyapunovSpec, ShellRegion, gain_rule_one_sided
from .scenarios import CONSTANT, ENDPOINTS


@dataclass(frozen=True)
class SimProtocol:
    """Recommended batch settings for reproducing a bundle's study."""

    T: float
    dt: float
    trials: int
    grid_k: int
    scenario_mode: str
    x0_radius: float

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def to_config(self) -> dict:
        return {
            "T": self.T,
            "dt": self.dt,
            "trials": self.trials,
            "grid_k": self.grid_k,
            "scenario_mode": self.scenario_mode,
            "x0_radius": self.x0_radius,
        }


@dataclass(frozen=True)
class Claim:
    kind: str  # e.g. "exponential_rate", "generator_bound", "origin_avoidance"
    value: float | None
    note: str


@dataclass
class CaseBundle:
    name: str
    system: GSdeSystem
    lyapunov: LyapunovSpec
    uncertainty: UncertaintySet
    protocol: SimProtocol
    region: ShellRegion
    tolerance: float
    claims: list[Claim] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    exp_lambda: float | None = None
    exp_p: float | None = None

    def x0_sampler(self) -> Callable[[np.random.Generator], np.ndarray]:
        return sphere_sampler(self.protocol.x0_radius, self.system.d)

    def exponential_spec(self, decay_lambda: float | None = None) -> LyapunovSpec:
        """Time-weighted Lyapunov candidate e^{lambda t} |x|^p for rate checks."""
        if self.exp_lambda is None or self.exp_p is None:
            raise ConfigurationError(
                f"case {self.name!r} declares no exponential-rate candidate"
            )
        lam = self.exp_lambda if decay_lambda is None else float(decay_lambda)
        p = self.exp_p
        return LyapunovSpec(
            V=lambda x, t: math.exp(lam * t) * float(x @ x) ** (p / 2),
            V_t=lambda x, t: lam * math.exp(lam * t) * float(x @ x) ** (p / 2),
            grad_V=lambda x, t: p * math.exp(lam * t) * float(x @ x) ** (p / 2 - 1) * x,
            hess_V=lambda x, t: math.exp(lam * t)
            * (
                p * float(x @ x) ** (p / 2 - 1) * np.eye(x.shape[0])
                + p * (p - 2) * float(x @ x) ** (p / 2 - 2) * np.outer(x, x)
            ),
            gamma=lambda t: 0.0,
        )

    def to_manifest(self) -> dict:
        return {
            "case": self.name,
            "params": {k: float(v) for k, v in sorted(self.params.items())},
            "uncertainty": self.uncertainty.to_config(),
            "simulation": self.protocol.to_config(),
        }


def power_norm_spec(
    alpha: float, eta_coefficient: float | None = None
) -> LyapunovSpec:
    """V = |x|^alpha with analytic derivatives (singular at the origin for
    alpha < 2) and optional eta = c |x|^alpha."""

    def V(x, t):
        return float(np.linalg.norm(x)) ** alpha

    def grad(x, t):
        r = float(np.linalg.norm(x))
        return alpha * r ** (alpha - 2) * x

    def hess(x, t):
        r = float(np.linalg.norm(x))
        return alpha * r ** (alpha - 2) * np.eye(x.shape[0]) + alpha * (
            alpha - 2
        ) * r ** (alpha - 4) * np.outer(x, x)

    eta = None
    if eta_coefficient is not None:
        eta = lambda x: eta_coefficient * float(np.linalg.norm(x)) ** alpha  # noqa: E731
    return LyapunovSpec(V=V, grad_V=grad, hess_V=hess, eta=eta, time_independent=True)


# ---------------------------------------------------------------------------
# case 1: unstable linear network, stabilized via noise plus a
# quadratic-variation drift


EX1_A = np.array([[11.0, 5.0, 2.0], [5.0, 11.0, 2.0], [2.0, 2.0, 14.0]])
EX1_C = np.array([[-19.0, 11.0, 2.0], [11.0, -19.0, 2.0], [2.0, 2.0, -10.0]])


def example1_linear() -> CaseBundle:
    """Linear system dx = Ax dt + x dB + Cx d<B>, scalar noise in [3.5, 4].

    The quadratic candidate V = |x|^2 satisfies LV <= -2.5 |x|^2, and the
    time-weighted variant with lambda = 1.5 certifies the pathwise decay
    rate -0.75.
    """
    u = UncertaintySet.scalar(3.5, 4.0)

    def f(x, t):
        return x @ EX1_A.T

    def g(x, t):
        return x[..., :, None]

    def h(x, t):
        return (x @ EX1_C.T)[..., :, None, None]

    system = GSdeSystem(d=3, m=1, f=f, g=g, h=h, name="example1")
    spec = power_norm_spec(2.0, eta_coefficient=2.5)
    return CaseBundle(
        name="example1",
        system=system,
        lyapunov=spec,
        uncertainty=u,
        protocol=SimProtocol(
            T=10.0, dt=1e-3, trials=400, grid_k=5, scenario_mode=CONSTANT, x0_radius=1.0
        ),
        region=ShellRegion(r_lo=0.1, r_hi=10.0, n_samples=10_000, seed=0),
        tolerance=1e-9,
        claims=[
            Claim(
                kind="generator_bound",
                value=-2.5,
                note="LV <= -2.5 |x|^2 on the documented shell",
            ),
            Claim(
                kind="exponential_rate",
                value=-0.75,
                note="certified by the lambda=1.5, p=2 time-weighted candidate",
            ),
        ],
        exp_lambda=1.5,
        exp_p=2.0,
    )


# ---------------------------------------------------------------------------
# case 2: Lorenz drift stabilized by multiplicative noise above the gain
# threshold


def lorenz_drift(sigma: float, rho: float, beta: float) -> Callable:
    def f(x, t):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack(
            [sigma * (x2 - x1), rho * x1 - x3 * x1 - x2, x1 * x2 - beta * x3],
            axis=-1,
        )

    return f


def example2_lorenz(k: float = 5.0) -> CaseBundle:
    """Lorenz system dx = f(x) dt + k x dB, scalar noise in [40, 50].

    The drift is one-sided Lipschitz with L = (sigma + rho)/2 = 10, so any
    gain above sqrt(-L / G(-1)) = sqrt(0.5) stabilizes the origin
    quasi-surely; k = 5 exceeds it comfortably.  Gains at or below the
    threshold still build (for contrast runs) but emit a warning.
    """
    sigma, rho, beta = 10.0, 10.0, 8.0 / 3.0
    L = 0.5 * (sigma + rho)
    u = UncertaintySet.scalar(40.0, 50.0)
    threshold = gain_rule_one_sided(L, u)
    if k <= threshold:
        warnings.warn(
            f"gain k={k:g} is at or below the stabilizing threshold"
            f" {threshold:.4f}; the bundle is for contrast runs only",
            stacklevel=2,
        )

    f = lorenz_drift(sigma, rho, beta)

    def g(x, t):
        return k * x[..., :, None]

    system = GSdeSystem(d=3, m=1, f=f, g=g, h=None, name="example2")

    c_m1 = c_constant_matrix(-1.0, u)
    claims = [
        Claim(
            kind="gain_threshold",
            value=threshold,
            note="gains above this stabilize the one-sided-Lipschitz drift",
        )
    ]
    if k > threshold:
        # exponent constrained to (0, 1 + L / (k^2 c_{-1})); the midpoint keeps
        # margin from both edges
        alpha_max = 1.0 + L / (k * k * c_m1)
        alpha = 0.5 * alpha_max
        eta_coeff = alpha * (-L - k * k * c_m1 * (1.0 - alpha))
        spec = power_norm_spec(alpha, eta_coefficient=eta_coeff)
        claims.append(
            Claim(
                kind="generator_bound",
                value=-eta_coeff,
                note=f"LV <= -{eta_coeff:.4g} |x|^{alpha:.4g} on the documented shell",
            )
        )
    else:
        alpha = 0.5
        spec = power_norm_spec(alpha)

    return CaseBundle(
        name="example2",
        system=system,
        lyapunov=spec,
        uncertainty=u,
        protocol=SimProtocol(
            T=5.0, dt=1e-4, trials=400, grid_k=1, scenario_mode=ENDPOINTS, x0_radius=10.0
        ),
        region=ShellRegion(r_lo=0.1, r_hi=50.0, n_samples=10_000, seed=0),
        tolerance=1e-9,
        claims=claims,
        params={"k": k},
    )


# ---------------------------------------------------------------------------
# case 3: saturated oscillator with two-channel linear noise


EX3_C = np.array([[1.0, 1.0, 4.0], [5.0, -1.0, 4.0], [8.0, 1.0, 0.0]])
EX3_A1 = np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
EX3_A2 = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.5], [0.0, 0.0, 1.0]])
EX3_ALPHA = 2.0 / 25.0


def example3_oscillator() -> CaseBundle:
    """Oscillator dx = C f(x) dt + [A1 x, A2 x] dB, two iid channels in [40, 50].

    The fractional-power candidate V = |x|^{2/25} gives
    LV <= -(3/25) |x|^{2/25} away from the origin, and trajectories never
    reach the origin in finite time, so the region check excludes a small
    ball around zero.
    """
    u = UncertaintySet.diagonal([40.0, 40.0], [50.0, 50.0])

    def f(x, t):
        parts = np.stack(
            [-x[..., 0], np.arctan(x[..., 1]), np.tanh(x[..., 2])], axis=-1
        )
        return parts @ EX3_C.T

    def g(x, t):
        return np.stack([x @ EX3_A1.T, x @ EX3_A2.T], axis=-1)

    system = GSdeSystem(d=3, m=2, f=f, g=g, h=None, name="example3")
    spec = power_norm_spec(EX3_ALPHA, eta_coefficient=3.0 / 25.0)
    return CaseBundle(
        name="example3",
        system=system,
        lyapunov=spec,
        uncertainty=u,
        protocol=SimProtocol(
            T=5.0, dt=1e-3, trials=400, grid_k=1, scenario_mode=ENDPOINTS, x0_radius=1.0
        ),
        region=ShellRegion(r_lo=0.5, r_hi=5.0, n_samples=10_000, seed=0),
        tolerance=1e-8,
        claims=[
            Claim(
                kind="generator_bound",
                value=-3.0 / 25.0,
                note="LV <= -(3/25) |x|^{2/25} on the documented shell",
            ),
            Claim(
                kind="origin_avoidance",
                value=0.0,
                note="min over trials of min_t |x(t)| stays positive",
            ),
        ],
    )


CASES: dict[str, Callable[..., CaseBundle]] = {
    "example1": example1_linear,
    "example2": example2_lorenz,
    "example3": example3_oscillator,
}


def get_case(name: str, **params) -> CaseBundle:
    if name not in CASES:
        raise ConfigurationError(
            f"unknown case {name!r}; available: {', '.join(sorted(CASES))}"
        )
    return CASES[name](**params)


def from_manifest(manifest: dict) -> CaseBundle:
    """Rebuild a bundle from its config manifest (case name plus parameters)."""
    name = manifest.get("case")
    params = manifest.get("params", {})
    return get_case(name, **params)
