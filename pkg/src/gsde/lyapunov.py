"""Worst-case generator evaluation and Lyapunov-condition checking.

For a candidate function V the generator under volatility uncertainty is

    LV(x, t) = V_t + <grad V, f> + G(kappa),
    kappa_ij = V_{x_k} (h^{kij} + h^{kji}) + V_{x_k x_l} g^{ki} g^{lj},

with G the sublinear function of the uncertainty set.  The checks in this
module are numerical region searches, not proofs: PASS means no
counterexample was found at the stated sample density, and every report says
so verbatim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .engine import GSdeSystem
from .errors import ConfigurationError, DomainError, NumericalError
from .gfunc import SCALAR, UncertaintySet, c_constant_matrix, g_matrix

_FD_STEP = float(np.finfo(float).eps) ** (1.0 / 3.0)  # ~6.06e-6, first derivatives
# second differences divide by h^2, so they need a larger step to keep
# roundoff amplification below the accuracy contract
_FD_STEP_HESS = float(np.finfo(float).eps) ** 0.25  # ~1.22e-4
SINGULARITY_RADIUS = 1e-6  # sampler never enters this ball around the origin

PASS_CAVEAT = "PASS means no counterexample found at stated sample density"


def _fd_scale(x: np.ndarray, step: float | None) -> float:
    base = step if step is not None else _FD_STEP
    return base * max(1.0, float(np.linalg.norm(x)))


@dataclass
class LyapunovSpec:
    """Candidate V with derivatives and the comparison functions eta, gamma.

    Missing derivatives are filled in by central finite differences with step
    ``fd_step * max(1, |x|)`` (default: cube root of machine epsilon);
    ``use_finite_difference`` forces the numerical route even when analytic
    callbacks are supplied, which is how the two are cross-checked.
    """

    V: Callable[[np.ndarray, float], float]
    V_t: Callable[[np.ndarray, float], float] | None = None
    grad_V: Callable[[np.ndarray, float], np.ndarray] | None = None
    hess_V: Callable[[np.ndarray, float], np.ndarray] | None = None
    eta: Callable[[np.ndarray], float] | None = None
    gamma: Callable[[float], float] | None = None
    fd_step: float | None = None
    use_finite_difference: bool = False
    time_independent: bool = False

    @property
    def derivative_mode(self) -> str:
        if self.use_finite_difference:
            return "finite_difference"
        have_all = self.grad_V is not None and self.hess_V is not None and (
            self.V_t is not None or self.time_independent
        )
        return "analytic" if have_all else "finite_difference"

    def value(self, x: np.ndarray, t: float) -> float:
        return float(self.V(x, t))

    def time_derivative(self, x: np.ndarray, t: float) -> float:
        if self.time_independent and not self.use_finite_difference:
            return 0.0
        if self.V_t is not None and not self.use_finite_difference:
            return float(self.V_t(x, t))
        h = self.fd_step if self.fd_step is not None else _FD_STEP
        h = h * max(1.0, abs(t))
        return (self.value(x, t + h) - self.value(x, t - h)) / (2 * h)

    def gradient(self, x: np.ndarray, t: float) -> np.ndarray:
        if self.grad_V is not None and not self.use_finite_difference:
            return np.asarray(self.grad_V(x, t), dtype=float)
        h = _fd_scale(x, self.fd_step)
        d = x.shape[0]
        out = np.empty(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            out[i] = (self.value(x + e, t) - self.value(x - e, t)) / (2 * h)
        return out

    def hessian(self, x: np.ndarray, t: float) -> np.ndarray:
        if self.hess_V is not None and not self.use_finite_difference:
            return np.asarray(self.hess_V(x, t), dtype=float)
        base = self.fd_step if self.fd_step is not None else _FD_STEP_HESS
        h = base * max(1.0, float(np.linalg.norm(x)))
        d = x.shape[0]
        out = np.empty((d, d))
        v0 = self.value(x, t)
        for i in range(d):
            ei = np.zeros(d)
            ei[i] = h
            out[i, i] = (self.value(x + ei, t) - 2 * v0 + self.value(x - ei, t)) / h**2
            for j in range(i + 1, d):
                ej = np.zeros(d)
                ej[j] = h
                out[i, j] = out[j, i] = (
                    self.value(x + ei + ej, t)
                    - self.value(x + ei - ej, t)
                    - self.value(x - ei + ej, t)
                    + self.value(x - ei - ej, t)
                ) / (4 * h**2)
        return out

    def eta_value(self, x: np.ndarray) -> float:
        return float(self.eta(x)) if self.eta is not None else 0.0

    def gamma_value(self, t: float) -> float:
        return float(self.gamma(t)) if self.gamma is not None else 0.0


@dataclass(frozen=True)
class ShellRegion:
    """Spherical shell r_lo <= |x| <= r_hi sampled at a fixed density.

    Directions are uniform on the sphere and radii log-uniform, so both
    small- and large-radius violations of radially homogeneous bounds get
    coverage.  Radii below the singularity-exclusion ball are clipped.
    """

    r_lo: float
    r_hi: float
    n_samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.r_lo <= self.r_hi):
            raise ConfigurationError("need 0 < r_lo <= r_hi")
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be >= 1")

    @property
    def effective_r_lo(self) -> float:
        return max(self.r_lo, SINGULARITY_RADIUS)

    def sample(self, d: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        dirs = rng.standard_normal((self.n_samples, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        lo, hi = math.log(self.effective_r_lo), math.log(self.r_hi)
        radii = np.exp(rng.uniform(lo, hi, size=self.n_samples))
        return dirs * radii[:, None]


@dataclass
class GeneratorReport:
    """Outcome of a sampled generator-bound check."""

    passed: bool
    worst_margin: float
    arg_worst_x: np.ndarray
    arg_worst_t: float
    n_samples: int
    t_samples: tuple
    tolerance: float
    r_lo: float
    r_hi: float
    generator_values: np.ndarray = field(repr=False, default=None)
    margins: np.ndarray = field(repr=False, default=None)
    points: np.ndarray = field(repr=False, default=None)
    kappas: np.ndarray = field(repr=False, default=None)
    n_failures: int = 0
    notes: str = PASS_CAVEAT

    def to_summary(self) -> dict:
        return {
            "passed": bool(self.passed),
            "worst_margin": float(self.worst_margin),
            "arg_worst_x": [float(v) for v in self.arg_worst_x],
            "arg_worst_t": float(self.arg_worst_t),
            "n_samples": int(self.n_samples),
            "tolerance": float(self.tolerance),
            "r_lo": float(self.r_lo),
            "r_hi": float(self.r_hi),
            "n_failures": int(self.n_failures),
            "notes": self.notes,
        }


def _kappa_from(grad: np.ndarray, hess: np.ndarray, sys: GSdeSystem, x, t) -> np.ndarray:
    g = np.asarray(sys.g(x, t), dtype=float)
    kappa = g.T @ hess @ g
    if sys.h is not None:
        H = np.asarray(sys.h(x, t), dtype=float)
        kappa = kappa + np.einsum("k,kij->ij", grad, H + H.transpose(0, 2, 1))
    return 0.5 * (kappa + kappa.T)


def generator_kappa(
    sys: GSdeSystem, spec: LyapunovSpec, x: np.ndarray, t: float
) -> np.ndarray:
    """Assemble the symmetric m x m matrix inside the G term of LV."""
    return _kappa_from(spec.gradient(x, t), spec.hessian(x, t), sys, x, t)


def _generator_value(
    sys: GSdeSystem, spec: LyapunovSpec, u: UncertaintySet, x: np.ndarray, t: float
) -> tuple[float, np.ndarray]:
    grad = spec.gradient(x, t)
    vt = spec.time_derivative(x, t)
    f = np.asarray(sys.f(x, t), dtype=float)
    kappa = _kappa_from(grad, spec.hessian(x, t), sys, x, t)
    if not (np.isfinite(vt) and np.all(np.isfinite(grad)) and np.all(np.isfinite(kappa))):
        raise NumericalError(f"non-finite derivative at x={x.tolist()}, t={t}")
    lv = vt + float(grad @ f) + g_matrix(kappa, u)
    if not np.isfinite(lv):
        raise NumericalError(f"non-finite generator value at x={x.tolist()}, t={t}")
    return lv, kappa


def evaluate_generator(
    sys: GSdeSystem,
    spec: LyapunovSpec,
    u: UncertaintySet,
    x: np.ndarray,
    t: float = 0.0,
) -> float:
    """Worst-case generator LV(x, t) over the uncertainty set."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.d,):
        raise DomainError(f"x must have shape ({sys.d},), got {x.shape}")
    if u.m != sys.m:
        raise DomainError(f"uncertainty set has m={u.m}, system has m={sys.m}")
    return _generator_value(sys, spec, u, x, t)[0]


def check_generator_bound(
    sys: GSdeSystem,
    spec: LyapunovSpec,
    u: UncertaintySet,
    region: ShellRegion,
    t_samples: Sequence[float] = (0.0,),
    tolerance: float = 1e-9,
) -> GeneratorReport:
    """Search the shell for violations of LV(x, t) <= gamma(t) - eta(x).

    The worst margin is max over samples of LV - gamma + eta; the check
    passes when it stays below the tolerance.  Numerical failures are
    recorded on the report rather than raised.
    """
    if spec.eta is None:
        raise ConfigurationError("check_generator_bound requires an eta callback")
    points = region.sample(sys.d)
    t_samples = tuple(float(t) for t in t_samples)
    n = len(points) * len(t_samples)
    margins = np.full(n, -np.inf)
    values = np.full(n, np.nan)
    kappas = np.zeros((n, sys.m, sys.m))
    worst = -np.inf
    arg_x, arg_t = points[0], t_samples[0]
    failures = 0
    k = 0
    for x in points:
        eta = spec.eta_value(x)
        for t in t_samples:
            try:
                lv, kappas[k] = _generator_value(sys, spec, u, x, t)
            except NumericalError:
                failures += 1
                k += 1
                continue
            margin = lv - spec.gamma_value(t) + eta
            values[k] = lv
            margins[k] = margin
            if margin > worst:
                worst, arg_x, arg_t = margin, x, t
            k += 1
    notes = PASS_CAVEAT
    if region.r_lo < SINGULARITY_RADIUS:
        notes += f"; radii clipped to the {SINGULARITY_RADIUS:g} exclusion ball"
    passed = failures == 0 and worst <= tolerance
    if failures:
        notes += f"; {failures} sample(s) hit non-finite derivatives"
    return GeneratorReport(
        passed=passed,
        worst_margin=worst,
        arg_worst_x=np.asarray(arg_x),
        arg_worst_t=arg_t,
        n_samples=region.n_samples,
        t_samples=t_samples,
        tolerance=tolerance,
        r_lo=region.effective_r_lo,
        r_hi=region.r_hi,
        generator_values=values,
        margins=margins,
        points=points,
        kappas=kappas,
        n_failures=failures,
        notes=notes,
    )


def check_radial_unboundedness(
    spec: LyapunovSpec,
    radii: Sequence[float],
    t_samples: Sequence[float] = (0.0,),
    d: int = 3,
    n_directions: int = 128,
    seed: int = 0,
) -> bool:
    """Heuristic test that inf over time of V grows without bound in |x|.

    The object under test is the time-infimum field phi(x) = inf over the
    sampled times of V(x, t).  Directions are sampled on spheres of
    increasing radius; the per-sphere minimum of phi must increase, and on
    the largest sphere it must exceed every phi value seen on smaller
    spheres.  A heuristic PASS, not a proof.
    """
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise DomainError("radii must be strictly increasing")
    if len(radii) < 2:
        raise DomainError("need at least two radii")
    rng = np.random.default_rng(seed)
    mins, maxes = [], []
    for r in radii:
        dirs = rng.standard_normal((n_directions, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        phi = [min(spec.value(r * u, t) for t in t_samples) for u in dirs]
        mins.append(min(phi))
        maxes.append(max(phi))
    increasing = all(b > a for a, b in zip(mins, mins[1:]))
    dominates = mins[-1] > max(maxes[:-1])
    return bool(increasing and dominates)


@dataclass
class ExponentialCertificate:
    """Result of the two-hypothesis exponential-decay check."""

    passed: bool
    rate: float | None
    decay_lambda: float
    moment_p: float
    worst_lower_margin: float  # max of e^{lambda t}|x|^p - V (hypothesis 1)
    worst_generator_margin: float  # max of LV - gamma(t) (hypothesis 2)
    tolerance: float
    n_samples: int
    notes: str = PASS_CAVEAT

    def to_summary(self) -> dict:
        return {
            "passed": bool(self.passed),
            "rate": None if self.rate is None else float(self.rate),
            "lambda": float(self.decay_lambda),
            "p": float(self.moment_p),
            "worst_lower_margin": float(self.worst_lower_margin),
            "worst_generator_margin": float(self.worst_generator_margin),
            "tolerance": float(self.tolerance),
            "n_samples": int(self.n_samples),
            "notes": self.notes,
        }


def exponential_certificate(
    sys: GSdeSystem,
    spec: LyapunovSpec,
    u: UncertaintySet,
    decay_lambda: float,
    moment_p: float,
    region: ShellRegion,
    t_samples: Sequence[float] = (0.0,),
    tolerance: float = 1e-9,
) -> ExponentialCertificate:
    """Check e^{lambda t}|x|^p <= V and LV <= gamma by region sampling.

    Both hypotheses holding certifies the decay rate -lambda/p for the
    pathwise log-norm growth.
    """
    if decay_lambda <= 0 or moment_p <= 0:
        raise ConfigurationError("lambda and p must be positive")
    points = region.sample(sys.d)
    worst_lower = -np.inf
    worst_gen = -np.inf
    for x in points:
        r = float(np.linalg.norm(x))
        for t in t_samples:
            lower = math.exp(decay_lambda * t) * r**moment_p - spec.value(x, t)
            worst_lower = max(worst_lower, lower)
            lv = evaluate_generator(sys, spec, u, x, t)
            worst_gen = max(worst_gen, lv - spec.gamma_value(t))
    passed = worst_lower <= tolerance and worst_gen <= tolerance
    return ExponentialCertificate(
        passed=passed,
        rate=-decay_lambda / moment_p if passed else None,
        decay_lambda=decay_lambda,
        moment_p=moment_p,
        worst_lower_margin=worst_lower,
        worst_generator_margin=worst_gen,
        tolerance=tolerance,
        n_samples=region.n_samples,
    )


def gain_rule_one_sided(L: float, u: UncertaintySet, m: int | None = None) -> float:
    """Threshold gain stabilizing a one-sided-Lipschitz drift.

    With c_m1 = G of the m x m all-minus-one matrix (necessarily negative for
    a nondegenerate set), any gain above sqrt(-L / c_m1) makes the
    noise-injected system quasi-surely stable.
    """
    if L < 0:
        raise DomainError("one-sided Lipschitz constant must be nonnegative")
    m = u.m if m is None else int(m)
    if m != u.m:
        if u.kind == SCALAR:
            u = UncertaintySet.diagonal(
                np.repeat(u.sigma_sq_lo, m), np.repeat(u.sigma_sq_hi, m)
            )
        else:
            raise ConfigurationError(
                f"cannot widen a {u.kind} uncertainty set from m={u.m} to m={m}"
            )
    c_m1 = c_constant_matrix(-1.0, u)
    if c_m1 >= 0:
        raise DomainError(
            "degenerate uncertainty set: G of the all-minus-one matrix is not negative"
        )
    return math.sqrt(-L / c_m1)


def estimate_one_sided_lipschitz(
    f: Callable,
    region: ShellRegion,
    d: int,
    t: float = 0.0,
) -> float:
    """Sampled lower bound on the smallest L with <x, f(x)> <= L |x|^2."""
    points = region.sample(d)
    best = -np.inf
    for x in points:
        r2 = float(x @ x)
        if r2 == 0.0:
            continue
        best = max(best, float(x @ np.asarray(f(x, t), dtype=float)) / r2)
    return best
