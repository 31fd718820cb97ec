"""Volatility-uncertainty sets and the sublinear G-function.

The uncertainty set collects the admissible quadratic-variation rates of the
driving noise.  The G-function is the support-style functional

    G(A) = (1/2) * sup over gamma in the set of trace(gamma @ A),

which in the scalar case reduces to G(r) = (r+ * hi - r- * lo) / 2 with hi/lo
the variance bounds.  The supremum of a linear functional over a compact
convex set is attained at an extreme point, so vertex maximization is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

SCALAR = "scalar"
DIAGONAL = "diagonal"
VERTEX = "vertex"

_KINDS = (SCALAR, DIAGONAL, VERTEX)
_PSD_TOL = 1e-10


@dataclass(frozen=True)
class UncertaintySet:
    """Admissible set of quadratic-variation rate matrices.

    Values are stored as variances (sigma squared), matching the usual
    parameterization of volatility bounds.  Three kinds are supported:

    * ``scalar``   -- one noise channel, rates in [lo, hi];
    * ``diagonal`` -- independent channels, per-channel intervals, zero
      cross-variation;
    * ``vertex``   -- an explicit finite list of symmetric PSD extreme
      matrices.

    General convex sets are rejected at construction; the vertex kind is the
    escape hatch for anything beyond product intervals.
    """

    kind: str
    m: int
    sigma_sq_lo: np.ndarray | None = None
    sigma_sq_hi: np.ndarray | None = None
    vertices: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown uncertainty kind {self.kind!r}")
        if self.m < 1:
            raise ConfigurationError("noise dimension m must be >= 1")
        if self.kind == VERTEX:
            if not self.vertices:
                raise ConfigurationError("vertex kind requires at least one matrix")
            for v in self.vertices:
                if v.shape != (self.m, self.m):
                    raise ConfigurationError(
                        f"vertex shape {v.shape} does not match m={self.m}"
                    )
                if not np.allclose(v, v.T, atol=1e-12):
                    raise DomainError("vertex matrices must be symmetric")
                if np.linalg.eigvalsh(v).min() < -_PSD_TOL:
                    raise DomainError("vertex matrices must be positive semidefinite")
        else:
            lo = np.asarray(self.sigma_sq_lo, dtype=float)
            hi = np.asarray(self.sigma_sq_hi, dtype=float)
            if lo.shape != (self.m,) or hi.shape != (self.m,):
                raise ConfigurationError("sigma_sq bounds must have shape (m,)")
            if np.any(lo < 0):
                raise ConfigurationError("sigma_sq_lo must be nonnegative")
            if np.any(lo > hi):
                raise ConfigurationError("need sigma_sq_lo <= sigma_sq_hi componentwise")
            object.__setattr__(self, "sigma_sq_lo", lo)
            object.__setattr__(self, "sigma_sq_hi", hi)

    @staticmethod
    def scalar(sigma_sq_lo: float, sigma_sq_hi: float) -> "UncertaintySet":
        """One-dimensional interval [sigma_sq_lo, sigma_sq_hi] of variances."""
        return UncertaintySet(
            kind=SCALAR,
            m=1,
            sigma_sq_lo=np.array([float(sigma_sq_lo)]),
            sigma_sq_hi=np.array([float(sigma_sq_hi)]),
        )

    @staticmethod
    def diagonal(sigma_sq_lo: Sequence[float], sigma_sq_hi: Sequence[float]) -> "UncertaintySet":
        """Per-channel variance intervals with zero cross-variation."""
        lo = np.asarray(sigma_sq_lo, dtype=float)
        return UncertaintySet(
            kind=DIAGONAL,
            m=lo.shape[0] if lo.ndim else 1,
            sigma_sq_lo=lo,
            sigma_sq_hi=np.asarray(sigma_sq_hi, dtype=float),
        )

    @staticmethod
    def vertex(matrices: Sequence[np.ndarray]) -> "UncertaintySet":
        """Explicit extreme points; each must be symmetric PSD of equal size."""
        mats = tuple(np.asarray(v, dtype=float) for v in matrices)
        if not mats:
            raise ConfigurationError("vertex kind requires at least one matrix")
        return UncertaintySet(kind=VERTEX, m=mats[0].shape[0], vertices=mats)

    @property
    def is_interval_kind(self) -> bool:
        return self.kind in (SCALAR, DIAGONAL)

    def extreme_points(self) -> list[np.ndarray]:
        """Extreme matrices of the set (2^m corner combinations for intervals)."""
        if self.kind == VERTEX:
            return [v.copy() for v in self.vertices]
        if self.m > 16:
            raise DomainError("extreme-point enumeration capped at m <= 16")
        out = []
        for mask in range(2 ** self.m):
            diag = np.where(
                [(mask >> i) & 1 for i in range(self.m)],
                self.sigma_sq_hi,
                self.sigma_sq_lo,
            )
            out.append(np.diag(diag.astype(float)))
        return out

    def to_config(self) -> dict:
        """Config-file representation (see the `uncertainty` key)."""
        if self.kind == VERTEX:
            return {"kind": VERTEX, "vertices": [v.tolist() for v in self.vertices]}
        return {
            "kind": self.kind,
            "sigma_sq_lo": [float(v) for v in self.sigma_sq_lo],
            "sigma_sq_hi": [float(v) for v in self.sigma_sq_hi],
        }

    @staticmethod
    def from_config(cfg: dict) -> "UncertaintySet":
        kind = cfg.get("kind")
        if kind == VERTEX:
            return UncertaintySet.vertex([np.asarray(v, float) for v in cfg["vertices"]])
        if kind == SCALAR:
            return UncertaintySet.scalar(cfg["sigma_sq_lo"][0], cfg["sigma_sq_hi"][0])
        if kind == DIAGONAL:
            return UncertaintySet.diagonal(cfg["sigma_sq_lo"], cfg["sigma_sq_hi"])
        raise ConfigurationError(f"unknown uncertainty kind {kind!r}")


def g_scalar(r: float, u: UncertaintySet) -> float:
    """Scalar G-function: (r+ * hi - r- * lo) / 2 for a one-channel interval."""
    if u.kind != SCALAR or u.m != 1:
        raise ConfigurationError("g_scalar requires a scalar-interval uncertainty set")
    r = float(r)
    r_plus = max(r, 0.0)
    r_minus = max(-r, 0.0)
    return 0.5 * (r_plus * float(u.sigma_sq_hi[0]) - r_minus * float(u.sigma_sq_lo[0]))


def g_matrix(a: np.ndarray, u: UncertaintySet) -> float:
    """Matrix G-function: half the worst-case trace pairing over the set.

    Diagonal-interval sets decompose channelwise (cross-variations are zero),
    so the value is the sum of scalar G's of the diagonal entries.  Vertex
    sets are maximized by enumeration.  The input must already be symmetric;
    symmetrizing is the caller's job.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (u.m, u.m):
        raise DomainError(f"matrix shape {a.shape} does not match m={u.m}")
    if not np.allclose(a, a.T, atol=1e-9 * max(1.0, float(np.abs(a).max()))):
        raise DomainError("g_matrix requires a symmetric matrix")
    if u.kind == VERTEX:
        return 0.5 * max(float(np.tensordot(v, a)) for v in u.vertices)
    # interval kinds: trace(gamma a) = sum_i gamma_ii a_ii, maximized per channel
    d = np.diag(a)
    pos = d >= 0.0
    return 0.5 * float(np.sum(np.where(pos, d * u.sigma_sq_hi, d * u.sigma_sq_lo)))


def gamma_bar(u: UncertaintySet) -> float:
    """Uniform norm bound: max over extreme matrices of max(Frobenius, spectral).

    Controls the quadratic-variation growth |<B>(t)| <= gamma_bar * t.  For a
    scalar interval this is just the upper variance bound.
    """
    if u.kind == SCALAR:
        return float(u.sigma_sq_hi[0])
    if u.kind == DIAGONAL:
        # entries are nonnegative, so both norms are maximized at the upper corner
        hi = u.sigma_sq_hi
        return max(float(np.linalg.norm(hi)), float(hi.max()))
    best = 0.0
    for v in u.vertices:
        fro = float(np.linalg.norm(v, "fro"))
        spec = float(np.linalg.norm(v, 2))
        best = max(best, fro, spec)
    return best


def c_constant_matrix(c: float, u: UncertaintySet) -> float:
    """G of the m x m matrix with every entry equal to c."""
    return g_matrix(np.full((u.m, u.m), float(c)), u)
