"""Independent reference implementations used as test oracles.

Everything here recomputes expected values from first principles (closed
forms, dense grids, brute-force enumeration) without touching the package's
own evaluation paths, so each check runs along two separate routes.
"""

import itertools

import numpy as np

from gsde import GSdeSystem, LyapunovSpec


def g_scalar_closed_form(r: float, lo: float, hi: float) -> float:
    """(r+ * hi - r- * lo) / 2 evaluated part by part."""
    r_plus = max(r, 0.0)
    r_minus = max(-r, 0.0)
    return 0.5 * (r_plus * hi - r_minus * lo)


def g_diag_grid_max(a: np.ndarray, lo: np.ndarray, hi: np.ndarray, n_grid: int) -> float:
    """Dense-grid maximization of trace(gamma a)/2 over diagonal gamma.

    The trace is separable across channels, so the joint grid maximum is the
    sum of per-channel 1-D grid maxima.
    """
    total = 0.0
    for i in range(len(lo)):
        grid = np.linspace(lo[i], hi[i], n_grid) if hi[i] > lo[i] else np.array([lo[i]])
        total += float(np.max(grid * a[i, i]))
    return 0.5 * total


def g_vertex_max(a: np.ndarray, vertices) -> float:
    return 0.5 * max(float(np.tensordot(v, a)) for v in vertices)


def diag_corners(lo: np.ndarray, hi: np.ndarray):
    """All 2^m diagonal extreme matrices of a product interval."""
    m = len(lo)
    for picks in itertools.product(*[(lo[i], hi[i]) for i in range(m)]):
        yield np.diag(np.array(picks, dtype=float))


def norms_max(mats) -> float:
    return max(
        max(float(np.linalg.norm(v, "fro")), float(np.linalg.norm(v, 2))) for v in mats
    )


def upcrossings_bruteforce(series, alpha: float, beta: float) -> int:
    """Largest completed-upcrossing count over every subset of the index set.

    Exponential in the series length; only usable for short series, which is
    the point: it is a genuinely different computation from the linear scan.
    """
    n = len(series)
    best = 0
    for mask in range(1, 2**n):
        sub = [series[i] for i in range(n) if (mask >> i) & 1]
        count = 0
        below = False
        for v in sub:
            if not below:
                if v <= alpha:
                    below = True
            elif v >= beta:
                count += 1
                below = False
        best = max(best, count)
    return best


# random linear test systems: f = A x, g columns G_i x, h^{.ij} = T[.,i,j,:] x


def random_linear_system(rng: np.random.Generator, d: int, m: int) -> dict:
    A = rng.standard_normal((d, d))
    G = rng.standard_normal((m, d, d))  # G[i] maps x to the i-th noise column
    T = rng.standard_normal((d, m, m, d))
    T = 0.5 * (T + T.transpose(0, 2, 1, 3))  # symmetry in the channel indices
    P = rng.standard_normal((d, d))
    P = P @ P.T  # PSD so V = x'Px is a valid nonnegative candidate

    def f(x, t):
        return A @ x

    def g(x, t):
        return np.stack([G[i] @ x for i in range(m)], axis=1)

    def h(x, t):
        return np.einsum("kijl,l->kij", T, x)

    system = GSdeSystem(d=d, m=m, f=f, g=g, h=h)
    spec = LyapunovSpec(
        V=lambda x, t: float(x @ P @ x),
        grad_V=lambda x, t: 2.0 * P @ x,
        hess_V=lambda x, t: 2.0 * P,
        time_independent=True,
    )
    return {"system": system, "spec": spec, "A": A, "G": G, "T": T, "P": P}


def classical_generator(model: dict, sigma_sq: np.ndarray, x: np.ndarray) -> float:
    """Fixed-volatility Ito generator of V = x'Px, assembled from scratch.

    For dx = (f + sum_i sigma_i^2 h^{.ii}) dt + sum_i g^{.i} sigma_i dW_i the
    generator is grad V . drift + (1/2) sum_i sigma_i^2 (g^{.i})' Hess V g^{.i}.
    """
    A, T, P = model["A"], model["T"], model["P"]
    G = model["G"]
    grad = 2.0 * P @ x
    hess = 2.0 * P
    drift = A @ x
    for i in range(len(sigma_sq)):
        drift = drift + sigma_sq[i] * (T[:, i, i, :] @ x)
    diff = 0.0
    for i in range(len(sigma_sq)):
        col = G[i] @ x
        diff += sigma_sq[i] * float(col @ hess @ col)
    return float(grad @ drift) + 0.5 * diff


def corner_max_generator(
    model: dict, lo: np.ndarray, hi: np.ndarray, x: np.ndarray
) -> float:
    """Extreme-point maximization of the uncertain generator of V = x'Px.

    Builds kappa from its definition and maximizes V_t + grad V . f +
    trace(gamma kappa)/2 over the 2^m diagonal corner matrices.
    """
    A, G, T, P = model["A"], model["G"], model["T"], model["P"]
    m = len(lo)
    grad = 2.0 * P @ x
    hess = 2.0 * P
    cols = [G[i] @ x for i in range(m)]
    kappa = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            h_ij = T[:, i, j, :] @ x
            kappa[i, j] = float(grad @ (2.0 * h_ij)) + float(cols[i] @ hess @ cols[j])
    base = float(grad @ (A @ x))
    return base + max(
        0.5 * float(np.trace(gamma @ kappa)) for gamma in diag_corners(lo, hi)
    )
