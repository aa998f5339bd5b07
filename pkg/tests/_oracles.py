"""Independent oracles used by the test suite.

Everything here is re-derived from first principles rather than imported from
the package under test: closed-form Gaussian quantities, one-dimensional
quadrature reductions for the divergence functionals, a Monte Carlo
cross-check, and an exhaustive spanning-tree enumeration. Tests compare
package output against these values; the oracles never call package code.
"""
import itertools
import math

import numpy as np
from scipy import integrate


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def gaussian_ber(delta: float, q1: float = 0.5) -> float:
    """Bayes error of two isotropic Gaussians at mean separation delta."""
    q2 = 1.0 - q1
    if delta == 0.0:
        return min(q1, q2)
    c = math.log(q2 / q1) / delta
    return q1 * norm_cdf(-delta / 2.0 + c) + q2 * norm_cdf(-delta / 2.0 - c)


def dphi_quad(phi, delta: float) -> float:
    """E[phi(t)] under class 2 for the Gaussian pair via 1-D quadrature.

    The likelihood ratio t = f1/f2 depends on x only through the projection
    onto the mean difference, and under f2 that projection is standard normal,
    giving log t = delta * z - delta^2 / 2. Works in any ambient dimension.
    """
    def integrand(z):
        t = math.exp(delta * z - delta * delta / 2.0)
        return phi(t) * math.exp(-z * z / 2.0) / math.sqrt(2.0 * math.pi)

    val, _ = integrate.quad(integrand, -12.0, 12.0, limit=400)
    return val


def hp_divergence_true(delta: float, q1: float = 0.5) -> float:
    """Affinity-complement divergence for the Gaussian pair."""
    q2 = 1.0 - q1

    def phi(t):
        return 4.0 * q1 * q2 * t / (q1 * t + q2)

    return 1.0 - dphi_quad(phi, delta)


def hp_divergence_mc(delta: float, q1: float = 0.5, n: int = 10**6, seed: int = 0) -> float:
    """Monte Carlo cross-check of :func:`hp_divergence_true`."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    t = np.exp(delta * z - delta * delta / 2.0)
    q2 = 1.0 - q1
    return 1.0 - float(np.mean(4.0 * q1 * q2 * t / (q1 * t + q2)))


def chernoff_coefficient(alpha: float, delta: float) -> float:
    """Closed form of the Gaussian alpha-coefficient integral."""
    return math.exp(-alpha * (1.0 - alpha) * delta * delta / 2.0)


def chernoff_bound_true(delta: float, q1: float = 0.5) -> tuple[float, float]:
    """Minimized Chernoff upper bound and its minimizing exponent."""
    q2 = 1.0 - q1
    if delta == 0.0:
        return min(q1, q2), 0.5
    alpha = 0.5 - math.log(q1 / q2) / (delta * delta)
    alpha = min(max(alpha, 1e-9), 1.0 - 1e-9)
    return q1**alpha * q2 ** (1.0 - alpha) * chernoff_coefficient(alpha, delta), alpha


def softmin_true(delta: float, alpha: float, q1: float = 0.5) -> float:
    """Quadrature value of the soft-min lower bound for the Gaussian pair."""
    q2 = 1.0 - q1

    def phi(t):
        mix = q1 * t + q2
        u1 = q1 * t / mix
        u2 = q2 / mix
        big, small = max(u1, u2), min(u1, u2)
        # ln(e^(-a*u1) + e^(-a*u2)) = -a*small + log1p(e^(-a*(big-small)))
        inner = math.log1p(math.exp(-alpha)) + alpha * small
        inner -= math.log1p(math.exp(-alpha * (big - small)))
        return mix * inner / alpha

    return dphi_quad(phi, delta)


def ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


def knn_density_reference(k: int, m: int, dim: int, rho: float) -> float:
    return k / (m * ball_volume(dim) * rho**dim)


def brute_kth_distances(queries: np.ndarray, refs: np.ndarray, k_max: int) -> np.ndarray:
    """Sorted distances to the k_max nearest references, by full scan."""
    out = np.empty((len(queries), k_max))
    for i, q in enumerate(queries):
        d = np.sqrt(((refs - q) ** 2).sum(axis=1))
        out[i] = np.sort(d)[:k_max]
    return out


_EDGE_TABLE_CACHE: dict[int, np.ndarray] = {}


def _condensed_index(i: int, j: int, n: int) -> int:
    if i > j:
        i, j = j, i
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def _decode_prufer(seq: tuple[int, ...], n: int) -> list[tuple[int, int]]:
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        for leaf in range(n):
            if degree[leaf] == 1:
                edges.append((min(leaf, v), max(leaf, v)))
                degree[leaf] -= 1
                degree[v] -= 1
                break
    last = [v for v in range(n) if degree[v] == 1]
    edges.append((last[0], last[1]))
    return edges


def spanning_tree_edge_table(n: int) -> np.ndarray:
    """Condensed edge indices of every labeled spanning tree on n nodes.

    Shape (n**(n-2), n-1); each row is one tree from the full Prufer-sequence
    enumeration.
    """
    if n not in _EDGE_TABLE_CACHE:
        rows = []
        for seq in itertools.product(range(n), repeat=n - 2):
            edges = _decode_prufer(seq, n)
            rows.append([_condensed_index(i, j, n) for i, j in edges])
        _EDGE_TABLE_CACHE[n] = np.array(rows, dtype=np.int32)
    return _EDGE_TABLE_CACHE[n]


def exhaustive_mst(dist_matrix: np.ndarray) -> tuple[float, set[tuple[int, int]]]:
    """Minimum spanning tree by checking every labeled tree.

    Returns the minimal total weight and the edge set of the first minimal
    tree in enumeration order.
    """
    n = dist_matrix.shape[0]
    table = spanning_tree_edge_table(n)
    iu = np.triu_indices(n, k=1)
    condensed = np.asarray(dist_matrix)[iu]
    totals = condensed[table].sum(axis=1)
    best = int(np.argmin(totals))
    pair_of = list(zip(iu[0].tolist(), iu[1].tolist()))
    edges = {pair_of[idx] for idx in table[best]}
    return float(totals[best]), edges
