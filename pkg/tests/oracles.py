"""Independent slow oracles used by several test modules.

These deliberately avoid the closed forms under test: second moments are
computed through the covariance function of the driving motion (integration
by parts against R), with adaptive quadrature for the smooth pieces.
"""

import numpy as np
from scipy import integrate


def fbm_cov(x, y, H):
    return 0.5 * (np.abs(x) ** (2 * H) + np.abs(y) ** (2 * H)
                  - np.abs(np.asarray(x) - np.asarray(y)) ** (2 * H))


def plinear_second_moment_oracle(left_values, slopes, H):
    """Var(int d dW) for piecewise linear d on a uniform partition.

    Writes int d dW = d(1-) W(1) - int d'(y) W(y) dy - sum_j jump_j W(a_j)
    (integration by parts for a function with jumps) and expands the
    variance against the covariance R.  O(N^2) with quadrature; test-grade.
    """
    v = np.asarray(left_values, dtype=float)
    g = np.asarray(slopes, dtype=float)
    pieces = len(v)
    edges = np.linspace(0.0, 1.0, pieces + 1)
    delta = 1.0 / pieces
    right = v + g * delta
    jumps = np.concatenate([[v[0]], v[1:] - right[:-1]])  # at edges[0..N-1]
    atoms_x = np.concatenate([edges[:-1], [1.0]])
    atoms_w = np.concatenate([-jumps, [right[-1]]])

    total = 0.0
    for x, wx in zip(atoms_x, atoms_w):
        for y, wy in zip(atoms_x, atoms_w):
            total += wx * wy * fbm_cov(x, y, H)
    for x, wx in zip(atoms_x, atoms_w):
        for i in range(pieces):
            if g[i] == 0.0:
                continue
            val, _ = integrate.quad(lambda y: fbm_cov(x, y, H),
                                    edges[i], edges[i + 1], epsabs=1e-13)
            total += 2.0 * wx * (-g[i]) * val
    for i in range(pieces):
        for j in range(pieces):
            if g[i] == 0.0 or g[j] == 0.0:
                continue
            val, _ = integrate.dblquad(lambda y, z: fbm_cov(z, y, H),
                                       edges[i], edges[i + 1],
                                       edges[j], edges[j + 1], epsabs=1e-12)
            total += g[i] * g[j] * val
    return total


def step_second_moment_oracle(breakpoints, values, H, samples=None, rng=None):
    """Var(int f dW) for a step function, via the increment covariance.

    Cross-checks the closed form through fresh quadratic-form algebra; with
    `samples` set, returns a Monte Carlo estimate instead.
    """
    bp = np.asarray(breakpoints, dtype=float)
    vals = np.asarray(values, dtype=float)
    r = fbm_cov(bp[:, None], bp[None, :], H)
    cov = r[1:, 1:] - r[1:, :-1] - r[:-1, 1:] + r[:-1, :-1]
    if samples is None:
        return float(vals @ cov @ vals)
    factor = np.linalg.cholesky(cov)
    draws = rng.standard_normal((samples, len(vals))) @ factor.T
    return float((draws @ vals).var(ddof=1))
