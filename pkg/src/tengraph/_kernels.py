"""JIT-compiled coordinate descent inner loops.

Two scalar Gauss-Seidel kernels live here so the solvers stay readable:
one lasso solve for the graphical lasso column subproblem, and the
column-wise update for the divergence-corrected precision estimator.
Both are cyclic, warm-started in place, and stop on the largest
coordinate change in a sweep.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _soft(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@njit(cache=True)
def lasso_cd(V, b, lam, x, tol, max_sweeps):
    """Minimize 0.5 x'Vx - b'x + lam*||x||_1 in place; returns sweeps used.

    V must have strictly positive diagonal. Returns -1 if the sweep budget
    runs out before the largest coordinate change drops below tol.
    """
    p = b.shape[0]
    for sweep in range(max_sweeps):
        delta = 0.0
        for i in range(p):
            r = b[i]
            for k in range(p):
                if k != i:
                    r -= V[i, k] * x[k]
            new = _soft(r, lam) / V[i, i]
            d = abs(new - x[i])
            if d > delta:
                delta = d
            x[i] = new
        if delta < tol:
            return sweep + 1
    return -1


@njit(cache=True)
def transfer_cd(sigma, target, lam, theta, tol, max_sweeps):
    """Column-wise CD for 0.5 th'Sigma th - th'target_j + lam*||th_{-j}||_1.

    theta holds one column per problem and is updated in place; the j-th
    coordinate of column j is unpenalized. Returns an int array of sweeps
    used per column, -1 where a column failed to converge.
    """
    p = sigma.shape[0]
    ncol = target.shape[1]
    out = np.empty(ncol, dtype=np.int64)
    for j in range(ncol):
        out[j] = -1
        for sweep in range(max_sweeps):
            delta = 0.0
            for i in range(p):
                xi = target[i, j]
                for k in range(p):
                    if k != i:
                        xi -= sigma[i, k] * theta[k, j]
                if i == j:
                    new = xi / sigma[i, i]
                else:
                    new = _soft(xi, lam) / sigma[i, i]
                d = abs(new - theta[i, j])
                if d > delta:
                    delta = d
                theta[i, j] = new
            if delta < tol:
                out[j] = sweep + 1
                break
    return out
