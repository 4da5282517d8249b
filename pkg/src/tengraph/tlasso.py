"""Alternating penalized MLE for tensor graphical models.

Each mode m is updated by a graphical lasso on the whitened mode-m Gram
matrix

    S_m = (p_m / (n p)) sum_i V_i V_i',   V_i = unfold(X_i x_{j!=m} Omega_j^{1/2}, m),

minimizing (1/p_m)(-log det Omega + tr(S_m Omega)) + lam_m * ||Omega||_{1,off}.
Estimates are Frobenius-normalized after every update, which pins down the
per-mode scale the model leaves free.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import lasso_cd
from .tensor_ops import require_symmetric, sym_sqrt

__all__ = [
    "TlassoSettings",
    "TlassoFit",
    "GlassoResult",
    "GlassoConvergenceError",
    "default_lambdas",
    "mode_covariance",
    "glasso",
    "glasso_objective",
    "glasso_kkt_residual",
    "tlasso_fit",
]


class GlassoConvergenceError(RuntimeError):
    """Sweep budget exhausted; ``last`` carries the final iterate."""

    def __init__(self, message, last):
        super().__init__(message)
        self.last = last


@dataclass
class TlassoSettings:
    lambdas: object = None          # None -> rate rule; scalar or per-mode sequence
    lambda_scale: float = 2.0       # C in C * sqrt(p_m log p_m / (n p))
    max_outer_iters: int = 5
    outer_tol: float = 1e-3
    glasso_tol: float = 1e-7
    glasso_max_iters: int = 200
    inner_tol: float = 1e-10
    inner_max_sweeps: int = 1000


@dataclass
class TlassoFit:
    precisions: list
    lambdas: list
    n_iters: int
    converged: bool
    final_change: float


@dataclass
class GlassoResult:
    omega: np.ndarray
    sweeps: int
    kkt_residual: float
    objective_trace: list = field(default_factory=list)


def default_lambdas(dims, n, scale=2.0):
    """Per-mode penalty rule scale * sqrt(p_m log p_m / (n p))."""
    p = int(np.prod(dims, dtype=np.int64))
    return [scale * math.sqrt(pm * math.log(pm) / (n * p)) if pm > 1 else 0.0
            for pm in dims]


def mode_covariance(samples, mode, others):
    """Whitened mode-``mode`` Gram matrix of a batch of tensors.

    samples: array (n, p_1, ..., p_M) or a sequence of order-M arrays.
    others: length-M sequence of precisions used to whiten the remaining
    modes; the entry at ``mode`` is ignored and may be None.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim < 2:
        raise ValueError("samples must be at least a batch of vectors")
    n = x.shape[0]
    dims = x.shape[1:]
    M = len(dims)
    if not 0 <= mode < M:
        raise ValueError(f"mode {mode} out of range for order-{M} samples")
    if len(others) != M:
        raise ValueError(f"need {M} whitening entries, got {len(others)}")
    for j in range(M):
        if j == mode:
            continue
        root = sym_sqrt(np.asarray(others[j], dtype=float))
        x = np.moveaxis(np.tensordot(root, x, axes=(1, j + 1)), 0, j + 1)
    u = np.moveaxis(x, mode + 1, 0).reshape(dims[mode], -1, order="F")
    p = int(np.prod(dims, dtype=np.int64))
    return (dims[mode] / (n * p)) * (u @ u.T)


def glasso_objective(S, omega, lam):
    p = S.shape[0]
    sign, logdet = np.linalg.slogdet(omega)
    if sign <= 0:
        return np.inf
    off = np.abs(omega).sum() - np.abs(np.diag(omega)).sum()
    return (-logdet + float(np.sum(S * omega))) / p + lam * off


def glasso_kkt_residual(S, omega, lam):
    """Largest stationarity violation of the scaled objective.

    With W = omega^{-1} and t = lam * p: |S - W| <= t on zero off-diagonals,
    S - W + t sign(omega) = 0 on nonzero off-diagonals, S = W on the diagonal.
    """
    p = S.shape[0]
    t = lam * p
    W = np.linalg.inv(omega)
    G = S - W
    off = ~np.eye(p, dtype=bool)
    zero = off & (omega == 0.0)
    nonzero = off & (omega != 0.0)
    res = np.abs(np.diag(G)).max()
    if zero.any():
        res = max(res, (np.abs(G[zero]) - t).max())
    if nonzero.any():
        res = max(res, np.abs(G[nonzero] + t * np.sign(omega[nonzero])).max())
    return float(res)


def glasso(S, lam, *, tol=1e-7, max_iters=200, inner_tol=1e-10,
           inner_max_sweeps=1000, init=None):
    """Graphical lasso by block coordinate descent on the precision matrix.

    Each column is a lasso subproblem solved by cyclic coordinate descent,
    warm-started at the current iterate, so the objective is nonincreasing
    sweep by sweep. Iterates stay positive definite by the Schur-complement
    update of the diagonal. Convergence is declared when the KKT residual
    of the scaled objective falls below ``tol``.
    """
    S = require_symmetric(np.asarray(S, dtype=float), "S")
    p = S.shape[0]
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    if np.any(np.diag(S) <= 0):
        raise ValueError("S needs a strictly positive diagonal")
    if lam == 0:
        if np.linalg.eigvalsh(S)[0] <= 1e-12 * max(1.0, np.abs(S).max()):
            raise ValueError("lam=0 requires S to be positive definite")
        omega = np.linalg.inv(S)
        omega = (omega + omega.T) / 2.0
        kkt = glasso_kkt_residual(S, omega, 0.0)
        return GlassoResult(omega, 0, kkt, [glasso_objective(S, omega, 0.0)])

    if init is None:
        omega = np.diag(1.0 / np.diag(S))
    else:
        omega = np.array(init, dtype=float)
        if omega.shape != S.shape or np.linalg.eigvalsh((omega + omega.T) / 2)[0] <= 0:
            omega = np.diag(1.0 / np.diag(S))

    if p == 1:
        omega = np.array([[1.0 / S[0, 0]]])
        return GlassoResult(omega, 0, 0.0, [glasso_objective(S, omega, lam)])

    t = lam * p
    mask = np.ones(p, dtype=bool)
    trace = []
    for sweep in range(max_iters):
        for j in range(p):
            mask[j] = False
            idx = np.where(mask)[0]
            mask[j] = True
            om11 = omega[np.ix_(idx, idx)]
            A = np.linalg.inv(om11)
            s12 = S[idx, j]
            s22 = S[j, j]
            w = omega[idx, j].copy()
            if lasso_cd(s22 * A, -s12, t, w, inner_tol, inner_max_sweeps) < 0:
                raise GlassoConvergenceError(
                    f"inner lasso for column {j} did not converge", omega
                )
            omega[idx, j] = w
            omega[j, idx] = w
            omega[j, j] = 1.0 / s22 + w @ A @ w
        trace.append(glasso_objective(S, omega, lam))
        kkt = glasso_kkt_residual(S, omega, lam)
        if kkt <= tol:
            return GlassoResult(omega, sweep + 1, kkt, trace)
    raise GlassoConvergenceError(
        f"glasso did not reach tol={tol} in {max_iters} sweeps (kkt={kkt:.3e})",
        omega,
    )


def tlasso_fit(samples, settings=None):
    """Alternating glasso over the modes of a batch of tensors.

    Returns a TlassoFit whose ``precisions`` are the Frobenius-normalized
    per-mode estimates. The outer loop stops when the largest per-mode
    relative change drops below ``outer_tol`` or after ``max_outer_iters``
    passes, whichever comes first.
    """
    st = settings or TlassoSettings()
    x = np.asarray(samples, dtype=float)
    if x.ndim < 2:
        raise ValueError("samples must be a batch of tensors, shape (n, p_1, ...)")
    n = x.shape[0]
    dims = x.shape[1:]
    p = int(np.prod(dims, dtype=np.int64))
    for pm in dims:
        if n * p / pm < 2:
            raise ValueError(
                f"insufficient data: n*p/p_m = {n * p / pm:.1f} < 2 for p_m={pm}"
            )

    if st.lambdas is None:
        lambdas = default_lambdas(dims, n, st.lambda_scale)
    elif np.isscalar(st.lambdas):
        lambdas = [float(st.lambdas)] * len(dims)
    else:
        lambdas = [float(v) for v in st.lambdas]
        if len(lambdas) != len(dims):
            raise ValueError(f"need {len(dims)} lambdas, got {len(lambdas)}")

    M = len(dims)
    omegas = [np.eye(pm) / math.sqrt(pm) for pm in dims]
    warm = [None] * M
    change = np.inf
    it = 0
    for it in range(1, st.max_outer_iters + 1):
        change = 0.0
        for m in range(M):
            S = mode_covariance(x, m, omegas)
            res = glasso(
                S,
                lambdas[m],
                tol=st.glasso_tol,
                max_iters=st.glasso_max_iters,
                inner_tol=st.inner_tol,
                inner_max_sweeps=st.inner_max_sweeps,
                init=warm[m],
            )
            warm[m] = res.omega
            new = res.omega / np.linalg.norm(res.omega)
            change = max(change, float(np.linalg.norm(new - omegas[m])))
            omegas[m] = new
        if change < st.outer_tol:
            return TlassoFit(omegas, lambdas, it, True, change)
    return TlassoFit(omegas, lambdas, it, False, change)
