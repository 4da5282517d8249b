"""Transfer estimation of tensor precision matrices from auxiliary domains.

Given a target domain and K auxiliary domains, each mode precision is
re-estimated in two trace-quadratic steps around the pooled covariance
Sigma_A = sum_k alpha_k Sigma^(k):

  step a  Delta-hat = soft-threshold(Omega0 Sigma_A - I, lam1), an estimate of
          the pooled divergence of the auxiliary mixture from the target;
  step b  column-wise penalized quadratic programs
          min_th 0.5 th' Sigma_A th - th'(Delta-hat' + I)_j + lam2 ||th_{-j}||_1,
          warm-started at the initializer's columns.

A held-out fold of the target then decides, column by column, between the
initializer and the transferred estimate, and the kept matrix is symmetrized.

Two scale conventions run through the pipeline. Estimated precisions follow
the model's identifiability normalization (unit Frobenius norm per mode), so
the step-b output is renormalized before the column contest. Covariance-side
quantities carry the data scale, so the rate-based penalty levels lam1 and
lam2 are multiplied by max(1, ||Sigma_A||_max); at unit covariance scale this
factor is 1 and the plain rate rules apply unchanged.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import transfer_cd
from .tensor_ops import norms, require_symmetric
from .tlasso import TlassoSettings, mode_covariance, tlasso_fit

__all__ = [
    "TransferOptions",
    "TransferFit",
    "Weights",
    "CdConvergenceError",
    "soft_threshold",
    "loss_delta",
    "loss_omega",
    "estimate_divergence",
    "divergence_scale",
    "naive_weights",
    "adaptive_weights",
    "transfer_precision",
    "select_columns",
    "symmetrize",
    "lambda1_default",
    "default_lambda2_grid",
    "bic_select_lambda2",
    "transfer_fit",
]


class CdConvergenceError(RuntimeError):
    """Coordinate descent ran out of sweeps; ``last`` carries the iterate."""

    def __init__(self, message, last):
        super().__init__(message)
        self.last = last


def soft_threshold(x, t):
    """Entrywise soft threshold sign(x) * max(|x| - t, 0)."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def loss_delta(delta, omega, sigma_a):
    """0.5 tr(Delta'Delta) - tr((Omega Sigma_A - I)' Delta)."""
    delta = np.asarray(delta, dtype=float)
    b = omega @ sigma_a - np.eye(delta.shape[0])
    return 0.5 * float(np.sum(delta * delta)) - float(np.sum(b * delta))


def loss_omega(omega, sigma_a, delta):
    """0.5 tr(Omega' Sigma_A Omega) - <Delta' + I, Omega>, entrywise pairing.

    The gradient is Sigma_A Omega - (Delta' + I), which vanishes at the
    population precision when Delta = Omega Sigma_A - I.
    """
    omega = np.asarray(omega, dtype=float)
    b = delta.T + np.eye(omega.shape[0])
    return 0.5 * float(np.sum(omega * (sigma_a @ omega))) - float(np.sum(b * omega))


def estimate_divergence(omega0, sigma_a, lam1):
    """Closed-form minimizer of loss_delta + lam1 ||Delta||_1 (all entries)."""
    if lam1 < 0:
        raise ValueError(f"lam1 must be nonnegative, got {lam1}")
    omega0 = np.asarray(omega0, dtype=float)
    b = omega0 @ np.asarray(sigma_a, dtype=float) - np.eye(omega0.shape[0])
    return soft_threshold(b, lam1)


def divergence_scale(omega0, sigma_k, eps=1e-8):
    """Largest per-mode divergence of a domain's covariances from the target.

    For each mode, || Omega0_m Sigma^k_m - I ||_{1,inf} is divided by
    || Sigma^k_m ||_{1,inf}; the raw norm grows with the covariance magnitude
    (initializer noise is amplified by Sigma), so without the denominator a
    domain with small covariance norm can look spuriously close to the target.
    """
    vals = []
    for om, sig in zip(omega0, sigma_k):
        raw = norms(om @ sig - np.eye(om.shape[0])).one_inf
        vals.append(raw / max(norms(sig).one_inf, eps))
    return max(vals)


def naive_weights(n_ks):
    n_ks = np.asarray(n_ks, dtype=float)
    if n_ks.ndim != 1 or len(n_ks) == 0 or np.any(n_ks <= 0):
        raise ValueError("n_ks must be a nonempty vector of positive sizes")
    return n_ks / n_ks.sum()


def adaptive_weights(n_ks, h_hats, eps=1e-8):
    """alpha_k proportional to n_k / max(h_k, eps), normalized to sum 1."""
    n_ks = np.asarray(n_ks, dtype=float)
    h = np.maximum(np.asarray(h_hats, dtype=float), eps)
    if n_ks.shape != h.shape:
        raise ValueError("n_ks and h_hats must have matching shapes")
    if np.any(n_ks <= 0):
        raise ValueError("n_ks must be positive")
    w = n_ks / h
    return w / w.sum()


@dataclass
class Weights:
    scheme: str
    alpha: np.ndarray
    h_hat: np.ndarray | None = None


def transfer_precision(sigma_a, delta_hat, lam2, init, tol=1e-8, max_sweeps=1000):
    """Solve the column problems of step b; returns a generally asymmetric matrix.

    Column j minimizes 0.5 th'Sigma_A th - th'(Delta-hat' + I)_j + lam2||th_{-j}||_1
    by cyclic coordinate descent from the corresponding column of ``init``.  The
    linear term pairs column j of Omega with row j of Delta-hat: that is the
    orientation under which the penalty-free population solution is the target
    precision itself (Sigma_A* Omega = Delta*' + I), and it matches loss_omega.
    """
    sigma_a = require_symmetric(np.asarray(sigma_a, dtype=float), "sigma_a")
    if lam2 < 0:
        raise ValueError(f"lam2 must be nonnegative, got {lam2}")
    if np.any(np.diag(sigma_a) <= 0):
        raise ValueError("sigma_a needs a strictly positive diagonal")
    p = sigma_a.shape[0]
    target = np.asarray(delta_hat, dtype=float).T + np.eye(p)
    theta = np.array(init, dtype=float)
    if theta.shape != (p, p):
        raise ValueError(f"init must be {p}x{p}, got {theta.shape}")
    sweeps = transfer_cd(sigma_a, target, float(lam2), theta, tol, max_sweeps)
    if (sweeps < 0).any():
        bad = int(np.where(sweeps < 0)[0][0])
        raise CdConvergenceError(
            f"column {bad} did not converge in {max_sweeps} sweeps", theta
        )
    return theta


def select_columns(omega0, omega_transfer, sigma_tilde, tie_tol=1e-12):
    """Pick, per column, the candidate with smaller held-out residual
    ||Sigma-tilde w - e_j||_2^2; ties go to the transferred column.

    Returns (matrix of chosen columns, boolean mask of transferred columns).
    """
    p = sigma_tilde.shape[0]
    r0 = ((sigma_tilde @ omega0 - np.eye(p)) ** 2).sum(axis=0)
    r1 = ((sigma_tilde @ omega_transfer - np.eye(p)) ** 2).sum(axis=0)
    use_transfer = ~(r0 < r1 - tie_tol)
    out = np.where(use_transfer[None, :], omega_transfer, omega0)
    return out, use_transfer


def symmetrize(omega):
    """(Omega + Omega') / 2 and its smallest eigenvalue as a diagnostic."""
    omega = np.asarray(omega, dtype=float)
    sym = (omega + omega.T) / 2.0
    return sym, float(np.linalg.eigvalsh(sym)[0])


def lambda1_default(omega0, n, p):
    """2 ||Omega0||_{1,inf} sqrt(p_m log p_m / (n p)) for a mode matrix."""
    omega0 = np.asarray(omega0, dtype=float)
    pm = omega0.shape[0]
    if pm < 2:
        raise ValueError("lambda1 rule needs p_m >= 2")
    return 2.0 * norms(omega0).one_inf * math.sqrt(pm * math.log(pm) / (n * p))


def default_lambda2_grid(dims, N, num=20):
    """20 log-spaced values on [0.01, 1] times sqrt(pbar log pbar / (p N))."""
    pbar = max(dims)
    p = int(np.prod(dims, dtype=np.int64))
    anchor = math.sqrt(pbar * math.log(pbar) / (p * N))
    return np.geomspace(0.01 * anchor, anchor, num)


def bic_criterion(omega, sigma_a, delta_hat, N):
    """loss_omega plus (log N / N) times the number of nonzeros (all entries)."""
    nnz = int(np.count_nonzero(omega))
    return loss_omega(omega, sigma_a, delta_hat) + math.log(N) / N * nnz


def bic_select_lambda2(sigma_a, delta_hat, omega0, grid, N, tol=1e-8, max_sweeps=1000):
    """Fit step b on each grid value and keep the BIC minimizer.

    Ties (exactly equal criterion values) resolve to the larger lam2. Returns
    (lam2, fitted omega, criterion values aligned with the grid).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("grid must be a nonempty 1-D array")
    order = np.argsort(grid)
    crits = np.empty(len(grid))
    best = None
    for i in order:
        om = transfer_precision(sigma_a, delta_hat, grid[i], omega0, tol, max_sweeps)
        crits[i] = bic_criterion(om, sigma_a, delta_hat, N)
        if best is None or crits[i] <= best[2]:
            best = (grid[i], om, crits[i])
    return best[0], best[1], crits


@dataclass
class TransferOptions:
    scheme: str = "naive"              # "naive" | "adaptive"
    c: float = 0.6                     # fraction excluded from the holdout fold
    seed: int = 0                      # split seed
    tlasso: TlassoSettings = field(default_factory=TlassoSettings)
    whitening: TlassoSettings = field(
        default_factory=lambda: TlassoSettings(lambdas=0.0)
    )                                  # covariance-side fits; unpenalized so
    #                                    traces stay unbiased (a penalized fit
    #                                    inflates tr(Sigma-hat) by 10-20%)
    lambda1: object = None             # None -> scaled rate rule; scalar or per-mode
    lambda2_grid: object = None        # None -> scaled default grid
    cd_tol: float = 1e-8
    cd_max_sweeps: int = 1000
    tie_tol: float = 1e-12
    weight_eps: float = 1e-8


@dataclass
class TransferFit:
    omega0: list                       # initializer (full target sample), per mode
    sigma_a: list                      # pooled covariance, per mode
    delta: list                        # divergence estimates, per mode
    omega_transfer: list               # step-b estimates, renormalized, per mode
    omega_final: list                  # after column selection, per mode
    omega_sym: list                    # symmetrized finals, per mode
    selected: list                     # bool mask of transferred columns, per mode
    weights: Weights
    lambda1: list
    lambda2: list
    split: dict                        # {"fit": [...], "holdout": [...]}
    psi_min: list                      # smallest eigenvalue of each omega_sym
    sigma_k: list                      # per domain: per-mode covariance estimates

    def to_jsonable(self):
        return {
            "weights": {
                "scheme": self.weights.scheme,
                "alpha": self.weights.alpha.tolist(),
                "h_hat": None if self.weights.h_hat is None else self.weights.h_hat.tolist(),
            },
            "lambda1": list(map(float, self.lambda1)),
            "lambda2": list(map(float, self.lambda2)),
            "split": self.split,
            "psi_min": list(map(float, self.psi_min)),
            "selected": [m.astype(int).tolist() for m in self.selected],
        }


def _split_indices(n, c, seed):
    n_fit = int(math.floor(c * n))
    if n_fit < 2 or n - n_fit < 2:
        raise ValueError(
            f"split of n={n} at c={c} leaves a fold below 2 samples"
        )
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:n_fit]), np.sort(perm[n_fit:])


def transfer_fit(target_samples, aux_samples, options=None):
    """Full transfer pipeline for one target and K auxiliary domains.

    target_samples: array (n, p_1, ..., p_M); aux_samples: sequence of arrays
    (n_k, p_1, ..., p_M) with matching trailing dims. See TransferOptions for
    the knobs; defaults follow the rate-based rules.

    The initializer is fit on the full target sample; the seeded split only
    reserves a holdout fold, whose covariances referee the per-column contest
    between initializer and transfer. A rejected transfer therefore falls back
    to the full-sample fit rather than to a smaller-fold one.
    """
    opt = options or TransferOptions()
    if opt.scheme not in ("naive", "adaptive"):
        raise ValueError(f"unknown weight scheme {opt.scheme!r}")
    x = np.asarray(target_samples, dtype=float)
    if x.ndim < 2:
        raise ValueError("target_samples must be a batch of tensors")
    dims = x.shape[1:]
    M = len(dims)
    p = int(np.prod(dims, dtype=np.int64))
    aux = [np.asarray(a, dtype=float) for a in aux_samples]
    if not aux:
        raise ValueError("transfer_fit needs at least one auxiliary domain")
    for k, a in enumerate(aux):
        if a.shape[1:] != dims:
            raise ValueError(
                f"auxiliary {k} dims {a.shape[1:]} do not match target dims {dims}"
            )

    fit_idx, hold_idx = _split_indices(x.shape[0], opt.c, opt.seed)
    n = x.shape[0]

    omega0 = tlasso_fit(x, opt.tlasso).precisions

    sigma_k = []
    for a in aux:
        fit_k = tlasso_fit(a, opt.whitening)
        sigma_k.append([mode_covariance(a, m, fit_k.precisions) for m in range(M)])

    n_ks = np.array([a.shape[0] for a in aux], dtype=float)
    if opt.scheme == "naive":
        weights = Weights("naive", naive_weights(n_ks))
    else:
        h = np.array([divergence_scale(omega0, sk) for sk in sigma_k])
        weights = Weights("adaptive", adaptive_weights(n_ks, h, opt.weight_eps), h)

    sigma_a = [
        sum(weights.alpha[k] * sigma_k[k][m] for k in range(len(aux)))
        for m in range(M)
    ]
    scale = [max(1.0, float(np.abs(sigma_a[m]).max())) for m in range(M)]

    if opt.lambda1 is None:
        lambda1 = [lambda1_default(omega0[m], n, p) * scale[m] for m in range(M)]
    elif np.isscalar(opt.lambda1):
        lambda1 = [float(opt.lambda1)] * M
    else:
        lambda1 = [float(v) for v in opt.lambda1]
    delta = [estimate_divergence(omega0[m], sigma_a[m], lambda1[m]) for m in range(M)]

    N = int(n_ks.sum())
    base_grid = (
        default_lambda2_grid(dims, N)
        if opt.lambda2_grid is None
        else np.asarray(opt.lambda2_grid, dtype=float)
    )
    lambda2, omega_transfer = [], []
    for m in range(M):
        grid = base_grid * scale[m] if opt.lambda2_grid is None else base_grid
        lam2, om, _ = bic_select_lambda2(
            sigma_a[m], delta[m], omega0[m], grid, N, opt.cd_tol, opt.cd_max_sweeps
        )
        lambda2.append(lam2)
        omega_transfer.append(om / np.linalg.norm(om))

    fold_fit = tlasso_fit(x[hold_idx], opt.whitening)
    sigma_tilde = [
        mode_covariance(x[hold_idx], m, fold_fit.precisions) for m in range(M)
    ]

    omega_final, omega_sym, selected, psi_min = [], [], [], []
    for m in range(M):
        om_f, mask = select_columns(
            omega0[m], omega_transfer[m], sigma_tilde[m], opt.tie_tol
        )
        sym, psi = symmetrize(om_f)
        omega_final.append(om_f)
        omega_sym.append(sym)
        selected.append(mask)
        psi_min.append(psi)

    return TransferFit(
        omega0=omega0,
        sigma_a=sigma_a,
        delta=delta,
        omega_transfer=omega_transfer,
        omega_final=omega_final,
        omega_sym=omega_sym,
        selected=selected,
        weights=weights,
        lambda1=lambda1,
        lambda2=lambda2,
        split={"fit": fit_idx.tolist(), "holdout": hold_idx.tolist()},
        psi_min=psi_min,
        sigma_k=sigma_k,
    )
