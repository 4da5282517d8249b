"""Accuracy metrics for mode-precision estimates and the CV protocol.

Estimator comparisons happen at the identifiability scale: ``evaluate``
expects the true mode precisions already Frobenius-normalized, matching the
scale every estimator in the package works at. Support metrics count exact
zeros (soft thresholding and coordinate descent produce them), so no epsilon
cut is applied to the estimates.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .tlasso import mode_covariance, tlasso_fit
from .transfer import TransferOptions, transfer_fit

__all__ = [
    "MetricReport",
    "METRIC_FIELDS",
    "evaluate",
    "kl_divergence_delta",
    "prediction_error",
    "cv_relative_error",
]

# Canonical column order for CSV serialization of a report.
METRIC_FIELDS = (
    "kron_frob_error",
    "mode_frob_error_avg",
    "mode_max_error_avg",
    "kron_tpr",
    "kron_tnr",
    "mode_tpr_avg",
    "mode_tnr_avg",
)


@dataclass(frozen=True)
class MetricReport:
    kron_frob_error: float
    mode_frob_error_avg: float
    mode_max_error_avg: float
    kron_tpr: float
    kron_tnr: float
    mode_tpr_avg: float
    mode_tnr_avg: float


def _rate(hits, total):
    # An empty denominator means the class is absent; report a perfect rate.
    return hits / total if total else 1.0


def _offdiag_nnz(supports):
    total = math.prod(int(s.sum()) for s in supports)
    diag = math.prod(int(np.diag(s).sum()) for s in supports)
    return total - diag


def evaluate(est, truth):
    """Error and support-recovery metrics of per-mode precision estimates.

    est and truth are length-M sequences of square matrices with matching
    shapes. The Kronecker-product Frobenius error uses the trace expansion

        ||A1 x ... x AM - B1 x ... x BM||_F^2
            = prod ||Am||_F^2 - 2 prod tr(Am' Bm) + prod ||Bm||_F^2,

    so the p x p products are never materialized; likewise the Kronecker
    TPR/TNR come from per-mode support counts (the support of a Kronecker
    product is the Kronecker product of the supports). All rates are over
    off-diagonal entries only.
    """
    est = [np.asarray(a, dtype=float) for a in est]
    truth = [np.asarray(b, dtype=float) for b in truth]
    if len(est) != len(truth):
        raise ValueError(f"got {len(est)} estimates for {len(truth)} truths")
    for m, (a, b) in enumerate(zip(est, truth)):
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
            raise ValueError(
                f"mode {m}: estimate shape {a.shape} vs truth shape {b.shape}"
            )

    sq = (
        math.prod(float(np.sum(a * a)) for a in est)
        - 2.0 * math.prod(float(np.sum(a * b)) for a, b in zip(est, truth))
        + math.prod(float(np.sum(b * b)) for b in truth)
    )
    kron_frob = math.sqrt(max(sq, 0.0))

    mode_frob = float(np.mean([np.linalg.norm(a - b) for a, b in zip(est, truth)]))
    mode_max = float(np.mean([np.abs(a - b).max() for a, b in zip(est, truth)]))

    tprs, tnrs = [], []
    for a, b in zip(est, truth):
        off = ~np.eye(a.shape[0], dtype=bool)
        e = (a != 0) & off
        t = (b != 0) & off
        tprs.append(_rate(int((e & t).sum()), int(t.sum())))
        tnrs.append(_rate(int((~e & ~t & off).sum()), int((~t & off).sum())))

    e_sup = [a != 0 for a in est]
    t_sup = [b != 0 for b in truth]
    i_sup = [e & t for e, t in zip(e_sup, t_sup)]
    p = math.prod(a.shape[0] for a in est)
    offdiag_total = p * p - p
    n_est = _offdiag_nnz(e_sup)
    n_tru = _offdiag_nnz(t_sup)
    n_int = _offdiag_nnz(i_sup)
    true_neg = offdiag_total - (n_est + n_tru - n_int)

    return MetricReport(
        kron_frob_error=kron_frob,
        mode_frob_error_avg=mode_frob,
        mode_max_error_avg=mode_max,
        kron_tpr=_rate(n_int, n_tru),
        kron_tnr=_rate(true_neg, offdiag_total - n_tru),
        mode_tpr_avg=float(np.mean(tprs)),
        mode_tnr_avg=float(np.mean(tnrs)),
    )


def kl_divergence_delta(delta, p, p_m):
    """KL divergence induced by a mode divergence: (p/2p_m)(tr D - log det(D+I)).

    D of the form Omega Sigma - I (both factors SPD) has the spectrum of an
    SPD pencil, real and positive after adding I; anything else violates the
    positive-definite precondition and raises. Nonnegative for every valid
    input, zero exactly at D = 0.
    """
    d = np.asarray(delta, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"delta must be square, got shape {d.shape}")
    w = np.linalg.eigvals(d + np.eye(d.shape[0]))
    tol = 1e-9 * max(1.0, float(np.abs(w.real).max()))
    if w.real.min() <= 0 or float(np.abs(w.imag).max()) > tol:
        raise ValueError("delta + I must be positive definite")
    return (p / (2.0 * p_m)) * float(np.trace(d) - np.log(w.real).sum())


def prediction_error(omega, sigma_test):
    """Out-of-sample loss (1/p_m)(-log det Omega + tr(Sigma_test Omega)).

    Minimized over PD Omega at inv(Sigma_test); raises if omega is not PD.
    """
    om = np.asarray(omega, dtype=float)
    st = np.asarray(sigma_test, dtype=float)
    if om.shape != st.shape or om.ndim != 2 or om.shape[0] != om.shape[1]:
        raise ValueError(f"shape mismatch: omega {om.shape}, sigma_test {st.shape}")
    w = np.linalg.eigvalsh((om + om.T) / 2.0)
    if w[0] <= 0:
        raise ValueError(f"omega must be positive definite (min eig {w[0]:.3e})")
    pm = om.shape[0]
    return float(-np.log(w).sum() + np.trace(st @ om)) / pm


def cv_relative_error(target, auxiliaries, folds=5, mode=0, options=None):
    """Cross-validated relative prediction errors of the transfer estimators.

    Splits the target sample into ``folds`` parts (shuffled by the options
    seed). Per fold, the training part fits Tlasso, transfer with naive
    weights ("proposed"), and transfer with adaptive weights ("proposed.v");
    the held-out part yields Sigma_test for the requested mode via
    mode_covariance, whitened by the training Tlasso fit for every method so
    the comparison isolates the mode-``mode`` precision. PEs are averaged
    over folds and the relative errors are ratios to the Tlasso average.

    ``target`` and each auxiliary may be a DomainData or a bare sample array.
    With no auxiliaries both transfer estimators degrade to the initializer
    and the relative errors are exactly 1.
    """
    opt = options or TransferOptions()
    x = np.asarray(getattr(target, "samples", target), dtype=float)
    aux = [np.asarray(getattr(a, "samples", a), dtype=float) for a in auxiliaries]
    n = x.shape[0]
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if n < 2 * folds:
        raise ValueError(f"n={n} too small for {folds} folds (need n >= {2 * folds})")
    if not 0 <= mode < x.ndim - 1:
        raise ValueError(f"mode {mode} out of range for order-{x.ndim - 1} samples")

    parts = np.array_split(np.random.default_rng(opt.seed).permutation(n), folds)
    pes = {"tlasso": [], "proposed": [], "proposed_v": []}
    for f in range(folds):
        train_idx = np.sort(np.concatenate([parts[g] for g in range(folds) if g != f]))
        train = x[train_idx]
        base = tlasso_fit(train, opt.tlasso)
        sigma_test = mode_covariance(x[np.sort(parts[f])], mode, base.precisions)

        ests = {"tlasso": base.precisions[mode]}
        if aux:
            for scheme, key in (("naive", "proposed"), ("adaptive", "proposed_v")):
                fit = transfer_fit(train, aux, replace(opt, scheme=scheme))
                ests[key] = fit.omega_sym[mode]
        else:
            ests["proposed"] = ests["proposed_v"] = base.precisions[mode]
        for key, om in ests.items():
            pes[key].append(prediction_error(om, sigma_test))

    out = {
        "pe_tlasso": float(np.mean(pes["tlasso"])),
        "pe_proposed": float(np.mean(pes["proposed"])),
        "pe_proposed_v": float(np.mean(pes["proposed_v"])),
    }
    out["rel_proposed"] = out["pe_proposed"] / out["pe_tlasso"]
    out["rel_proposed_v"] = out["pe_proposed_v"] / out["pe_tlasso"]
    out["per_fold"] = {k: list(map(float, v)) for k, v in pes.items()}
    return out
