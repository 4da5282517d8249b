"""Dense tensor primitives: unfoldings, mode products, Kronecker helpers.

Tensors are plain numpy arrays. All flattening follows the column-major
convention (first index fastest), so ``vec`` of an order-M array agrees with
stacking mode-1 fibers, and the mode-m unfolding places entry
(i_1, ..., i_M) in row i_m and column 1 + sum_{k != m} i_k * J_k with
J_k = prod_{k' < k, k' != m} p_{k'}.  Mode indices are 0-based, numpy style.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "vec",
    "unfold",
    "refold",
    "mode_product",
    "multi_mode_product",
    "kron_all",
    "sym_sqrt",
    "norms",
    "MatrixNorms",
    "require_symmetric",
]


def vec(x):
    """Column-major vectorization of an array."""
    return np.asarray(x).reshape(-1, order="F")


def _check_mode(x, mode):
    if not 0 <= mode < x.ndim:
        raise ValueError(f"mode {mode} out of range for order-{x.ndim} tensor")


def unfold(x, mode):
    """Mode-m matricization of ``x``, shape (p_mode, prod(other dims)).

    Column j enumerates the remaining indices with the earlier modes varying
    fastest (the standard Kolda-Bader ordering).
    """
    x = np.asarray(x)
    _check_mode(x, mode)
    return np.moveaxis(x, mode, 0).reshape(x.shape[mode], -1, order="F")


def refold(mat, mode, dims):
    """Inverse of :func:`unfold`: rebuild the order-len(dims) tensor."""
    dims = tuple(int(d) for d in dims)
    mat = np.asarray(mat)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    rest = tuple(d for k, d in enumerate(dims) if k != mode)
    if mat.shape != (dims[mode], int(np.prod(rest, dtype=np.int64))):
        raise ValueError(
            f"matrix shape {mat.shape} incompatible with dims {dims} at mode {mode}"
        )
    return np.moveaxis(mat.reshape((dims[mode],) + rest, order="F"), 0, mode)


def mode_product(x, a, mode):
    """Mode-m product ``x ×_mode a``; contracts a's columns with mode ``mode``.

    Satisfies unfold(mode_product(x, a, m), m) == a @ unfold(x, m).
    """
    x = np.asarray(x)
    a = np.asarray(a)
    _check_mode(x, mode)
    if a.ndim != 2 or a.shape[1] != x.shape[mode]:
        raise ValueError(
            f"matrix shape {a.shape} does not match tensor dim {x.shape[mode]} at mode {mode}"
        )
    return np.moveaxis(np.tensordot(a, x, axes=(1, mode)), 0, mode)


def multi_mode_product(x, mats):
    """Apply one matrix per mode; entries of ``mats`` may be None to skip."""
    x = np.asarray(x)
    if len(mats) != x.ndim:
        raise ValueError(f"need {x.ndim} matrices (or None), got {len(mats)}")
    out = x
    for mode, a in enumerate(mats):
        if a is not None:
            out = mode_product(out, a, mode)
    return out


def kron_all(mats):
    """Kronecker product of the given matrices, left to right."""
    mats = list(mats)
    if not mats:
        raise ValueError("kron_all needs at least one matrix")
    out = np.asarray(mats[0])
    for a in mats[1:]:
        out = np.kron(out, a)
    return out


def require_symmetric(a, name="matrix", tol=1e-10):
    """Raise ValueError unless ``a`` is square and symmetric within ``tol``
    (relative to its largest entry)."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    scale = max(1.0, np.abs(a).max()) if a.size else 1.0
    dev = np.abs(a - a.T).max() if a.size else 0.0
    if dev > tol * scale:
        raise ValueError(f"{name} is not symmetric: max |a - a.T| = {dev:.3e}")
    return a


def sym_sqrt(a, tol=1e-10):
    """Symmetric square root of a symmetric PSD matrix via eigendecomposition.

    Eigenvalues in [-tol, 0) are clamped to zero; anything below -tol raises,
    since the input is then genuinely not PSD.
    """
    a = require_symmetric(a, "sym_sqrt input", tol)
    w, v = np.linalg.eigh(a)
    if w[0] < -tol:
        raise ValueError(f"matrix is not PSD: smallest eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


@dataclass(frozen=True)
class MatrixNorms:
    frobenius: float
    max_abs: float
    one_inf: float      # max over columns of the column l1 norm
    offdiag_l1: float   # sum of |entries| off the diagonal


def norms(a):
    """Frobenius, entrywise max, max-column-l1, and off-diagonal l1 of a matrix."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"norms expects a matrix, got shape {a.shape}")
    absa = np.abs(a)
    off = absa.sum() - np.trace(absa) if a.shape[0] == a.shape[1] else absa.sum()
    return MatrixNorms(
        frobenius=float(np.linalg.norm(a)),
        max_abs=float(absa.max()) if a.size else 0.0,
        one_inf=float(absa.sum(axis=0).max()) if a.size else 0.0,
        offdiag_l1=float(off),
    )
