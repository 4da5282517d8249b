"""Synthetic graphical models and tensor-normal data generation.

Two sparse precision families are provided (a banded chain and a planar
nearest-neighbor graph), plus a sampler for tensor-normal data whose
vectorization has covariance Sigma_M kron ... kron Sigma_1, and scenario
builders that attach auxiliary domains with controlled divergence from the
target model.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor_ops import require_symmetric, sym_sqrt

__all__ = [
    "GraphSpec",
    "DomainData",
    "ScenarioConfig",
    "Scenario",
    "chain_precision",
    "nearest_neighbor_precision",
    "graph_precisions",
    "sample_tensor_normal",
    "make_auxiliary",
    "gen_scenario",
    "max_column_support",
    "rate_anchor",
]

# Smallest eigenvalue enforced on generated precisions. The nearest-neighbor
# construction starts from a zero diagonal, so it always needs the shift; the
# chain construction needs it for p >= 3 where the unit-diagonal band matrix
# stops being positive definite.
EIG_FLOOR = 0.2


def chain_precision(p, rng):
    """Banded chain precision: band-1 entries exp(-rho/2), rho ~ U(0.5, 1).

    The unit-diagonal band matrix is indefinite once p exceeds 2, so the
    diagonal is shifted (uniformly) until the smallest eigenvalue reaches
    EIG_FLOOR. For p = 2 no shift is ever needed and the diagonal stays 1.
    """
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    omega = np.eye(p)
    if p > 1:
        rho = rng.uniform(0.5, 1.0, size=p - 1)
        band = np.exp(-rho / 2.0)
        omega += np.diag(band, 1) + np.diag(band, -1)
    smallest = np.linalg.eigvalsh(omega)[0]
    if smallest < EIG_FLOOR:
        omega += (EIG_FLOOR - smallest) * np.eye(p)
    return omega


def nearest_neighbor_precision(p, rng, neighbors=4):
    """Precision from a planar nearest-neighbor graph.

    p points are placed uniformly on the unit square and each point is linked
    to its ``neighbors`` nearest points (edge set symmetrized). Edge weights
    have magnitude U(0.5, 1) with independent random signs. The diagonal is
    then lifted by |psi_min| + EIG_FLOOR, giving smallest eigenvalue exactly
    EIG_FLOOR.
    """
    if p < 2:
        raise ValueError(f"need p >= 2 for a nearest-neighbor graph, got {p}")
    k = min(neighbors, p - 1)
    pts = rng.uniform(0.0, 1.0, size=(p, 2))
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    omega = np.zeros((p, p))
    for i in range(p):
        for j in np.argsort(d2[i])[:k]:
            if omega[i, j] == 0.0:
                w = rng.uniform(0.5, 1.0) * (1.0 if rng.uniform() < 0.5 else -1.0)
                omega[i, j] = omega[j, i] = w
    smallest = np.linalg.eigvalsh(omega)[0]
    omega += (abs(smallest) + EIG_FLOOR) * np.eye(p)
    return omega


@dataclass(frozen=True)
class GraphSpec:
    kind: str                 # "chain" | "nearest_neighbor"
    dims: tuple
    seed: int | None = None


def graph_precisions(spec, rng=None):
    """One raw precision per mode, drawn independently."""
    if rng is None:
        if spec.seed is None:
            raise ValueError("GraphSpec.seed is required when no rng is given")
        rng = np.random.default_rng(spec.seed)
    if spec.kind == "chain":
        gen = chain_precision
    elif spec.kind == "nearest_neighbor":
        gen = nearest_neighbor_precision
    else:
        raise ValueError(f"unknown graph kind {spec.kind!r}")
    return [gen(int(p), rng) for p in spec.dims]


def sample_tensor_normal(precisions, n, rng):
    """Draw n tensor-normal samples for the given mode precisions.

    Each sample is Z x_1 Sigma_1^{1/2} ... x_M Sigma_M^{1/2} with
    Sigma_m = Omega_m^{-1} and Z iid standard normal, so vec(X) has
    covariance Sigma_M kron ... kron Sigma_1. Returns shape (n, p_1, ..., p_M).
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    roots = []
    for m, om in enumerate(precisions):
        om = require_symmetric(np.asarray(om, dtype=float), f"precision[{m}]")
        w = np.linalg.eigvalsh(om)
        if w[0] <= 1e-12:
            raise ValueError(
                f"precision[{m}] is not positive definite (min eig {w[0]:.3e})"
            )
        roots.append(sym_sqrt(np.linalg.inv(om)))
    dims = tuple(r.shape[0] for r in roots)
    x = rng.standard_normal(size=(n,) + dims)
    for m, r in enumerate(roots):
        # mode product along axis m+1 of the stacked array
        x = np.moveaxis(np.tensordot(r, x, axes=(1, m + 1)), 0, m + 1)
    return x


@dataclass
class DomainData:
    """Samples from one domain plus whatever ground truth is known."""

    samples: np.ndarray                      # shape (n, p_1, ..., p_M)
    truth: list | None = None                # raw mode precisions (target only)
    sigma: list | None = None                # true mode covariances (auxiliaries)
    delta: list | None = None                # realized divergences vs the target
    informative: bool | None = None

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def dims(self):
        return self.samples.shape[1:]


def make_auxiliary(sigma_star, n_k, h0, prob_zero, rng, informative=None):
    """Build one auxiliary domain near the target covariances ``sigma_star``.

    Per mode a raw divergence with iid entries (zero with probability
    ``prob_zero``, else U(-h0, h0)) perturbs the target covariance via
    Sigma^k = sym(Sigma* (Delta + I)). If that loses positive definiteness the
    diagonal is lifted by |psi_min| + 0.01. The divergence actually realized,
    Omega* Sigma^k - I, is recomputed after symmetrization/lifting and stored
    as truth; the raw draw is discarded.
    """
    sigmas, deltas, precs = [], [], []
    for sig in sigma_star:
        p = sig.shape[0]
        raw = np.where(
            rng.uniform(size=(p, p)) < prob_zero,
            0.0,
            rng.uniform(-h0, h0, size=(p, p)),
        )
        cand = sig @ (raw + np.eye(p))
        cand = (cand + cand.T) / 2.0
        smallest = np.linalg.eigvalsh(cand)[0]
        if smallest < 1e-6:
            cand += (abs(smallest) + 0.01) * np.eye(p)
        sigmas.append(cand)
        deltas.append(np.linalg.solve(sig, cand) - np.eye(p))
        precs.append(np.linalg.inv(cand))
    samples = sample_tensor_normal(precs, n_k, rng)
    return DomainData(samples=samples, sigma=sigmas, delta=deltas, informative=informative)


@dataclass
class ScenarioConfig:
    scenario: str                      # "one" | "two"
    graph: GraphSpec
    n: int = 50
    K: int = 5
    n_k: int | None = None             # defaults: 80 (scenario one), 100 (two)
    card_A: int | None = None          # scenario two only
    h0: float | None = None            # override the derived perturbation scale
    seed: int = 0


@dataclass
class Scenario:
    config: ScenarioConfig
    target: DomainData
    auxiliaries: list
    normalized_truth: list = field(default_factory=list)

    @property
    def informative_indices(self):
        return [k for k, d in enumerate(self.auxiliaries) if d.informative]


def max_column_support(mats):
    """Largest column support size over a list of square matrices."""
    return max(int((np.abs(m) > 0).sum(axis=0).max()) for m in mats)


def rate_anchor(dims, n):
    """sqrt(pbar log pbar / (n p)) with pbar = max dim, p = prod(dims)."""
    pbar = max(dims)
    p = int(np.prod(dims, dtype=np.int64))
    return math.sqrt(pbar * math.log(pbar) / (n * p))


def gen_scenario(cfg):
    """Generate a target domain and K auxiliary domains.

    Scenario "one": every auxiliary is informative (divergence entries are
    zero with probability 0.9, else U(-h01, h01), h01 the rate anchor).
    Scenario "two": the first card_A auxiliaries are informative as above and
    the rest draw divergences ten times s-bar larger (zero with probability
    0.75, else U(-h02, h02)), s-bar being the largest column support of the
    realized target precision.

    The target is sampled at the Frobenius-normalized scale (||Omega_m||_F = 1
    per mode), and all auxiliary covariances and realized divergences live at
    that scale; the raw generated precisions are kept in ``target.truth``.
    """
    if cfg.scenario not in ("one", "two"):
        raise ValueError(f"unknown scenario {cfg.scenario!r}")
    if cfg.scenario == "two":
        if cfg.card_A is None:
            raise ValueError("scenario two needs card_A")
        if not 0 <= cfg.card_A <= cfg.K:
            raise ValueError(f"card_A={cfg.card_A} outside [0, K={cfg.K}]")
    if cfg.K < 1:
        raise ValueError(f"need K >= 1, got K={cfg.K}")
    if cfg.n < 5:
        raise ValueError(f"need n >= 5 target samples, got {cfg.n}")

    root = np.random.SeedSequence(cfg.seed)
    graph_ss, target_ss, *aux_ss = root.spawn(2 + cfg.K)
    graph_rng = (
        np.random.default_rng(cfg.graph.seed)
        if cfg.graph.seed is not None
        else np.random.default_rng(graph_ss)
    )

    raw = graph_precisions(cfg.graph, graph_rng)
    normalized = [om / np.linalg.norm(om) for om in raw]
    sigma_star = [np.linalg.inv(om) for om in normalized]

    target = DomainData(
        samples=sample_tensor_normal(normalized, cfg.n, np.random.default_rng(target_ss)),
        truth=raw,
    )

    dims = cfg.graph.dims
    h01 = cfg.h0 if cfg.h0 is not None else rate_anchor(dims, cfg.n)
    n_k = cfg.n_k if cfg.n_k is not None else (80 if cfg.scenario == "one" else 100)

    auxiliaries = []
    for k in range(cfg.K):
        rng_k = np.random.default_rng(aux_ss[k])
        if cfg.scenario == "one" or k < cfg.card_A:
            aux = make_auxiliary(sigma_star, n_k, h01, 0.9, rng_k, informative=True)
        else:
            sbar = max_column_support(raw)
            h02 = 10.0 * sbar * rate_anchor(dims, cfg.n)
            aux = make_auxiliary(sigma_star, n_k, h02, 0.75, rng_k, informative=False)
        auxiliaries.append(aux)

    return Scenario(
        config=cfg, target=target, auxiliaries=auxiliaries, normalized_truth=normalized
    )
