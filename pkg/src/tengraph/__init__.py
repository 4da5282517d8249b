"""Transfer learning for tensor Gaussian graphical models."""

import logging
import os

__version__ = "0.1.0"

_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def configure_logging(level=None):
    """Set the package log level, from TENGRAPH_LOG when not given."""
    name = (level or os.environ.get("TENGRAPH_LOG", "error")).lower()
    if name not in _LEVELS:
        raise ValueError(
            f"invalid log level {name!r}: expected one of {sorted(_LEVELS)}"
        )
    logger = logging.getLogger("tengraph")
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.setLevel(_LEVELS[name])
    return logger


from .tensor_ops import (  # noqa: E402
    MatrixNorms,
    kron_all,
    mode_product,
    multi_mode_product,
    norms,
    refold,
    sym_sqrt,
    unfold,
    vec,
)
from .tgt_io import read_tensor, write_tensor  # noqa: E402
from .sampling import (  # noqa: E402
    DomainData,
    GraphSpec,
    Scenario,
    ScenarioConfig,
    chain_precision,
    gen_scenario,
    make_auxiliary,
    nearest_neighbor_precision,
    sample_tensor_normal,
)
from .tlasso import (  # noqa: E402
    GlassoConvergenceError,
    TlassoFit,
    TlassoSettings,
    glasso,
    mode_covariance,
    tlasso_fit,
)
from .transfer import TransferFit, TransferOptions, transfer_fit  # noqa: E402
from .metrics import (  # noqa: E402
    MetricReport,
    cv_relative_error,
    evaluate,
    kl_divergence_delta,
    prediction_error,
)
