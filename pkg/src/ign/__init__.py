"""Incremental Gauss-Newton solvers for finite-sum nonlinear equations."""

from .errors import (
    BadLabel,
    DimensionMismatch,
    Diverged,
    EmptyDataset,
    IgnError,
    InconsistentDimension,
    InnerMatrixSingular,
    NonFiniteValue,
    NotSPD,
    ParamOutOfRange,
    ParseError,
    RunAborted,
    SingularGram,
)
from .problems import (
    AffineSystem,
    ChandrasekharH,
    RegLogistic,
    SoftMaxMin,
    chandrasekhar,
    dump_libsvm,
    load_libsvm,
    random_affine,
    reg_logistic,
    soft_max_min,
    synthetic_logistic,
)
from .rate_theory import (
    TheoryParams,
    aux_sequence,
    contraction_factor,
    convergence_radius,
    rate_envelope,
)
from .residuals import CallableSystem, CountingSystem, ResidualSystem, check_gradients
from .solvers import (
    METHODS,
    SolverConfig,
    TraceRecord,
    epochs_to_tol,
    gn_step,
    init_state,
    mbign_step,
    run,
)

__version__ = "0.1.0"
