"""Query-efficient hard-label adversarial attack toolkit.

Minimizes the L2 perturbation of an image against a label-only classifier
oracle by searching candidate triangles in a low-frequency DCT subspace
under a strict query budget.
"""

from .attack import AngleState, AttackConfig, AttackResult, run, update_alpha
from .bench import asr, queries_to_success, rmse, run_bench, write_results
from .errors import (
    BudgetExhausted,
    DegeneratePlaneError,
    DimensionError,
    InfeasibleAngleError,
    InitializationError,
    OracleUnavailable,
    ParameterError,
    TriattackError,
)
from .freq import dct2, idct2, low_freq_mask, sample_direction
from .geometry import (
    PlaneBasis,
    TriangleAngles,
    beta_bounds,
    candidate_vertex,
    make_plane,
    scale_ratio,
)
from .oracle import (
    CountingOracle,
    HalfspaceOracle,
    Oracle,
    QueryBudget,
    QuantizingOracle,
    RemoteOracle,
    SphereOracle,
    TinyMlpOracle,
    counted,
    is_adversarial,
)

__version__ = "0.1.0"

__all__ = [
    "AngleState",
    "AttackConfig",
    "AttackResult",
    "BudgetExhausted",
    "CountingOracle",
    "DegeneratePlaneError",
    "DimensionError",
    "HalfspaceOracle",
    "InfeasibleAngleError",
    "InitializationError",
    "Oracle",
    "OracleUnavailable",
    "ParameterError",
    "PlaneBasis",
    "QuantizingOracle",
    "QueryBudget",
    "RemoteOracle",
    "SphereOracle",
    "TinyMlpOracle",
    "TriangleAngles",
    "TriattackError",
    "asr",
    "beta_bounds",
    "candidate_vertex",
    "counted",
    "dct2",
    "idct2",
    "is_adversarial",
    "low_freq_mask",
    "make_plane",
    "queries_to_success",
    "rmse",
    "run",
    "run_bench",
    "sample_direction",
    "scale_ratio",
    "update_alpha",
    "write_results",
]
