"""q-calculus special functions and spectral solvers for time-fractional q-problems."""

from .qcalculus import (
    caputo_derivative,
    jackson_integral,
    jackson_integral_0inf,
    q_derivative,
    rl_fractional_integral,
)
from .qcore import (
    QContext,
    SeriesResult,
    Status,
    q_factorial,
    q_gamma,
    q_number,
    q_pochhammer,
    q_pochhammer_inf,
    q_pochhammer_real,
)
from .qspecial import (
    DEFAULT,
    STRICT,
    EvalStrategy,
    MLParams,
    Mode,
    ml_one_minus,
    q_exp,
    q_mittag_leffler,
    translated_ml,
)
from .spectral import (
    CoefficientField,
    SolutionBundle,
    SpectralModel,
    TimeGrid,
    direct_solve_superorder,
    direct_solve_suborder,
    energy_estimate_report,
    inverse_solve,
    reconstruct_field,
    residual_check,
    sobolev_norm,
)

__version__ = "0.1.0"
