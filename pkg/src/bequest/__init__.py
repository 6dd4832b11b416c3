"""Optimal purchase of term life insurance to reach a bequest goal."""

from .actuarial import ProblemSpec, QuadratureConfig, safe_level, term_apv
from .discrete import DiscreteMortality, DiscreteSpec, dp_policy_path, dp_value, enumerate_oracle
from .errors import DomainError, MultipleCrossingsError, NoCrossingError, NumericalError
from .mortality import ConstantForce, DeMoivre, GammaTwo, LinearPdf, MortalityLaw, Tabulated
from .montecarlo import Deferred, FullUntilRuin, SimResult, Threshold, WaitUntilSafe, simulate
from .optimal import (
    FullInsurance,
    ThresholdCurve,
    Unverified,
    VIReport,
    WaitThenFull,
    boundary_slopes,
    classify,
    compute_tr,
    find_threshold,
    phi_optimal,
    vi_check,
)
from .strategies import deferred, eval_deferred, eval_full, eval_wait, solve_t0, solve_tf

__version__ = "0.1.0"
