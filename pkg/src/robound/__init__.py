"""Loop-gain certification and worst-case construction for feedback
interconnections described by 2x2 Hermitian quadratic constraints."""
from ._tol import get_tolerance, set_tolerance, tolerance
from .certify import (
    ClosedLoopReport,
    ConditionResult,
    GainBound,
    check_plant_constraint,
    e_form_gain,
    gain_bound,
    search_plant_constraint,
    verify_closed_loop,
    verify_error_gain,
    verify_gain_bound,
)
from .classic import Circle, Convention, Passivity, SmallGain, certify_passivity, fit_passivity, to_MN
from .errors import *  # noqa: F401,F403
from .interpolate import Case, extend, realize_violation, verify_interpolant
from .l2e import FIR, Delay, StateSpace, StaticNL, empirical_gain, simulate, solve_loop
from .quadform import (
    Definiteness,
    HermitianForm2,
    definiteness,
    epsilon_family,
    factor_indefinite,
    nonneg_direction,
    qc_eval,
)
from .relations import (
    FunctionRelation,
    LinearMap,
    LoopWitness,
    ScaledIdentity,
    StaticNonlinearity,
    closed_loop_witnesses,
    evaluate_loop,
)
from .space import COMPLEX, REAL, EuclideanSpace, TruncatedSignalSpace, WeightedSpace
from .worstcase import CannotDefeat, construct_worst_case, defeat_gain

__version__ = "0.1.0"
