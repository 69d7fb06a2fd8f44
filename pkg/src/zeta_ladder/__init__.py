"""Hardy's Z function, fourth moments of zeta on the critical line, and the
second-order Jacob's ladder phi_2 defined by matching a weighted fourth moment
to the plain one."""

from .errors import (
    AccuracyError,
    BracketError,
    CacheError,
    CacheFingerprintError,
    CacheFormatError,
    CacheMonotonicityError,
    CacheVersionError,
    ConvergenceError,
    DomainError,
    ZetaLadderError,
)
from .ladder import (
    DenseLadder,
    LadderPoint,
    ReverseInterval,
    chord_slope,
    inverse_ladder,
    phi2_derivative,
    reverse_interval,
    solve_phi2,
)
from .moments import MomentTable, fourth_moment, ingham_main, load_table, save_table
from .quadrature import PanelPolicy, QuadratureResult, integrate, integrate_weighted
from .verify import (
    VerificationReport,
    verify_chord,
    verify_laplace,
    verify_lemma_phi2_near_T,
    verify_phi2pp_bound,
    verify_theorem,
)
from .weighted import (
    MuFamily,
    WeightedMomentContext,
    laplace_fourth_moment,
    phi2_prime,
    phi2_second,
    phi2_second_parts,
    weighted_fourth_moment,
)
from .zeta_core import ZEvaluator, find_zero, hardy_z, theta, z4

__version__ = "0.1.0"
