"""Metropolis-class sampling for targets with non-convex support.

The central move reuses proposals that land in zero density by projecting
them repeatedly along their own direction until the support is re-entered
or a halting index runs out; the proposal stays symmetric, so the usual
Metropolis ratio applies unchanged.  On top of that sit a monotonic
variant for minimization, multistart and basin-hopping drivers, rare-event
tail experiments and the statistical diagnostics used to test them.
"""

from .core import (
    CallCounter,
    HaltingCapExceeded,
    LogTarget,
    NonFiniteProposal,
    SkippingError,
    StepRecord,
    counted_target,
    in_support,
    log_acceptance,
    make_stream,
    split_stream,
)
from .diagnostics import (
    BatchMeansEstimate,
    ergodic_average,
    ks_two_sample,
    lag1_autocovariance,
    transition_balance_test,
)
from .doubling import (
    ConvexObstacle,
    DoublingStats,
    ExponentialIncrements,
    bridge_partial_sum,
    doubling_find_entry,
    gamma_partial_sum,
)
from .optimize import (
    BoxProblem,
    OptRunReport,
    basin_hopping,
    in_basin_of,
    local_search,
    multistart,
    multistart_single,
)
from .proposals import (
    DeterministicHalting,
    DirectionalDensity,
    DirectionalHalting,
    GaussianProposal,
    GeometricHalting,
    InfiniteHalting,
    RadialProposal,
    exponential_radius,
    resolve_halting,
    sample_halting,
    sample_offset,
    sample_radial_increment,
)
from .samplers import (
    ChainResult,
    SkippingConfig,
    angular_log_acceptance,
    make_mss_step,
    make_rwm_step,
    make_skip_step,
    mss_step,
    run_chain,
    rwm_step,
    skip_step,
    skipping_proposal,
)
from .targets import (
    BoltzmannTarget,
    GaussianMixture,
    LevelConditionedTarget,
    eggholder,
    make_random_mixture,
    mixture_logpdf,
    two_interval_uniform,
    uniform_on_intervals,
)

__version__ = "0.1.0"
