"""Monte Carlo laboratory for a critical branching process with
immigration in a random environment, its associated random walk, and the
limit process built from a stable Lévy level and an i.i.d. ratio
sequence."""

from .config import RunConfig
from .env import (
    EnvironmentModel,
    EnvironmentStep,
    EnvSteps,
    ImmigrationLaw,
    OffspringLaw,
    draw_step,
    draw_steps,
    immigration_mean,
    log_mean,
    normal_model,
    pareto_model,
    validate_model,
)
from .walk import (
    StableSpec,
    WalkPath,
    WalkSummary,
    arcsine_cdf,
    centered_at_min,
    normalizer,
    simulate_walk,
    summarize,
)
from .ladder import LadderTables, estimate_ladder_tables
from .conditioned import (
    ConditionedSample,
    sample_conditioned_batch,
    sample_conditioned_negative,
    sample_conditioned_positive,
)
from .bpire import (
    NormalizerPair,
    Trajectory,
    compute_normalizers,
    normalized_process,
    simulate_bpire,
    simulate_decomposed,
)
from .limit import (
    GammaSample,
    LevyPath,
    LimitFdd,
    level_of,
    sample_gamma,
    sample_limit_fdd,
    sample_two_sided_environment,
    simulate_levy,
    stable_standard,
)
from .stats import bootstrap_ci, ecdf, joint_two_time_test, ks_against_cdf, ks_two_sample
from .streams import derive_stream

__version__ = "0.1.0"
