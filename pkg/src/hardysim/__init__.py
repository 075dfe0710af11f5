"""Simulation and checks for Hardy's two-interferometer experiment."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    GAMMA, Arm, IsometrySpec, JointState, Pair, PathObservable, Phase, ProjectorSpec, Stage,
    apply_isometry, born_probability, inner, measure_decompose, postselect, states_equal,
)
from .experiment import (  # noqa: E402
    CanonicalTag, EvolutionStep, RunOutcome, canonical_state, evolve, final_distribution,
    sample_runs,
)
