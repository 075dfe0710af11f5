"""Pre- and post-selected ensembles.

For an intermediate projective partition ``{P_k}``, evolution ``V`` and a
final projector ``Post``, the probability of outcome ``k`` given both the
initial state and the final outcome is

    p_k = |Post V P_k |pre>|^2 / sum_j |Post V P_j |pre>|^2
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .core import (
    PRUNE, IsometrySpec, JointState, Label, Pair, PathObservable, ProjectorSpec, Stage,
    _check_partition, born_probability,
)
from .errors import StageError, ZeroProbabilityError
from .experiment import (
    AFTER_STAGE, BEFORE_STAGE, SCHEMA_VERSION, U_MINUS, U_PLUS, U_PLUS_U_MINUS,
    SCHEDULES, CanonicalTag, evolve, second_splitters,
)

D_BOTH_LABELS = (Pair("d", "d"),)


@dataclass(frozen=True)
class AblScenario:
    pre_state: JointState
    intermediate_partition: Sequence[ProjectorSpec]
    evolution: IsometrySpec
    post_projector: ProjectorSpec

    def __post_init__(self):
        object.__setattr__(self, "intermediate_partition", tuple(self.intermediate_partition))
        _validate(self.pre_state.stage, self.intermediate_partition, self.evolution, self.post_projector)


def _validate(stage: Stage, partition, evolution: IsometrySpec, post: ProjectorSpec) -> None:
    _check_partition(stage, partition)
    if evolution.requires != stage:
        raise StageError(f"evolution {evolution.name} starts at {evolution.requires}, pre-state is at {stage}")
    if post.stage != evolution.produces:
        raise StageError(f"post-selection projector is for {post.stage}, evolution ends at {evolution.produces}")


def abl_weights(pre: Mapping[Label, complex], partition: Sequence[ProjectorSpec],
                evolution: IsometrySpec, post: ProjectorSpec) -> list[float]:
    """Unnormalized weights |Post V P_k pre|^2; ``pre`` need not be normalized."""
    weights = []
    for cell in partition:
        branch = {k: a for k, a in pre.items() if k in cell.included}
        final = evolution.apply_vector(branch)
        weights.append(math.fsum(abs(a) ** 2 for k, a in final.items() if k in post.included))
    return weights


def abl_from_amplitudes(pre: Mapping[Label, complex], stage: Stage, partition: Sequence[ProjectorSpec],
                        evolution: IsometrySpec, post: ProjectorSpec) -> list[float]:
    _validate(stage, partition, evolution, post)
    w = abl_weights(pre, partition, evolution, post)
    total = math.fsum(w)
    scale = math.fsum(abs(a) ** 2 for a in pre.values())
    if scale <= 0 or total / scale <= PRUNE:
        raise ZeroProbabilityError(f"post-selection on {post.name!r} is impossible")
    return [x / total for x in w]


def abl_probabilities(sc: AblScenario) -> list[float]:
    """Outcome probabilities of the intermediate partition, in cell order."""
    return abl_from_amplitudes(sc.pre_state.amplitudes, sc.pre_state.stage,
                               sc.intermediate_partition, sc.evolution, sc.post_projector)


def binary_partition(obs: PathObservable, stage: Stage) -> list[ProjectorSpec]:
    """``[obs = 1, obs = 0]`` at ``stage``."""
    p = obs.projector(stage)
    return [p, p.complement(f"{obs.name}=0")]


def hardy_scenario(obs: PathObservable, post: ProjectorSpec | None = None) -> AblScenario:
    """Pre-selected on the pre-BS2 state, post-selected by default on D+ and D- firing."""
    if post is None:
        post = ProjectorSpec(frozenset(D_BOTH_LABELS), AFTER_STAGE, "D+D-")
    return AblScenario(evolve(SCHEDULES[CanonicalTag.BEFORE]),
                       binary_partition(obs, BEFORE_STAGE), second_splitters(), post)


@dataclass(frozen=True)
class AblEntry:
    observable: str
    outcome_values: tuple[int, int]
    probabilities: tuple[float, float]

    @property
    def certain_value(self) -> int | None:
        for v, p in zip(self.outcome_values, self.probabilities):
            if p >= 1 - 1e-9:
                return v
        return None


@dataclass(frozen=True)
class VaidmanReport:
    entries: tuple[AblEntry, ...]
    control_u_plus: float
    product_rule_holds: bool = field(init=False)

    def __post_init__(self):
        f = self.values
        holds = None not in f and f[0] * f[1] == f[2]
        object.__setattr__(self, "product_rule_holds", holds)

    @property
    def values(self) -> tuple:
        return tuple(e.certain_value for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "records": [{"observable": e.observable, "outcome_values": list(e.outcome_values),
                         "probabilities": list(e.probabilities),
                         "product_rule_holds": self.product_rule_holds} for e in self.entries],
            "values": list(self.values),
            "control_full_postselection_u_plus": self.control_u_plus,
            "product_rule_holds": self.product_rule_holds,
        }


def vaidman_report() -> VaidmanReport:
    """Intermediate U+, U- and U+U- given detection at both D+ and D-."""
    entries = []
    for obs in (U_PLUS, U_MINUS, U_PLUS_U_MINUS):
        p1, p0 = abl_probabilities(hardy_scenario(obs))
        entries.append(AblEntry(obs.name, (1, 0), (p1, p0)))
    control = abl_probabilities(hardy_scenario(U_PLUS, ProjectorSpec.full(AFTER_STAGE)))[0]
    return VaidmanReport(tuple(entries), control)


def born_control(obs: PathObservable) -> float:
    """Born weight of ``obs`` in the pre-BS2 state, for comparison with ABL."""
    state = evolve(SCHEDULES[CanonicalTag.BEFORE])
    return born_probability(state, obs.projector(BEFORE_STAGE))
