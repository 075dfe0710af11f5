"""The two-interferometer experiment: staged evolution and run statistics."""
from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import (
    GAMMA, SQRT2, Arm, JointState, PathObservable, Pair, Phase, ProjectorSpec,
    Stage, annihilation, apply_isometry, arm_partition, born_probability, bs1, bs2,
    compose, label_partition, measure_decompose,
)
from .errors import ScheduleError

SCHEMA_VERSION = 1
GENERATOR = "numpy.random.PCG64"

U_PLUS = PathObservable("U+", positron={"u"})
U_MINUS = PathObservable("U-", electron={"u"})
U_PLUS_U_MINUS = U_PLUS * U_MINUS
D_PLUS = PathObservable("D+", positron={"d"})
D_MINUS = PathObservable("D-", electron={"d"})
C_PLUS = PathObservable("C+", positron={"c"})
C_MINUS = PathObservable("C-", electron={"c"})

OBSERVABLES = {o.name: o for o in (U_PLUS, U_MINUS, U_PLUS_U_MINUS,
                                    D_PLUS, D_MINUS, C_PLUS, C_MINUS)}

SOURCE_STAGE = Stage(Phase.SOURCE, Phase.SOURCE)
BEFORE_STAGE = Stage(Phase.AFTER_BS1, Phase.AFTER_BS1)
F_MINUS_STAGE = Stage(Phase.AFTER_BS1, Phase.AFTER_BS2)
F_PLUS_STAGE = Stage(Phase.AFTER_BS2, Phase.AFTER_BS1)
AFTER_STAGE = Stage(Phase.AFTER_BS2, Phase.AFTER_BS2)


class EvolutionStep(str, Enum):
    BS1_PLUS = "bs1+"
    BS1_MINUS = "bs1-"
    ANNIHILATE = "ann"
    BS2_PLUS = "bs2+"
    BS2_MINUS = "bs2-"


class CanonicalTag(str, Enum):
    BEFORE = "before"
    F_MINUS = "f_minus"
    F_PLUS = "f_plus"
    AFTER = "after"

    @property
    def stage(self) -> Stage:
        return _TAG_STAGES[self]


_TAG_STAGES = {
    CanonicalTag.BEFORE: BEFORE_STAGE,
    CanonicalTag.F_MINUS: F_MINUS_STAGE,
    CanonicalTag.F_PLUS: F_PLUS_STAGE,
    CanonicalTag.AFTER: AFTER_STAGE,
}

S = EvolutionStep
PREP = (S.BS1_PLUS, S.BS1_MINUS, S.ANNIHILATE)
SCHEDULES = {
    CanonicalTag.BEFORE: PREP,
    CanonicalTag.F_MINUS: PREP + (S.BS2_MINUS,),
    CanonicalTag.F_PLUS: PREP + (S.BS2_PLUS,),
    CanonicalTag.AFTER: PREP + (S.BS2_MINUS, S.BS2_PLUS),
}


class RunOutcome(str, Enum):
    GAMMA = "Gamma"
    CPCM = "CpCm"
    CPDM = "CpDm"
    DPCM = "DpCm"
    DPDM = "DpDm"

    @property
    def label(self):
        return _OUTCOME_LABELS[self]


_OUTCOME_LABELS = {
    RunOutcome.GAMMA: GAMMA,
    RunOutcome.CPCM: Pair("c", "c"),
    RunOutcome.CPDM: Pair("c", "d"),
    RunOutcome.DPCM: Pair("d", "c"),
    RunOutcome.DPDM: Pair("d", "d"),
}


def parse_schedule(text: str | Iterable[str]) -> list[EvolutionStep]:
    items = text.split(",") if isinstance(text, str) else list(text)
    try:
        return [EvolutionStep(s.strip().lower()) for s in items if s.strip()]
    except ValueError as exc:
        raise ScheduleError(str(exc)) from None


def validate_schedule(schedule: Sequence[EvolutionStep]) -> None:
    seen: list[EvolutionStep] = []
    for step in schedule:
        step = EvolutionStep(step)
        if step in seen:
            raise ScheduleError(f"step {step.value} applied twice")
        if step is S.ANNIHILATE and not {S.BS1_PLUS, S.BS1_MINUS} <= set(seen):
            raise ScheduleError("annihilation requires both first beam splitters before it")
        if step in (S.BS2_PLUS, S.BS2_MINUS) and S.ANNIHILATE not in seen:
            raise ScheduleError(f"{step.value} requires the annihilation step before it")
        seen.append(step)


def step_isometry(step: EvolutionStep, stage: Stage):
    if step is S.BS1_PLUS:
        return bs1(Arm.POSITRON, stage)
    if step is S.BS1_MINUS:
        return bs1(Arm.ELECTRON, stage)
    if step is S.ANNIHILATE:
        return annihilation(stage)
    if step is S.BS2_PLUS:
        return bs2(Arm.POSITRON, stage)
    return bs2(Arm.ELECTRON, stage)


def initial_state() -> JointState:
    return JointState({Pair("s", "s"): 1.0}, SOURCE_STAGE)


def evolve(schedule: Sequence[EvolutionStep | str], start: JointState | None = None) -> JointState:
    """Apply the schedule's maps to |s+>|s-> (or ``start``) in order."""
    steps = [EvolutionStep(s) for s in schedule]
    validate_schedule(steps)
    state = initial_state() if start is None else start
    for step in steps:
        state = apply_isometry(state, step_isometry(step, state.stage))
    return state


def second_splitters(stage: Stage = BEFORE_STAGE):
    """BS2+ after BS2- as one map from the pre-BS2 stage to the final stage."""
    first = bs2(Arm.ELECTRON, stage)
    return compose(first, bs2(Arm.POSITRON, first.produces), "BS2+*BS2-")


def canonical_state(tag: CanonicalTag | str) -> JointState:
    """The four displayed state vectors, typed in directly."""
    tag = CanonicalTag(tag)
    r = SQRT2
    if tag is CanonicalTag.BEFORE:
        amps = {GAMMA: -0.5, Pair("u", "v"): 0.5j, Pair("v", "u"): 0.5j, Pair("v", "v"): 0.5}
    elif tag is CanonicalTag.F_MINUS:
        k = 1 / (2 * r)
        amps = {GAMMA: -r * k, Pair("u", "c"): -k, Pair("v", "c"): 2j * k, Pair("u", "d"): 1j * k}
    elif tag is CanonicalTag.F_PLUS:
        k = 1 / (2 * r)
        amps = {GAMMA: -r * k, Pair("c", "u"): -k, Pair("c", "v"): 2j * k, Pair("d", "u"): 1j * k}
    else:
        amps = {GAMMA: -2 / 4, Pair("c", "c"): -3 / 4, Pair("c", "d"): 1j / 4,
                Pair("d", "c"): 1j / 4, Pair("d", "d"): -1 / 4}
    return JointState(amps, tag.stage)


# exact coefficients of the final state, used to cross-check floating results
FINAL_AMPLITUDES_EXACT = {
    RunOutcome.GAMMA: (Fraction(-2, 4), Fraction(0)),
    RunOutcome.CPCM: (Fraction(-3, 4), Fraction(0)),
    RunOutcome.CPDM: (Fraction(0), Fraction(1, 4)),
    RunOutcome.DPCM: (Fraction(0), Fraction(1, 4)),
    RunOutcome.DPDM: (Fraction(-1, 4), Fraction(0)),
}


def final_distribution() -> dict[RunOutcome, float]:
    state = evolve(SCHEDULES[CanonicalTag.AFTER])
    return {o: born_probability(state, ProjectorSpec(frozenset([o.label]), AFTER_STAGE, o.value))
            for o in RunOutcome}


def sample_runs(n: int, seed: int) -> dict[RunOutcome, int]:
    """Multinomial draw of ``n`` runs from a PCG64 stream seeded by ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must fit in 64 unsigned bits")
    dist = final_distribution()
    probs = np.array([dist[o] for o in RunOutcome])
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = rng.multinomial(n, probs / probs.sum())
    return {o: int(c) for o, c in zip(RunOutcome, counts)}


def run_report(n: int, seed: int) -> dict:
    counts = sample_runs(n, seed)
    dist = final_distribution()
    rows = []
    for o in RunOutcome:
        expected = n * dist[o]
        sigma = math.sqrt(n * dist[o] * (1 - dist[o]))
        rows.append({"outcome": o.value, "count": counts[o], "expected": expected,
                     "deviation_sigmas": (counts[o] - expected) / sigma if sigma else 0.0})
    return {"schema_version": SCHEMA_VERSION, "n": n, "seed": seed,
            "generator": GENERATOR, "records": rows}


def path_detector_branches(tag: CanonicalTag | str = CanonicalTag.F_MINUS, arm: Arm | None = None):
    """Worlds of a staged state once every path carries a detector.

    Splits the state by the full joint label (or by the modes of ``arm``
    alone), i.e. one branch per detector pattern that can fire.
    """
    state = evolve(SCHEDULES[CanonicalTag(tag)])
    if arm is None:
        cells = label_partition(state.stage)
    else:
        cells = arm_partition(state.stage, arm)
    return measure_decompose(state, cells)
