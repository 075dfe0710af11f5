"""Collapse prescriptions for a run in which detectors fire.

Detectors sit right behind the second beam splitters, so a detection at
``D+`` collapses the positron onto ``d+`` as soon as it happens.  Collapsed
states are the pre-BS2 state pushed through the fired arms' splitters and
conditioned on the detections, with the global phase removed so they read
as the bare kets ``|d+>|u->`` and so on.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .core import Arm, JointState, PathObservable, ProjectorSpec, canonical_phase, postselect
from .experiment import (
    C_MINUS, C_PLUS, D_MINUS, D_PLUS, PREP, SCHEDULES, SCHEMA_VERSION, CanonicalTag,
    EvolutionStep, evolve,
)
from .spacetime import (
    DEFAULT_GEOMETRY, EPS_GEOM, Boost, Event, IntervalClass, boost_event, in_backward_interior,
    interval_class,
)


class Detector(str, Enum):
    D_PLUS = "D+"
    D_MINUS = "D-"
    C_PLUS = "C+"
    C_MINUS = "C-"

    @property
    def observable(self) -> PathObservable:
        return _DETECTOR_OBS[self]

    @property
    def arm(self) -> Arm:
        return Arm.POSITRON if self.value.endswith("+") else Arm.ELECTRON


_DETECTOR_OBS = {Detector.D_PLUS: D_PLUS, Detector.D_MINUS: D_MINUS,
                 Detector.C_PLUS: C_PLUS, Detector.C_MINUS: C_MINUS}


@dataclass(frozen=True)
class DetectionRecord:
    event: Event
    detector: Detector

    def __post_init__(self):
        object.__setattr__(self, "detector", Detector(self.detector))

    def projector(self, stage) -> ProjectorSpec:
        return self.detector.observable.projector(stage)


def default_detections() -> tuple[DetectionRecord, DetectionRecord]:
    return (DetectionRecord(DEFAULT_GEOMETRY["D+"], Detector.D_PLUS),
            DetectionRecord(DEFAULT_GEOMETRY["D-"], Detector.D_MINUS))


def collapsed_state(fired: Iterable[DetectionRecord]) -> JointState:
    """Pre-BS2 state after the given detections have collapsed it."""
    fired = list(fired)
    arms = [d.detector.arm for d in fired]
    if len(set(arms)) != len(arms):
        raise ValueError("at most one detection per arm")
    if not fired:
        return evolve(SCHEDULES[CanonicalTag.BEFORE])
    steps = list(PREP)
    if Arm.ELECTRON in arms:
        steps.append(EvolutionStep.BS2_MINUS)
    if Arm.POSITRON in arms:
        steps.append(EvolutionStep.BS2_PLUS)
    state = evolve(steps)
    for d in fired:
        state = postselect(state, d.projector(state.stage))
    return canonical_phase(state)


def von_neumann_state(t: float, detections: Sequence[DetectionRecord],
                      preferred_frame: Boost) -> JointState:
    """State on the equal-time slice ``t`` of the preferred frame.

    A detection whose frame time is within ``EPS_GEOM`` of ``t`` counts as
    already collapsed.
    """
    fired = [d for d in detections if boost_event(d.event, preferred_frame).t < t + EPS_GEOM]
    return collapsed_state(fired)


class HKRegion(str, Enum):
    R1P = "R1p"  # outside the past cone of D+ only
    R2P = "R2p"  # outside both
    R3P = "R3p"  # outside the past cone of D- only
    R4P = "R4p"  # inside both


def hk_region(query: Event, d_plus: Event, d_minus: Event) -> HKRegion:
    """Region of ``query`` relative to the backward cones of the two detections.

    Points on a cone's surface count as collapsed.
    """
    if interval_class(d_plus, d_minus) is not IntervalClass.SPACELIKE:
        raise ValueError("the two detections must be spacelike separated")
    past_plus = in_backward_interior(query, d_plus)
    past_minus = in_backward_interior(query, d_minus)
    if past_plus and past_minus:
        return HKRegion.R4P
    if past_minus:
        return HKRegion.R1P
    if past_plus:
        return HKRegion.R3P
    return HKRegion.R2P


def hk_state(query: Event, d_plus: Event, d_minus: Event) -> JointState:
    region = hk_region(query, d_plus, d_minus)
    fired = []
    if region in (HKRegion.R1P, HKRegion.R2P):
        fired.append(DetectionRecord(d_plus, Detector.D_PLUS))
    if region in (HKRegion.R3P, HKRegion.R2P):
        fired.append(DetectionRecord(d_minus, Detector.D_MINUS))
    return collapsed_state(fired)


STATE_IDS = {HKRegion.R1P: "d+u-", HKRegion.R2P: "d+d-", HKRegion.R3P: "u+d-", HKRegion.R4P: "before"}


def hk_region_grid(d_plus: Event, d_minus: Event, t_range: tuple[float, float],
                   z_range: tuple[float, float], nt: int = 41, nz: int = 41) -> dict:
    """Sample the four regions on a regular grid, for external plotting."""
    records = []
    for t in np.linspace(*t_range, nt):
        for z in np.linspace(*z_range, nz):
            region = hk_region(Event(float(t), float(z)), d_plus, d_minus)
            records.append({"t": round(float(t), 12), "z": round(float(z), 12),
                            "region": region.value, "state_id": STATE_IDS[region]})
    return {"schema_version": SCHEMA_VERSION, "d_plus": d_plus.as_dict(),
            "d_minus": d_minus.as_dict(), "records": records}
