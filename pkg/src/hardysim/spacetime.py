"""1+1 dimensional Minkowski geometry with c = 1.

Events are ``(t, z)`` pairs.  Cones are classified with a fixed tolerance
on the squared interval; a cone's surface never belongs to its open
interior.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Mapping

EPS_GEOM = 1e-9


@dataclass(frozen=True)
class Event:
    t: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.z)):
            raise ValueError(f"event coordinates must be finite, got ({self.t}, {self.z})")

    def as_dict(self) -> dict:
        return {"t": self.t, "z": self.z}


@dataclass(frozen=True)
class Boost:
    """Boost to a frame moving with velocity ``beta`` along +z."""

    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and abs(self.beta) < 1.0):
            raise ValueError(f"|beta| must be < 1, got {self.beta}")

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.beta * self.beta)


LAB = Boost(0.0)


class IntervalClass(str, Enum):
    TIMELIKE_FUTURE = "timelike_future"
    TIMELIKE_PAST = "timelike_past"
    SPACELIKE = "spacelike"
    LIGHTLIKE_FUTURE = "lightlike_future"
    LIGHTLIKE_PAST = "lightlike_past"
    COINCIDENT = "coincident"


class TwoConeRegion(str, Enum):
    R1 = "R1"  # inside cone A only
    R2 = "R2"  # inside both
    R3 = "R3"  # inside cone B only
    R4 = "R4"  # inside neither


class RegionRule(str, Enum):
    INTERSECTION = "intersection"
    UNION = "union"

    @property
    def regions(self) -> frozenset:
        if self is RegionRule.UNION:
            return frozenset({TwoConeRegion.R1, TwoConeRegion.R3, TwoConeRegion.R4})
        return frozenset({TwoConeRegion.R4})


class Ordering(str, Enum):
    A_FIRST = "a_first"
    B_FIRST = "b_first"
    SIMULTANEOUS = "simultaneous"


def boost_event(e: Event, b: Boost) -> Event:
    g = b.gamma
    return Event(g * (e.t - b.beta * e.z), g * (e.z - b.beta * e.t))


def interval(a: Event, b: Event) -> float:
    """Squared interval (dt)^2 - (dz)^2 from ``a`` to ``b``."""
    dt, dz = b.t - a.t, b.z - a.z
    return dt * dt - dz * dz


def interval_class(a: Event, b: Event, eps: float = EPS_GEOM) -> IntervalClass:
    """Where ``b`` lies relative to ``a``."""
    dt, dz = b.t - a.t, b.z - a.z
    if abs(dt) < eps and abs(dz) < eps:
        return IntervalClass.COINCIDENT
    s2 = dt * dt - dz * dz
    if s2 > eps:
        return IntervalClass.TIMELIKE_FUTURE if dt > 0 else IntervalClass.TIMELIKE_PAST
    if s2 < -eps:
        return IntervalClass.SPACELIKE
    return IntervalClass.LIGHTLIKE_FUTURE if dt > 0 else IntervalClass.LIGHTLIKE_PAST


def in_forward_interior(e: Event, apex: Event, eps: float = EPS_GEOM) -> bool:
    return interval_class(apex, e, eps) is IntervalClass.TIMELIKE_FUTURE


def in_backward_interior(e: Event, apex: Event, eps: float = EPS_GEOM) -> bool:
    return interval_class(apex, e, eps) is IntervalClass.TIMELIKE_PAST


def in_info_region(e: Event, apex: Event, eps: float = EPS_GEOM) -> bool:
    """True when ``e`` is on or outside the forward light cone of ``apex``."""
    return not in_forward_interior(e, apex, eps)


def two_cone_region(e: Event, apex_a: Event, apex_b: Event, eps: float = EPS_GEOM) -> TwoConeRegion:
    if interval_class(apex_a, apex_b, eps) is not IntervalClass.SPACELIKE:
        warnings.warn("cone apexes are not spacelike separated", stacklevel=2)
    in_a = in_forward_interior(e, apex_a, eps)
    in_b = in_forward_interior(e, apex_b, eps)
    if in_a and in_b:
        return TwoConeRegion.R2
    if in_a:
        return TwoConeRegion.R1
    if in_b:
        return TwoConeRegion.R3
    return TwoConeRegion.R4


def ordering_in_frame(a: Event, b: Event, boost: Boost, eps: float = EPS_GEOM) -> Ordering:
    ta, tb = boost_event(a, boost).t, boost_event(b, boost).t
    if abs(ta - tb) < eps:
        return Ordering.SIMULTANEOUS
    return Ordering.A_FIRST if ta < tb else Ordering.B_FIRST


def simultaneity_boost(a: Event, b: Event) -> Boost:
    """The boost in which two spacelike events share a time coordinate."""
    dt, dz = b.t - a.t, b.z - a.z
    if interval_class(a, b) is not IntervalClass.SPACELIKE:
        raise ValueError("only spacelike pairs have a simultaneity frame")
    return Boost(dt / dz)


REQUIRED_EVENTS = ("P", "U+", "U-", "BS2+", "BS2-", "D+", "D-", "C+", "C-")


@dataclass(frozen=True)
class Geometry:
    """Named lab-frame events of the experiment."""

    events: Mapping[str, Event]

    def __post_init__(self):
        missing = [k for k in REQUIRED_EVENTS if k not in self.events]
        if missing:
            raise ValueError(f"geometry lacks events {missing}")
        object.__setattr__(self, "events", MappingProxyType(dict(self.events)))

    def __getitem__(self, name: str) -> Event:
        return self.events[name]

    def boosted(self, b: Boost) -> Geometry:
        return Geometry({k: boost_event(e, b) for k, e in self.events.items()})

    def time_in(self, name: str, b: Boost) -> float:
        return boost_event(self.events[name], b).t

    def to_dict(self) -> dict:
        return {k: e.as_dict() for k, e in self.events.items()}

    @classmethod
    def from_mapping(cls, data: Mapping) -> Geometry:
        events = {}
        for name, v in data.items():
            if isinstance(v, Mapping):
                events[str(name)] = Event(float(v["t"]), float(v["z"]))
            else:
                t, z = v
                events[str(name)] = Event(float(t), float(z))
        merged = dict(DEFAULT_GEOMETRY.events)
        merged.update(events)
        return cls(merged)


DEFAULT_GEOMETRY = Geometry({
    "P": Event(0.0, 0.0),
    "U+": Event(0.5, 1.0),
    "U-": Event(0.5, -1.0),
    "BS2+": Event(1.0, 1.0),
    "BS2-": Event(1.0, -1.0),
    "D+": Event(1.05, 1.0),
    "C+": Event(1.05, 1.0),
    "D-": Event(1.05, -1.0),
    "C-": Event(1.05, -1.0),
})

# frames in which one second beam splitter is crossed first
F_MINUS = Boost(-0.5)
F_PLUS = Boost(0.5)
