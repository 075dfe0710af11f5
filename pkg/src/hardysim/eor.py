"""Value assignments (elements of reality) for the two-interferometer experiment.

Two sufficient criteria are implemented:

``er1_evaluate``
    frame-dependent prediction: condition the state current at time ``now``
    in a given frame on every outcome recorded strictly earlier, and report
    a value if the observable's measurement result is then certain.

``er3_evaluate``
    light-cone criterion: only outcomes on or outside the forward light cone
    of the measurement event are usable.  For a two-sided observable the two
    cone exteriors are combined by intersection or union.  The usable
    information is the preparation (the pre-BS2 state) plus those detector
    outcomes, combined with the pre/post-selection rule.

"Information" is operationalized as detector outcomes plus the preparation;
nothing else about the runs is consulted.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .core import TOL, JointState, PathObservable, ProjectorSpec, born_probability, postselect
from .errors import ContradictoryClaims, InvariantError, StageError
from .experiment import (
    AFTER_STAGE, BEFORE_STAGE, OBSERVABLES, PREP, SCHEDULES, SCHEMA_VERSION, U_MINUS,
    U_PLUS, U_PLUS_U_MINUS, CanonicalTag, EvolutionStep, evolve, second_splitters,
)
from .spacetime import (
    DEFAULT_GEOMETRY, EPS_GEOM, F_MINUS, F_PLUS, LAB, Boost, Event, Geometry, RegionRule,
    boost_event, in_info_region, two_cone_region,
)
from .twotime import abl_from_amplitudes, binary_partition


class Criterion(str, Enum):
    ER1 = "ER1"
    ER3 = "ER3"


@dataclass(frozen=True)
class KnownOutcome:
    """A detector that fired at ``event``; ``observable`` is its path projector."""

    event: Event
    observable: PathObservable

    @property
    def name(self) -> str:
        return self.observable.name

    def projector(self, stage) -> ProjectorSpec:
        return self.observable.projector(stage)


def detector_outcome(name: str, geometry: Geometry = DEFAULT_GEOMETRY) -> KnownOutcome:
    """Detector ``name`` (``"D+"``, ``"C-"``, ...) fired at its geometry event."""
    return KnownOutcome(geometry[name], OBSERVABLES[name])


@dataclass(frozen=True)
class EoRClaim:
    observable: PathObservable
    value: int
    criterion: Criterion
    probability: float
    frame: Boost | None = None
    region_rule: RegionRule | None = None
    conditioning: tuple[KnownOutcome, ...] = ()
    trivial: bool = False

    def __post_init__(self):
        if self.value not in (0, 1):
            raise InvariantError(f"claimed value {self.value} is not a projector eigenvalue")
        if self.criterion is Criterion.ER1 and self.frame is None:
            raise InvariantError("ER1 claims are frame-bound")
        if (self.criterion is Criterion.ER3 and not self.observable.is_local
                and self.region_rule is None):
            raise InvariantError("nonlocal ER3 claims need a region rule")

    def to_dict(self) -> dict:
        return {
            "observable": self.observable.name, "value": self.value,
            "criterion": self.criterion.value, "probability": self.probability,
            "frame_beta": None if self.frame is None else self.frame.beta,
            "region_rule": None if self.region_rule is None else self.region_rule.value,
            "conditioning": [o.name for o in self.conditioning], "trivial": self.trivial,
        }


def _certain_value(p_one: float, tol: float) -> int | None:
    if p_one >= 1 - tol:
        return 1
    if p_one <= tol:
        return 0
    return None


def staged_schedule(geometry: Geometry, frame: Boost, now: float) -> tuple[EvolutionStep, ...]:
    """Steps completed by time ``now`` in ``frame``."""
    steps = list(PREP)
    if geometry.time_in("BS2-", frame) < now - EPS_GEOM:
        steps.append(EvolutionStep.BS2_MINUS)
    if geometry.time_in("BS2+", frame) < now - EPS_GEOM:
        steps.append(EvolutionStep.BS2_PLUS)
    return tuple(steps)


def er1_evaluate(observable: PathObservable, measurement_event: Event, frame: Boost, now: float,
                 outcomes: Iterable[KnownOutcome] = (), geometry: Geometry = DEFAULT_GEOMETRY,
                 tol: float = TOL) -> EoRClaim | None:
    """Prediction with certainty at time ``now`` of ``frame``."""
    if boost_event(measurement_event, frame).t <= now:
        raise ValueError("the measurement event must lie after `now` in the chosen frame")
    state = evolve(staged_schedule(geometry, frame, now))
    usable = tuple(o for o in outcomes if boost_event(o.event, frame).t < now - EPS_GEOM)
    for o in usable:
        state = postselect(state, o.projector(state.stage))
    p = born_probability(state, observable.projector(state.stage))
    value = _certain_value(p, tol)
    if value is None:
        return None
    return EoRClaim(observable, value, Criterion.ER1, p if value else 1 - p,
                    frame=frame, conditioning=usable)


def usable_outcomes(outcomes: Iterable[KnownOutcome], apexes: Sequence[Event],
                    rule: RegionRule | None = None) -> tuple[KnownOutcome, ...]:
    """Outcomes in the information region of one cone or of two combined cones."""
    if len(apexes) == 1:
        return tuple(o for o in outcomes if in_info_region(o.event, apexes[0]))
    if len(apexes) != 2 or rule is None:
        raise ValueError("two apexes and a region rule are needed to combine cones")
    a, b = apexes
    return tuple(o for o in outcomes if two_cone_region(o.event, a, b) in rule.regions)


def er3_evaluate(observable: PathObservable, apexes: Sequence[Event] | Event,
                 rule: RegionRule | str | None = None, outcomes: Iterable[KnownOutcome] = (),
                 performed: bool = False, tol: float = TOL) -> EoRClaim | None:
    """Certainty from information on or outside the forward cone(s)."""
    if isinstance(apexes, Event):
        apexes = (apexes,)
    apexes = tuple(apexes)
    rule = None if rule is None else RegionRule(rule)
    if not observable.is_local and len(apexes) != 2:
        raise ValueError(f"{observable.name} is two-sided: supply both measurement events")
    usable = usable_outcomes(outcomes, apexes, rule)

    post = ProjectorSpec.full(AFTER_STAGE, "I")
    for o in usable:
        try:
            post = post & o.projector(AFTER_STAGE)
        except StageError:
            raise StageError(f"outcome {o.name} is not a final detector outcome") from None
    pre = evolve(SCHEDULES[CanonicalTag.BEFORE])
    p1, _ = abl_from_amplitudes(pre.amplitudes, pre.stage, binary_partition(observable, BEFORE_STAGE),
                                second_splitters(), post)
    value = _certain_value(p1, tol)
    if value is None:
        return None
    return EoRClaim(observable, value, Criterion.ER3, p1 if value else 1 - p1,
                    region_rule=rule if len(apexes) == 2 else None, conditioning=usable,
                    trivial=performed and rule is RegionRule.UNION)


class ProductRule(str, Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    UNDETERMINED = "undetermined"


def claimed_value(claims: Iterable[EoRClaim], obs: PathObservable) -> int | None:
    values = {c.value for c in claims if c.observable == obs}
    if len(values) > 1:
        raise ContradictoryClaims(f"{obs.name} is assigned both 0 and 1")
    return values.pop() if values else None


def product_rule_check(claims: Sequence[EoRClaim], a: PathObservable, b: PathObservable,
                       ab: PathObservable) -> ProductRule:
    if a * b != ab:
        raise ValueError(f"{ab.name} is not the product of {a.name} and {b.name}")
    fa, fb, fab = (claimed_value(claims, o) for o in (a, b, ab))
    if None in (fa, fb, fab):
        return ProductRule.UNDETERMINED
    return ProductRule.HOLDS if fa * fb == fab else ProductRule.VIOLATED


def measurement_event(obs: PathObservable, geometry: Geometry, frame: Boost = LAB) -> Event:
    """Where ``obs`` would be measured: the path apex of each constrained arm.

    For a two-sided observable the earlier apex in ``frame`` is returned.
    """
    names = [{"+": "U+", "-": "U-"}[arm.value] for arm in obs.arms]
    events = [geometry[n] for n in names]
    return min(events, key=lambda e: boost_event(e, frame).t)


def prediction_time(obs: PathObservable, frame: Boost, outcomes: Sequence[KnownOutcome],
                    geometry: Geometry = DEFAULT_GEOMETRY) -> float:
    """A time after every known outcome but before ``obs`` is measured or its paths recombine."""
    t = lambda e: boost_event(e, frame).t  # noqa: E731
    late = [t(o.event) for o in outcomes] or [t(geometry["P"])]
    early = [t(measurement_event(obs, geometry, frame))]
    early += [t(geometry[f"BS2{arm.value}"]) for arm in obs.arms]
    lo, hi = max(late), min(early)
    if not lo < hi:
        raise ValueError(f"no time in frame beta={frame.beta} lies after the outcomes "
                         f"and before the {obs.name} measurement")
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DerivationStep:
    step: int
    claims: tuple[tuple[PathObservable, int], ...]
    frame: str
    justification: str
    depends_on: tuple[int, ...] = ()
    assumption: str | None = None
    source: EoRClaim | None = None

    @property
    def claim_text(self) -> str:
        return ", ".join(f"f({o.name})={v}" for o, v in self.claims)

    def to_dict(self) -> dict:
        return {"step": self.step, "claim": self.claim_text, "justification": self.justification,
                "depends_on": list(self.depends_on), "frame": self.frame,
                "assumption": self.assumption}


@dataclass(frozen=True)
class ContradictionReport:
    steps: tuple[DerivationStep, ...]
    conflict: tuple[int, int] | None = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "conflict", _find_conflict(self.steps))

    def step(self, n: int) -> DerivationStep:
        return next(s for s in self.steps if s.step == n)

    @property
    def conflict_observable(self) -> PathObservable | None:
        if self.conflict is None:
            return None
        return self.step(self.conflict[0]).claims[0][0]

    @property
    def conflict_values(self) -> tuple[int, int] | None:
        if self.conflict is None:
            return None
        obs = self.conflict_observable
        return tuple(dict(self.step(n).claims)[obs] for n in self.conflict)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "records": [s.to_dict() for s in self.steps],
            "conflict": None if self.conflict is None else {
                "steps": list(self.conflict), "observable": self.conflict_observable.name,
                "values": list(self.conflict_values)},
        }


def _find_conflict(steps: Sequence[DerivationStep]) -> tuple[int, int] | None:
    for s1, s2 in combinations(steps, 2):
        for o1, v1 in s1.claims:
            for o2, v2 in s2.claims:
                if o1 == o2 and v1 != v2:
                    return (s1.step, s2.step)
    return None


def _required(claim: EoRClaim | None, what: str) -> EoRClaim:
    if claim is None:
        raise InvariantError(f"expected ER1 to yield {what}")
    return claim


def hardy_contradiction_report(geometry: Geometry = DEFAULT_GEOMETRY, f_minus: Boost = F_MINUS,
                               f_plus: Boost = F_PLUS, product_rule: bool = True,
                               tol: float = TOL) -> ContradictionReport:
    """Hardy's chain of inferences ending in two values for U+U-.

    With ``product_rule=False`` the inference from f(U+) f(U-) = 1 to
    f(U+U-) = 1 is dropped and no conflict follows.
    """
    d_minus = detector_outcome("D-", geometry)
    d_plus = detector_outcome("D+", geometry)

    now = prediction_time(U_PLUS, f_minus, [d_minus], geometry)
    c1 = _required(er1_evaluate(U_PLUS, geometry["U+"], f_minus, now, [d_minus], geometry, tol),
                   "f(U+) in the frame where the electron crosses BS2- first")
    now = prediction_time(U_MINUS, f_plus, [d_plus], geometry)
    c2 = _required(er1_evaluate(U_MINUS, geometry["U-"], f_plus, now, [d_plus], geometry, tol),
                   "f(U-) in the frame where the positron crosses BS2+ first")
    now = prediction_time(U_PLUS_U_MINUS, LAB, [], geometry)
    c5 = _required(er1_evaluate(U_PLUS_U_MINUS, measurement_event(U_PLUS_U_MINUS, geometry),
                                LAB, now, [], geometry, tol),
                   "f(U+U-) before either second beam splitter")

    steps = [
        DerivationStep(1, ((U_PLUS, c1.value),), f"beta={f_minus.beta:g}",
                       "ER1: D- fired; conditioned state is |u+>|d->", source=c1),
        DerivationStep(2, ((U_MINUS, c2.value),), f"beta={f_plus.beta:g}",
                       "ER1: D+ fired; conditioned state is |d+>|u->", source=c2),
        DerivationStep(3, ((U_PLUS, c1.value), (U_MINUS, c2.value)), "all frames",
                       "LI1: values of Lorentz-invariant observables carry over to every frame",
                       depends_on=(1, 2)),
    ]
    if product_rule:
        steps.append(DerivationStep(
            4, ((U_PLUS_U_MINUS, c1.value * c2.value),), "all frames",
            "f(U+) f(U-) = 1 implies f(U+U-) = 1", depends_on=(3,),
            assumption="product-rule inference"))
    steps.append(DerivationStep(5, ((U_PLUS_U_MINUS, c5.value),), "all frames",
                                "ER1: the pre-BS2 state has no |u+>|u-> component", source=c5))
    return ContradictionReport(tuple(steps))


# Real solutions of f(P) = f(P P) = f(P)^2 for a projector P.
_IDEMPOTENT_VALUES = (0.0, 1.0)


@dataclass(frozen=True)
class MultiplicativeFunctional:
    """Values on every diagonal projector of a ``dim``-dimensional space.

    ``values[m]`` is f of the projector onto the basis vectors in bitmask
    ``m``; ``values[0]`` is f of the zero operator.
    """

    dim: int
    values: tuple[float, ...]

    def value(self, indices: Iterable[int]) -> float:
        m = 0
        for i in indices:
            m |= 1 << i
        return self.values[m]

    @property
    def atom_values(self) -> tuple[float, ...]:
        return tuple(self.values[1 << i] for i in range(self.dim))

    @property
    def singled_out(self) -> int:
        ones = [i for i, v in enumerate(self.atom_values) if v == 1.0]
        if len(ones) != 1:
            raise InvariantError(f"functional is 1 on {len(ones)} one-dimensional projectors")
        return ones[0]


def _multiplicative_assignments(dim: int) -> list[tuple[float, ...]]:
    """Every {0,1}-valued f with f(PQ) = f(P) f(Q) on all diagonal projectors.

    Depth-first search over projectors ordered by rank, so that P Q is
    always assigned before the later of P and Q.
    """
    order = sorted(range(1 << dim), key=lambda m: (bin(m).count("1"), m))
    n = len(order)
    vals = np.full(1 << dim, -1.0)
    assigned = np.array(order, dtype=np.int64)
    found: list[tuple[float, ...]] = []

    def candidates(depth: int) -> list[float]:
        s = order[depth]
        prev = assigned[:depth]
        meet = vals[s & prev]
        prev_vals = vals[prev]
        # f(S T) = v f(T): T with f(T) = 0 need f(S T) = 0, T with f(T) = 1 force v
        if np.any(meet[prev_vals == 0.0] != 0.0):
            return []
        forced = np.unique(meet[prev_vals == 1.0])
        if forced.size > 1:
            return []
        if forced.size == 1:
            v = float(forced[0])
            return [v] if v in _IDEMPOTENT_VALUES else []
        return list(_IDEMPOTENT_VALUES)

    stack = [(0, iter(candidates(0)))]
    while stack:
        depth, it = stack[-1]
        v = next(it, None)
        s = order[depth]
        if v is None:
            vals[s] = -1.0
            stack.pop()
            continue
        vals[s] = v
        if depth + 1 == n:
            found.append(tuple(float(x) for x in vals))
            continue
        stack.append((depth + 1, iter(candidates(depth + 1))))
    return found


def enumerate_multiplicative_functionals(dim: int) -> list[MultiplicativeFunctional]:
    """Product-rule functionals that are 1 on some but not all rank-one projectors.

    The search runs over all diagonal projectors of a ``dim``-dimensional
    space (the commuting set generated by one orthonormal basis).  Each
    result is checked to single out exactly one basis projector.
    """
    if not 2 <= dim <= 10:
        raise ValueError("dim must be between 2 and 10")
    out = []
    for vals in _multiplicative_assignments(dim):
        f = MultiplicativeFunctional(dim, vals)
        atoms = f.atom_values
        if 1.0 in atoms and 0.0 in atoms:
            f.singled_out  # raises if more than one atom is 1
            out.append(f)
    out.sort(key=lambda f: f.singled_out)
    if len(out) != dim:
        raise InvariantError(f"expected {dim} functionals, found {len(out)}")
    return out
