"""Sparse joint states for the two-interferometer setup.

The joint basis is the photon label ``gamma`` plus every product of a
positron mode and an electron mode.  Modes are abstract path labels
(``s``, ``u``, ``v``, ``c``, ``d``); which of them may appear in a state is
fixed by the :class:`Stage` of each arm.  Amplitudes are Python complex
numbers, i.e. pairs of doubles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

from .errors import PartitionError, StageError, ZeroProbabilityError

TOL = 1e-9
PRUNE = 1e-12
SQRT2 = math.sqrt(2.0)

__all__ = [
    "TOL", "PRUNE", "Arm", "Phase", "Stage", "Mode", "Pair", "GAMMA", "Label",
    "pair", "parse_label", "label_key", "basis", "JointState", "IsometrySpec",
    "ProjectorSpec", "PathObservable", "apply_isometry", "compose", "inner",
    "born_probability", "postselect", "measure_decompose", "states_equal",
    "basis_state", "canonical_phase", "label_partition", "arm_partition",
    "state_to_records", "state_from_records", "local_isometry", "bs1", "bs2",
    "annihilation",
]


class Arm(str, Enum):
    POSITRON = "+"
    ELECTRON = "-"


class Phase(str, Enum):
    SOURCE = "source"
    AFTER_BS1 = "after_bs1"
    AFTER_BS2 = "after_bs2"

    @property
    def modes(self) -> tuple[str, ...]:
        return _PHASE_MODES[self]


_PHASE_MODES = {
    Phase.SOURCE: ("s",),
    Phase.AFTER_BS1: ("u", "v"),
    Phase.AFTER_BS2: ("c", "d"),
}
MODE_LETTERS = frozenset("suvcd")


@dataclass(frozen=True)
class Stage:
    positron: Phase = Phase.SOURCE
    electron: Phase = Phase.SOURCE

    def phase(self, arm: Arm) -> Phase:
        return self.positron if arm is Arm.POSITRON else self.electron

    def with_phase(self, arm: Arm, phase: Phase) -> Stage:
        if arm is Arm.POSITRON:
            return Stage(phase, self.electron)
        return Stage(self.positron, phase)

    @property
    def allows_gamma(self) -> bool:
        # annihilation needs both particles past their first beam splitter
        return Phase.SOURCE not in (self.positron, self.electron)

    def admits(self, label: Label) -> bool:
        if label is GAMMA:
            return self.allows_gamma
        return (label.positron in self.positron.modes
                and label.electron in self.electron.modes)

    def to_dict(self) -> dict:
        return {"positron": self.positron.value, "electron": self.electron.value}

    @classmethod
    def from_dict(cls, d: Mapping) -> Stage:
        return cls(Phase(d["positron"]), Phase(d["electron"]))

    def __str__(self) -> str:
        return f"({self.positron.value}, {self.electron.value})"


@dataclass(frozen=True, order=True)
class Mode:
    arm: Arm
    label: str

    def __post_init__(self):
        if self.label not in MODE_LETTERS:
            raise ValueError(f"unknown mode label {self.label!r}")

    def __str__(self) -> str:
        return f"{self.label}{self.arm.value}"


class _Gamma:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "GAMMA"

    def __str__(self) -> str:
        return "gamma"

    def __reduce__(self):
        return (_Gamma, ())


GAMMA = _Gamma()


@dataclass(frozen=True)
class Pair:
    """Product label |positron>|electron>, stored as the two mode letters."""

    positron: str
    electron: str

    def __post_init__(self):
        if self.positron not in MODE_LETTERS or self.electron not in MODE_LETTERS:
            raise ValueError(f"bad pair label {self.positron!r}, {self.electron!r}")

    def mode(self, arm: Arm) -> Mode:
        return Mode(arm, self.positron if arm is Arm.POSITRON else self.electron)

    def letter(self, arm: Arm) -> str:
        return self.positron if arm is Arm.POSITRON else self.electron

    def replace(self, arm: Arm, letter: str) -> Pair:
        if arm is Arm.POSITRON:
            return Pair(letter, self.electron)
        return Pair(self.positron, letter)

    def __str__(self) -> str:
        return f"{self.positron}+{self.electron}-"


Label = Union[_Gamma, Pair]


def pair(positron: str, electron: str) -> Pair:
    return Pair(positron, electron)


def parse_label(text: str) -> Label:
    """Inverse of ``str(label)``: ``"gamma"`` or ``"u+v-"``."""
    text = text.strip()
    if text in ("gamma", "γ"):
        return GAMMA
    if len(text) == 4 and text[1] == "+" and text[3] == "-":
        return Pair(text[0], text[2])
    raise ValueError(f"cannot parse basis label {text!r}")


def label_key(label: Label) -> tuple:
    if label is GAMMA:
        return (0, "", "")
    return (1, label.positron, label.electron)


def basis(stage: Stage) -> tuple[Label, ...]:
    """All joint basis labels admitted at ``stage``, in canonical order."""
    labels: list[Label] = [GAMMA] if stage.allows_gamma else []
    labels += [Pair(p, e) for p in sorted(stage.positron.modes)
               for e in sorted(stage.electron.modes)]
    return tuple(labels)


def _check_finite(z: complex) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"non-finite amplitude {z!r}")
    return z


def _sorted_sparse(amps: Mapping[Label, complex]) -> dict[Label, complex]:
    return {k: amps[k] for k in sorted(amps, key=label_key) if abs(amps[k]) >= PRUNE}


def _norm2(amps: Mapping[Label, complex]) -> float:
    return math.fsum(abs(a) ** 2 for a in amps.values())


@dataclass(frozen=True)
class JointState:
    """A normalized sparse ket over the joint basis at a fixed stage.

    Amplitudes below ``PRUNE`` in modulus are dropped on construction and the
    remaining ones are kept in canonical label order.
    """

    amplitudes: Mapping[Label, complex]
    stage: Stage

    def __post_init__(self):
        amps = {}
        for label, a in self.amplitudes.items():
            if not self.stage.admits(label):
                raise StageError(f"label {label} not allowed at stage {self.stage}")
            amps[label] = _check_finite(a)
        amps = _sorted_sparse(amps)
        n2 = _norm2(amps)
        if abs(n2 - 1.0) > TOL:
            raise ValueError(f"state not normalized: squared norm {n2!r}")
        object.__setattr__(self, "amplitudes", MappingProxyType(amps))

    @classmethod
    def normalized(cls, amplitudes: Mapping[Label, complex], stage: Stage) -> JointState:
        n2 = _norm2(amplitudes)
        if n2 <= PRUNE ** 2:
            raise ZeroProbabilityError("cannot normalize a null vector")
        s = 1.0 / math.sqrt(n2)
        return cls({k: v * s for k, v in amplitudes.items()}, stage)

    def amplitude(self, label: Label) -> complex:
        return self.amplitudes.get(label, 0j)

    def __getitem__(self, label: Label) -> complex:
        return self.amplitude(label)

    @property
    def labels(self) -> tuple[Label, ...]:
        return tuple(self.amplitudes)

    def __str__(self) -> str:
        terms = [f"({a.real:+.6g}{a.imag:+.6g}j)|{k}>" for k, a in self.amplitudes.items()]
        return " ".join(terms) or "0"


def basis_state(label: Label, stage: Stage) -> JointState:
    return JointState({label: 1.0}, stage)


@dataclass(frozen=True)
class ProjectorSpec:
    """Diagonal projector: the span of ``included`` at ``stage``."""

    included: frozenset
    stage: Stage
    name: str = ""

    def __post_init__(self):
        inc = frozenset(self.included)
        bad = [str(lab) for lab in inc if not self.stage.admits(lab)]
        if bad:
            raise StageError(f"projector {self.name!r} has labels {bad} invalid at {self.stage}")
        object.__setattr__(self, "included", inc)

    def complement(self, name: str | None = None) -> ProjectorSpec:
        rest = frozenset(basis(self.stage)) - self.included
        return ProjectorSpec(rest, self.stage, name if name is not None else f"not({self.name})")

    def __and__(self, other: ProjectorSpec) -> ProjectorSpec:
        if other.stage != self.stage:
            raise StageError("projectors at different stages")
        return ProjectorSpec(self.included & other.included, self.stage, f"{self.name}{other.name}")

    @classmethod
    def full(cls, stage: Stage, name: str = "I") -> ProjectorSpec:
        return cls(frozenset(basis(stage)), stage, name)


@dataclass(frozen=True)
class PathObservable:
    """Stage-independent path projector, e.g. U+ = |u+><u+| (x) I.

    ``positron``/``electron`` restrict the allowed mode letters on each arm;
    ``None`` leaves the arm unconstrained.  The photon label is never
    included.  Equality ignores ``name``.
    """

    name: str = field(compare=False)
    positron: frozenset | None = None
    electron: frozenset | None = None

    def __post_init__(self):
        for arm_letters in (self.positron, self.electron):
            if arm_letters is not None and not set(arm_letters) <= MODE_LETTERS:
                raise ValueError(f"unknown mode letters in {arm_letters}")
        if self.positron is not None:
            object.__setattr__(self, "positron", frozenset(self.positron))
        if self.electron is not None:
            object.__setattr__(self, "electron", frozenset(self.electron))

    def constraint(self, arm: Arm) -> frozenset | None:
        return self.positron if arm is Arm.POSITRON else self.electron

    @property
    def arms(self) -> tuple[Arm, ...]:
        return tuple(a for a in Arm if self.constraint(a) is not None)

    @property
    def is_local(self) -> bool:
        return len(self.arms) <= 1

    def valid_at(self, stage: Stage) -> bool:
        return all(self.constraint(a) & set(stage.phase(a).modes) for a in self.arms)

    def projector(self, stage: Stage) -> ProjectorSpec:
        if not self.valid_at(stage):
            raise StageError(f"observable {self.name} has no support at stage {stage}")
        inc = set()
        for lab in basis(stage):
            if lab is GAMMA:
                continue
            if all(lab.letter(a) in self.constraint(a) for a in self.arms):
                inc.add(lab)
        return ProjectorSpec(frozenset(inc), stage, self.name)

    def __mul__(self, other: PathObservable) -> PathObservable:
        def meet(x, y):
            if x is None:
                return y
            if y is None:
                return x
            return x & y
        return PathObservable(self.name + other.name,
                              meet(self.positron, other.positron),
                              meet(self.electron, other.electron))

    def __str__(self) -> str:
        return self.name


Vector = dict


@dataclass(frozen=True)
class IsometrySpec:
    """Linear map given by its columns on ``domain``; identity elsewhere.

    ``requires`` is the input stage and ``produces`` the output stage.
    Labels outside the domain pass through unchanged, provided they do not
    collide with the range of the columns.
    """

    name: str
    columns: Mapping[Label, Mapping[Label, complex]]
    requires: Stage
    produces: Stage

    def __post_init__(self):
        cols = {}
        for lab, col in self.columns.items():
            if not self.requires.admits(lab):
                raise StageError(f"{self.name}: input label {lab} invalid at {self.requires}")
            for out in col:
                if not self.produces.admits(out):
                    raise StageError(f"{self.name}: output label {out} invalid at {self.produces}")
            cols[lab] = MappingProxyType(_sorted_sparse({k: complex(v) for k, v in col.items()}))
        object.__setattr__(self, "columns", MappingProxyType(cols))
        self.check_orthonormal()

    @property
    def domain(self) -> frozenset:
        return frozenset(self.columns)

    @property
    def range_labels(self) -> frozenset:
        return frozenset(k for col in self.columns.values() for k in col)

    def check_orthonormal(self, tol: float = TOL) -> None:
        labs = list(self.columns)
        for i, a in enumerate(labs):
            for b in labs[i:]:
                ip = _inner(self.columns[a], self.columns[b])
                want = 1.0 if a == b else 0.0
                if abs(ip - want) > tol:
                    raise ValueError(f"{self.name}: columns {a}, {b} have overlap {ip}")

    def apply_vector(self, vec: Mapping[Label, complex]) -> Vector:
        """Image of an unnormalized sparse vector."""
        out: dict[Label, complex] = {}
        rng = self.range_labels
        for lab, amp in vec.items():
            if lab in self.columns:
                for k, c in self.columns[lab].items():
                    out[k] = out.get(k, 0j) + c * amp
            else:
                if lab in rng:
                    raise StageError(f"{self.name}: label {lab} outside domain collides with range")
                if not self.produces.admits(lab):
                    raise StageError(f"{self.name}: label {lab} cannot pass through to {self.produces}")
                out[lab] = out.get(lab, 0j) + amp
        return _sorted_sparse(out)


def _inner(a: Mapping[Label, complex], b: Mapping[Label, complex]) -> complex:
    return sum((a[k].conjugate() * b[k] for k in a.keys() & b.keys()), 0j)


def apply_isometry(state: JointState, iso: IsometrySpec) -> JointState:
    if state.stage != iso.requires:
        raise StageError(f"{iso.name} expects stage {iso.requires}, got {state.stage}")
    out = iso.apply_vector(state.amplitudes)
    return JointState(out, iso.produces)


def compose(first: IsometrySpec, second: IsometrySpec, name: str | None = None) -> IsometrySpec:
    """``second`` after ``first`` as a single isometry."""
    if first.produces != second.requires:
        raise StageError(f"cannot compose {first.name} -> {second.name}: stage mismatch")
    cols = {}
    for lab in basis(first.requires):
        if lab in first.columns:
            cols[lab] = second.apply_vector(first.columns[lab])
        elif lab in second.columns and lab not in first.range_labels:
            cols[lab] = dict(second.columns[lab])
    return IsometrySpec(name or f"{second.name}*{first.name}", cols, first.requires, second.produces)


def local_isometry(name: str, arm: Arm, local: Mapping[str, Mapping[str, complex]],
                   requires: Stage, to_phase: Phase) -> IsometrySpec:
    """Lift a single-arm map ``mode -> {mode: amp}`` to the joint basis."""
    produces = requires.with_phase(arm, to_phase)
    cols = {}
    for lab in basis(requires):
        if lab is GAMMA or lab.letter(arm) not in local:
            continue
        cols[lab] = {lab.replace(arm, m): a for m, a in local[lab.letter(arm)].items()}
    return IsometrySpec(name, cols, requires, produces)


_BS1 = {"s": {"u": 1j / SQRT2, "v": 1 / SQRT2}}
_BS2 = {"u": {"c": 1 / SQRT2, "d": 1j / SQRT2},
        "v": {"c": 1j / SQRT2, "d": 1 / SQRT2}}


def bs1(arm: Arm, stage: Stage) -> IsometrySpec:
    if stage.phase(arm) is not Phase.SOURCE:
        raise StageError(f"BS1{arm.value} needs the {arm.name.lower()} at the source, stage is {stage}")
    return local_isometry(f"BS1{arm.value}", arm, _BS1, stage, Phase.AFTER_BS1)


def bs2(arm: Arm, stage: Stage) -> IsometrySpec:
    if stage.phase(arm) is not Phase.AFTER_BS1:
        raise StageError(f"BS2{arm.value} needs the {arm.name.lower()} after BS1, stage is {stage}")
    return local_isometry(f"BS2{arm.value}", arm, _BS2, stage, Phase.AFTER_BS2)


def annihilation(stage: Stage = Stage(Phase.AFTER_BS1, Phase.AFTER_BS1)) -> IsometrySpec:
    """|u+>|u-> -> |gamma>; every other label is left alone."""
    if stage != Stage(Phase.AFTER_BS1, Phase.AFTER_BS1):
        raise StageError(f"annihilation acts between the beam splitters, stage is {stage}")
    return IsometrySpec("ANN", {Pair("u", "u"): {GAMMA: 1.0}}, stage, stage)


def inner(a: JointState, b: JointState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.stage != b.stage:
        raise StageError(f"inner product across stages {a.stage} and {b.stage}")
    return _inner(a.amplitudes, b.amplitudes)


def _check_proj(state: JointState, proj: ProjectorSpec) -> None:
    if proj.stage != state.stage:
        raise StageError(f"projector {proj.name!r} is for stage {proj.stage}, state is at {state.stage}")


def born_probability(state: JointState, proj: ProjectorSpec) -> float:
    _check_proj(state, proj)
    p = math.fsum(abs(a) ** 2 for k, a in state.amplitudes.items() if k in proj.included)
    return min(1.0, max(0.0, p))


def postselect(state: JointState, proj: ProjectorSpec) -> JointState:
    p = born_probability(state, proj)
    if p <= PRUNE:
        raise ZeroProbabilityError(f"outcome {proj.name!r} has probability {p:.3g}")
    kept = {k: a for k, a in state.amplitudes.items() if k in proj.included}
    return JointState.normalized(kept, state.stage)


def _check_partition(stage: Stage, partition: Sequence[ProjectorSpec]) -> None:
    seen: set = set()
    for cell in partition:
        if cell.stage != stage:
            raise StageError(f"partition cell {cell.name!r} is for stage {cell.stage}")
        if seen & cell.included:
            raise PartitionError(f"partition cells overlap on {sorted(map(str, seen & cell.included))}")
        seen |= cell.included
    missing = set(basis(stage)) - seen
    if missing:
        raise PartitionError(f"partition does not cover {sorted(map(str, missing))}")


def measure_decompose(state: JointState, partition: Sequence[ProjectorSpec]
                      ) -> list[tuple[ProjectorSpec, float, JointState]]:
    """Branches of ``state`` over a projective partition.

    Returns ``(cell, probability, normalized branch)`` for every cell with
    probability above ``PRUNE``, in the order given.
    """
    _check_partition(state.stage, partition)
    out = []
    for cell in partition:
        p = born_probability(state, cell)
        if p > PRUNE:
            out.append((cell, p, postselect(state, cell)))
    return out


def label_partition(stage: Stage) -> list[ProjectorSpec]:
    return [ProjectorSpec(frozenset([lab]), stage, str(lab)) for lab in basis(stage)]


def arm_partition(stage: Stage, arm: Arm) -> list[ProjectorSpec]:
    """One cell per mode of ``arm``, plus a photon cell when allowed."""
    cells = []
    if stage.allows_gamma:
        cells.append(ProjectorSpec(frozenset([GAMMA]), stage, "gamma"))
    for m in sorted(stage.phase(arm).modes):
        cells.append(PathObservable(f"{m}{arm.value}", **{arm.name.lower(): {m}}).projector(stage))
    return cells


def states_equal(a: JointState, b: JointState, up_to_global_phase: bool = False,
                 tol: float = TOL) -> bool:
    if a.stage != b.stage:
        return False
    if up_to_global_phase:
        ov = _inner(b.amplitudes, a.amplitudes)
        if abs(ov) > PRUNE:
            rot = ov / abs(ov)
            b = JointState({k: v * rot for k, v in b.amplitudes.items()}, b.stage)
    labels = set(a.amplitudes) | set(b.amplitudes)
    return all(abs(a.amplitude(k) - b.amplitude(k)) < tol for k in labels)


def canonical_phase(state: JointState) -> JointState:
    """Rotate so the first amplitude in canonical order is real and positive."""
    first = next(iter(state.amplitudes.values()))
    rot = first.conjugate() / abs(first)
    return JointState({k: v * rot for k, v in state.amplitudes.items()}, state.stage)


def _round12(x: float) -> float:
    y = float(f"{x:.12g}")
    return 0.0 if y == 0 else y


def state_to_records(state: JointState) -> list[dict]:
    return [{"label": str(k), "re": _round12(a.real), "im": _round12(a.imag)}
            for k, a in state.amplitudes.items()]


def state_from_records(records: Iterable[Mapping], stage: Stage) -> JointState:
    amps = {parse_label(r["label"]): complex(float(r["re"]), float(r["im"])) for r in records}
    return JointState.normalized(amps, stage)
