import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import states_at
from hardysim.core import (
    GAMMA, Arm, IsometrySpec, JointState, Pair, PathObservable, Phase, ProjectorSpec, Stage,
    annihilation, apply_isometry, arm_partition, basis, basis_state, born_probability, bs1, bs2,
    canonical_phase, compose, inner, label_partition, measure_decompose, parse_label, postselect,
    state_from_records, state_to_records, states_equal,
)
from hardysim.errors import PartitionError, StageError, ZeroProbabilityError
from hardysim.experiment import (
    AFTER_STAGE, BEFORE_STAGE, F_MINUS_STAGE, F_PLUS_STAGE, SOURCE_STAGE, U_MINUS, U_PLUS,
    U_PLUS_U_MINUS, canonical_state, initial_state,
)

R = 1 / math.sqrt(2)
ALL_STAGES = [Stage(p, e) for p in Phase for e in Phase]


def builtin_isometries():
    for stage in ALL_STAGES:
        for arm in Arm:
            if stage.phase(arm) is Phase.SOURCE:
                yield bs1(arm, stage)
            if stage.phase(arm) is Phase.AFTER_BS1:
                yield bs2(arm, stage)
    yield annihilation()


class TestLabels:
    def test_serialization(self):
        assert str(Pair("u", "d")) == "u+d-"
        assert str(GAMMA) == "gamma"
        assert str(Pair("u", "d").mode(Arm.ELECTRON)) == "d-"

    @pytest.mark.parametrize("lab", [GAMMA, Pair("u", "v"), Pair("d", "c"), Pair("s", "s")])
    def test_parse_roundtrip(self, lab):
        assert parse_label(str(lab)) == lab

    def test_bad_labels(self):
        with pytest.raises(ValueError):
            Pair("x", "u")
        with pytest.raises(ValueError):
            parse_label("u-v+")

    def test_canonical_order(self):
        # gamma first, then positron letter, then electron letter
        assert [str(x) for x in basis(BEFORE_STAGE)] == ["gamma", "u+u-", "u+v-", "v+u-", "v+v-"]
        assert [str(x) for x in basis(F_MINUS_STAGE)] == ["gamma", "u+c-", "u+d-", "v+c-", "v+d-"]
        assert basis(SOURCE_STAGE) == (Pair("s", "s"),)

    def test_gamma_needs_both_arms_past_bs1(self):
        assert not Stage(Phase.AFTER_BS1, Phase.SOURCE).allows_gamma
        assert Stage(Phase.AFTER_BS2, Phase.AFTER_BS1).allows_gamma


class TestJointState:
    def test_pruning_and_order(self):
        s = JointState({Pair("v", "v"): 0.6, GAMMA: 0.8, Pair("u", "v"): 1e-14}, BEFORE_STAGE)
        assert list(s.amplitudes) == [GAMMA, Pair("v", "v")]

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            JointState({GAMMA: 0.5}, BEFORE_STAGE)

    def test_rejects_label_outside_stage(self):
        with pytest.raises(StageError):
            JointState({Pair("c", "c"): 1.0}, BEFORE_STAGE)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            JointState({GAMMA: complex("nan")}, BEFORE_STAGE)

    def test_immutable(self):
        s = canonical_state("before")
        with pytest.raises(TypeError):
            s.amplitudes[GAMMA] = 1


class TestApplyIsometry:
    def test_bs1_plus_on_source(self):
        out = apply_isometry(initial_state(), bs1(Arm.POSITRON, SOURCE_STAGE))
        assert out.stage == Stage(Phase.AFTER_BS1, Phase.SOURCE)
        assert out[Pair("u", "s")] == pytest.approx(1j * R, abs=1e-15)
        assert out[Pair("v", "s")] == pytest.approx(R, abs=1e-15)
        assert len(out.amplitudes) == 2

    def test_gamma_passes_through_bs2(self):
        g = basis_state(GAMMA, BEFORE_STAGE)
        out = apply_isometry(g, bs2(Arm.ELECTRON, BEFORE_STAGE))
        assert out.stage == F_MINUS_STAGE
        assert dict(out.amplitudes) == {GAMMA: 1}

    def test_bs2_plus_completes_electron_first_state(self):
        out = apply_isometry(canonical_state("f_minus"), bs2(Arm.POSITRON, F_MINUS_STAGE))
        want = {GAMMA: -2 / 4, Pair("c", "c"): -3 / 4, Pair("c", "d"): 1j / 4,
                Pair("d", "c"): 1j / 4, Pair("d", "d"): -1 / 4}
        assert out.stage == AFTER_STAGE
        assert set(out.amplitudes) == set(want)
        for k, v in want.items():
            assert abs(out[k] - v) < 1e-12

    def test_stage_mismatch(self):
        with pytest.raises(StageError):
            apply_isometry(canonical_state("before"), bs2(Arm.POSITRON, F_MINUS_STAGE))
        with pytest.raises(StageError):
            bs1(Arm.POSITRON, BEFORE_STAGE)

    def test_annihilation_refuses_existing_photon(self):
        with pytest.raises(StageError):
            apply_isometry(canonical_state("before"), annihilation())

    @pytest.mark.parametrize("iso", list(builtin_isometries()), ids=lambda i: f"{i.name}{i.requires}")
    def test_columns_orthonormal(self, iso):
        iso.check_orthonormal(tol=1e-12)
        cols = list(iso.columns.values())
        for a, b in itertools.combinations_with_replacement(cols, 2):
            ip = sum((a[k].conjugate() * b[k] for k in a.keys() & b.keys()), 0j)
            assert abs(ip - (1 if a is b else 0)) < 1e-9

    def test_non_isometry_rejected(self):
        cols = {Pair("u", "u"): {GAMMA: 1.0}, Pair("v", "v"): {GAMMA: 1.0}}
        with pytest.raises(ValueError):
            IsometrySpec("bad", cols, BEFORE_STAGE, BEFORE_STAGE)

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_norm_preserved(self, data):
        iso = data.draw(st.sampled_from(list(builtin_isometries())))
        # labels in the range but outside the domain are not part of the map's input space
        excl = iso.range_labels - iso.domain
        state = data.draw(states_at(iso.requires, exclude=excl))
        out = apply_isometry(state, iso)
        n2 = sum(abs(a) ** 2 for a in out.amplitudes.values())
        assert abs(math.sqrt(n2) - 1) < 1e-9

    def test_compose_matches_sequential(self):
        first = bs2(Arm.ELECTRON, BEFORE_STAGE)
        both = compose(first, bs2(Arm.POSITRON, F_MINUS_STAGE))
        s = canonical_state("before")
        seq = apply_isometry(apply_isometry(s, first), bs2(Arm.POSITRON, F_MINUS_STAGE))
        assert states_equal(apply_isometry(s, both), seq)
        assert both.requires == BEFORE_STAGE and both.produces == AFTER_STAGE


class TestInner:
    def test_self_inner_is_one(self):
        for tag in ("before", "f_minus", "f_plus", "after"):
            s = canonical_state(tag)
            assert abs(inner(s, s) - 1) < 1e-12

    def test_orthogonal_labels(self):
        a = basis_state(Pair("u", "v"), BEFORE_STAGE)
        b = basis_state(Pair("v", "u"), BEFORE_STAGE)
        assert inner(a, b) == 0

    def test_component_extraction(self):
        dd = basis_state(Pair("d", "d"), AFTER_STAGE)
        assert abs(inner(dd, canonical_state("after")) - (-0.25)) < 1e-12

    def test_conjugate_linear_first_argument(self):
        a = canonical_state("before")
        b = JointState({k: 1j * v for k, v in a.amplitudes.items()}, a.stage)
        assert abs(inner(b, a) - (-1j)) < 1e-12
        assert abs(inner(a, b) - 1j) < 1e-12

    def test_stage_mismatch(self):
        with pytest.raises(StageError):
            inner(canonical_state("before"), canonical_state("after"))


class TestBorn:
    def test_coincidence_rate(self):
        proj = ProjectorSpec(frozenset([Pair("d", "d")]), AFTER_STAGE, "DD")
        assert born_probability(canonical_state("after"), proj) == pytest.approx(1 / 16, abs=1e-12)

    def test_u_plus_u_minus_extinct(self):
        proj = U_PLUS_U_MINUS.projector(BEFORE_STAGE)
        assert proj.included == {Pair("u", "u")}
        assert born_probability(canonical_state("before"), proj) == 0

    def test_completeness(self):
        assert born_probability(canonical_state("after"), ProjectorSpec.full(AFTER_STAGE)) == pytest.approx(1)

    def test_stage_mismatch(self):
        with pytest.raises(StageError):
            born_probability(canonical_state("after"), U_PLUS.projector(BEFORE_STAGE))

    @settings(max_examples=50, deadline=None)
    @given(states_at(AFTER_STAGE), st.sets(st.sampled_from(basis(AFTER_STAGE))))
    def test_complement_sums_to_one(self, state, labels):
        p = ProjectorSpec(frozenset(labels), AFTER_STAGE, "P")
        assert abs(born_probability(state, p) + born_probability(state, p.complement()) - 1) < 1e-9


class TestPostselect:
    def test_electron_first_state_given_d_minus(self):
        out = postselect(canonical_state("f_minus"), PathObservable("D-", electron={"d"}).projector(F_MINUS_STAGE))
        assert list(out.amplitudes) == [Pair("u", "d")]
        assert abs(abs(out[Pair("u", "d")]) - 1) < 1e-12

    def test_positron_first_state_given_d_plus(self):
        out = postselect(canonical_state("f_plus"), PathObservable("D+", positron={"d"}).projector(F_PLUS_STAGE))
        assert list(out.amplitudes) == [Pair("d", "u")]

    def test_full_basis_identity(self):
        s = canonical_state("after")
        assert states_equal(postselect(s, ProjectorSpec.full(AFTER_STAGE)), s)

    def test_impossible(self):
        with pytest.raises(ZeroProbabilityError):
            postselect(canonical_state("before"), U_PLUS_U_MINUS.projector(BEFORE_STAGE))

    @settings(max_examples=50, deadline=None)
    @given(states_at(BEFORE_STAGE), st.sets(st.sampled_from(basis(BEFORE_STAGE)), min_size=1))
    def test_idempotent(self, state, labels):
        p = ProjectorSpec(frozenset(labels), BEFORE_STAGE, "P")
        if born_probability(state, p) <= 1e-9:
            return
        once = postselect(state, p)
        assert states_equal(postselect(once, p), once)


class TestDecompose:
    def test_final_state_by_label(self):
        branches = measure_decompose(canonical_state("after"), label_partition(AFTER_STAGE))
        got = {cell.name: p for cell, p, _ in branches}
        # squared moduli of (-2, -3, i, i, -1)/4
        want = {"gamma": 4 / 16, "c+c-": 9 / 16, "c+d-": 1 / 16, "d+c-": 1 / 16, "d+d-": 1 / 16}
        assert got.keys() == want.keys()
        for k in want:
            assert got[k] == pytest.approx(want[k], abs=1e-12)

    def test_d_minus_world_has_u_plus(self):
        d = PathObservable("D-", electron={"d"}).projector(F_MINUS_STAGE)
        branches = measure_decompose(canonical_state("f_minus"), [d, d.complement()])
        (cell, p, branch), = [b for b in branches if b[0].name == "D-"]
        assert born_probability(branch, U_PLUS.projector(F_MINUS_STAGE)) == pytest.approx(1, abs=1e-12)

    def test_single_cell(self):
        s = canonical_state("before")
        (cell, p, branch), = measure_decompose(s, [ProjectorSpec.full(BEFORE_STAGE)])
        assert p == pytest.approx(1) and states_equal(branch, s)

    def test_omits_zero_branches(self):
        branches = measure_decompose(canonical_state("before"), label_partition(BEFORE_STAGE))
        assert "u+u-" not in {c.name for c, _, _ in branches}

    def test_bad_partitions(self):
        full = ProjectorSpec.full(BEFORE_STAGE)
        with pytest.raises(PartitionError):
            measure_decompose(canonical_state("before"), [full, U_PLUS.projector(BEFORE_STAGE)])
        with pytest.raises(PartitionError):
            measure_decompose(canonical_state("before"), [U_PLUS.projector(BEFORE_STAGE)])

    @settings(max_examples=40, deadline=None)
    @given(states_at(F_PLUS_STAGE))
    def test_probabilities_match_born(self, state):
        cells = arm_partition(F_PLUS_STAGE, Arm.ELECTRON)
        branches = measure_decompose(state, cells)
        assert sum(p for _, p, _ in branches) == pytest.approx(1, abs=1e-9)
        for cell, p, _ in branches:
            assert p == pytest.approx(born_probability(state, cell), abs=1e-15)


class TestStatesEqual:
    def test_global_phase_flag(self):
        s = canonical_state("before")
        t = JointState({k: 1j * v for k, v in s.amplitudes.items()}, s.stage)
        assert not states_equal(s, t)
        assert states_equal(s, t, up_to_global_phase=True)

    def test_distinct_states(self):
        a = canonical_state("f_minus")
        b = JointState({k: -v if k is GAMMA else v for k, v in a.amplitudes.items()}, a.stage)
        assert not states_equal(a, b)
        assert not states_equal(a, b, up_to_global_phase=True)
        assert not states_equal(canonical_state("f_minus"), canonical_state("f_plus"))

    def test_canonical_phase(self):
        s = canonical_phase(canonical_state("before"))
        assert s[GAMMA] == 0.5


class TestSerialization:
    def test_records_roundtrip(self):
        s = canonical_state("f_minus")
        recs = state_to_records(s)
        assert [r["label"] for r in recs] == ["gamma", "u+c-", "u+d-", "v+c-"]
        assert recs[1]["re"] == pytest.approx(-0.353553390593, abs=1e-12)
        back = state_from_records(recs, s.stage)
        assert states_equal(back, s, tol=1e-11)

    def test_observable_product(self):
        assert U_PLUS * U_MINUS == U_PLUS_U_MINUS
        assert U_PLUS_U_MINUS.projector(BEFORE_STAGE).included == {Pair("u", "u")}
        assert U_PLUS.projector(F_MINUS_STAGE).included == {Pair("u", "c"), Pair("u", "d")}
        with pytest.raises(StageError):
            U_PLUS.projector(AFTER_STAGE)
