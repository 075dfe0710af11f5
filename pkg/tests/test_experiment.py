import itertools
import math

import numpy as np
import pytest
from scipy import stats

import dense_oracle as oracle
from hardysim.core import Arm, Pair, apply_isometry, born_probability, bs2, states_equal
from hardysim.errors import ScheduleError
from hardysim.experiment import (
    BEFORE_STAGE, F_PLUS_STAGE, FINAL_AMPLITUDES_EXACT, GENERATOR, SCHEDULES, U_MINUS, U_PLUS,
    U_PLUS_U_MINUS, CanonicalTag, EvolutionStep, RunOutcome, canonical_state, evolve,
    final_distribution, parse_schedule, path_detector_branches, run_report, sample_runs,
    second_splitters,
)

PROBS = {RunOutcome.GAMMA: 1 / 4, RunOutcome.CPCM: 9 / 16, RunOutcome.CPDM: 1 / 16,
         RunOutcome.DPCM: 1 / 16, RunOutcome.DPDM: 1 / 16}


def as_strings(state):
    return {str(k): v for k, v in state.amplitudes.items()}


@pytest.mark.parametrize("tag", list(CanonicalTag))
def test_evolve_matches_dense_oracle(tag):
    schedule = [s.value for s in SCHEDULES[tag]]
    got = as_strings(evolve(schedule))
    want = oracle.to_dict(oracle.run(schedule))
    assert got.keys() == want.keys()
    for k in want:
        assert abs(got[k] - want[k]) < 1e-12


@pytest.mark.parametrize("tag", list(CanonicalTag))
def test_evolve_matches_canonical(tag):
    assert states_equal(evolve(SCHEDULES[tag]), canonical_state(tag))


def test_all_valid_orderings_agree_with_oracle():
    # every legal interleaving of the five steps lands on the same final state
    final = canonical_state("after")
    count = 0
    for perm in itertools.permutations([s.value for s in EvolutionStep]):
        try:
            state = evolve(perm)
        except ScheduleError:
            continue
        count += 1
        assert states_equal(state, final)
        assert as_strings(state).keys() == oracle.to_dict(oracle.run(perm)).keys()
    # bs1 pair (2 orders) x ann fixed x bs2 pair (2 orders)
    assert count == 4


def test_second_splitters_either_order():
    before = canonical_state("before")
    assert states_equal(apply_isometry(before, second_splitters()), canonical_state("after"))
    plus_first = bs2(Arm.ELECTRON, F_PLUS_STAGE)
    via_f_plus = apply_isometry(apply_isometry(before, bs2(Arm.POSITRON, BEFORE_STAGE)), plus_first)
    assert states_equal(via_f_plus, canonical_state("after"))


def test_exact_fractions_match_float():
    state = canonical_state("after")
    for o, (re, im) in FINAL_AMPLITUDES_EXACT.items():
        assert abs(state[o.label] - complex(float(re), float(im))) < 1e-15
    total = sum(re * re + im * im for re, im in FINAL_AMPLITUDES_EXACT.values())
    assert total == 1


class TestSchedules:
    @pytest.mark.parametrize("bad", [
        ["bs1+", "bs1-", "bs2-"],          # skips the annihilation
        ["bs1+", "ann"],                   # annihilation before bs1-
        ["bs1+", "bs1+"],                  # repeated step
        ["bs1+", "bs1-", "ann", "bs2+", "bs2+"],
    ])
    def test_rejected(self, bad):
        with pytest.raises(ScheduleError):
            evolve(bad)

    def test_parse(self):
        assert parse_schedule(" bs1+, BS1- ,ann") == [
            EvolutionStep.BS1_PLUS, EvolutionStep.BS1_MINUS, EvolutionStep.ANNIHILATE]
        with pytest.raises(ScheduleError):
            parse_schedule("bs3+")

    def test_empty_schedule_is_source(self):
        assert dict(evolve([]).amplitudes) == {Pair("s", "s"): 1}


class TestPhysics:
    def test_distribution(self):
        dist = final_distribution()
        for o, p in PROBS.items():
            assert abs(dist[o] - p) < 1e-12
        assert abs(sum(dist.values()) - 1) < 1e-12

    def test_u_plus_u_minus_extinguished(self):
        state = canonical_state("before")
        assert born_probability(state, U_PLUS_U_MINUS.projector(BEFORE_STAGE)) == 0
        assert born_probability(state, U_PLUS.projector(BEFORE_STAGE)) == pytest.approx(0.25)
        assert born_probability(state, U_MINUS.projector(BEFORE_STAGE)) == pytest.approx(0.25)

    def test_detector_branches_f_minus(self):
        branches = path_detector_branches("f_minus", Arm.ELECTRON)
        by_name = {cell.name: (p, br) for cell, p, br in branches}
        p_d, branch = by_name["d-"]
        assert p_d == pytest.approx(1 / 8, abs=1e-12)
        # in the D- world the positron sits on its u path
        assert set(branch.amplitudes) == {Pair("u", "d")}

    def test_detector_branches_full_labels(self):
        branches = path_detector_branches("f_plus")
        assert sum(p for _, p, _ in branches) == pytest.approx(1)
        assert {cell.name for cell, _, _ in branches} == {"gamma", "c+u-", "c+v-", "d+u-"}


class TestSampling:
    def test_deterministic(self):
        assert sample_runs(1000, 42) == sample_runs(1000, 42)
        assert run_report(1000, 42) == run_report(1000, 42)

    def test_seeds_differ(self):
        assert sample_runs(100000, 1) != sample_runs(100000, 2)

    @pytest.mark.parametrize("n", [1, 16])
    def test_small_n(self, n):
        counts = sample_runs(n, 3)
        assert sum(counts.values()) == n
        assert all(c >= 0 for c in counts.values())

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            sample_runs(0, 1)
        with pytest.raises(ValueError):
            sample_runs(10, -1)
        with pytest.raises(ValueError):
            sample_runs(10, 2 ** 64)

    def test_report_shape(self):
        rep = run_report(160000, 11)
        assert rep["generator"] == GENERATOR and rep["schema_version"] == 1
        assert [r["outcome"] for r in rep["records"]] == [o.value for o in RunOutcome]
        for r in rep["records"]:
            assert abs(r["deviation_sigmas"]) < 5
        assert sum(r["count"] for r in rep["records"]) == 160000

    def test_chi_square_over_seeds(self):
        n = 10 ** 6
        expected = np.array([PROBS[o] for o in RunOutcome]) * n
        passes = 0
        seeds = range(100)
        for seed in seeds:
            counts = sample_runs(n, seed)
            observed = np.array([counts[o] for o in RunOutcome])
            if stats.chisquare(observed, expected).pvalue > 0.001:
                passes += 1
        assert passes >= math.ceil(0.99 * len(seeds))
