import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coursecause.domain import CovariateVector, NotEstimable
from coursecause.matching import (
    Arm,
    GroupedStudent,
    ScalingContext,
    build_candidates,
    build_groups,
    greedy_match,
    jaccard_sim,
    match_candidates,
    matched_sample_csv,
    pair_distance,
)
from coursecause.pairs import build_course_pair

from conftest import FALL11, FALL12, SPRING12, cohort_of, history, taking

SQRT3 = math.sqrt(3.0)


def grouped(sid, gpa=3.0, credits=40.0, courses=frozenset(), arm=Arm.TREATMENT,
            outcome=3.0):
    return GroupedStudent(
        student_id=sid,
        outcome=outcome,
        covariates=CovariateVector(gpa, credits, frozenset(courses)),
        prior_to_x_courses=frozenset(courses),
        arm=arm,
    )


IDENTITY_SCALE = ScalingContext(0.0, 1.0, 0.0, 1.0)


class TestJaccard:
    def test_identical_sets(self):
        assert jaccard_sim({"a", "b"}, {"a", "b"}) == 1.0

    def test_disjoint_sets(self):
        assert jaccard_sim({"a"}, {"b"}) == 0.0

    def test_partial_overlap_by_enumeration(self):
        # |{a,b} ∩ {b,c}| = 1 and |{a,b} ∪ {b,c}| = 3.
        assert jaccard_sim({"a", "b"}, {"b", "c"}) == pytest.approx(1 / 3)

    def test_both_empty_count_as_identical(self):
        assert jaccard_sim(frozenset(), frozenset()) == 1.0

    @given(
        st.frozensets(st.sampled_from("abcdefgh"), max_size=8),
        st.frozensets(st.sampled_from("abcdefgh"), max_size=8),
    )
    def test_symmetric_and_bounded(self, a, b):
        assert jaccard_sim(a, b) == jaccard_sim(b, a)
        assert 0.0 <= jaccard_sim(a, b) <= 1.0


class TestPairDistance:
    def test_identical_students_distance_zero(self):
        a = grouped("a", gpa=3.2, credits=35, courses={"c1", "c2"})
        b = grouped("b", gpa=3.2, credits=35, courses={"c1", "c2"}, arm=Arm.CONTROL)
        assert pair_distance(a, b, IDENTITY_SCALE) == 0.0

    def test_all_components_maximal_gives_one(self):
        scale = ScalingContext(0.0, 4.0, 0.0, 100.0)
        a = grouped("a", gpa=4.0, credits=100, courses={"c1"})
        b = grouped("b", gpa=0.0, credits=0, courses={"c2"}, arm=Arm.CONTROL)
        assert pair_distance(a, b, scale) == pytest.approx(1.0)

    def test_jaccard_only_component(self):
        # g = c = 0 and j = 1 - 1/3, so distance = (2/3)/sqrt(3).
        a = grouped("a", courses={"a", "b"})
        b = grouped("b", courses={"b", "c"}, arm=Arm.CONTROL)
        assert pair_distance(a, b, IDENTITY_SCALE) == pytest.approx(
            (2 / 3) / SQRT3, abs=1e-12
        )

    def test_degenerate_scale_component_is_zero(self):
        scale = ScalingContext(1.0, 1.0, 0.0, 0.0)
        a = grouped("a", gpa=4.0, credits=90, courses={"c"})
        b = grouped("b", gpa=1.0, credits=10, courses={"c"}, arm=Arm.CONTROL)
        assert pair_distance(a, b, scale) == 0.0

    def test_gap_scaling_clips_into_unit_interval(self):
        scale = ScalingContext(0.5, 1.0, 0.0, 1.0)
        a = grouped("a", gpa=3.0)
        near = grouped("n", gpa=3.1, arm=Arm.CONTROL)  # raw gap below observed min
        far = grouped("f", gpa=0.0, arm=Arm.CONTROL)  # raw gap above observed max
        assert pair_distance(a, near, scale) == 0.0
        assert pair_distance(a, far, scale) == pytest.approx(1 / SQRT3)

    @given(st.data())
    @settings(max_examples=60)
    def test_symmetry_and_range(self, data):
        def draw_student(sid, arm):
            return grouped(
                sid,
                gpa=data.draw(st.floats(0, 4)),
                credits=data.draw(st.floats(0, 150)),
                courses=data.draw(st.frozensets(st.sampled_from("pqrs"), max_size=4)),
                arm=arm,
            )

        a = draw_student("a", Arm.TREATMENT)
        b = draw_student("b", Arm.CONTROL)
        scale = ScalingContext.from_groups([a], [b])
        d_ab = pair_distance(a, b, scale)
        assert d_ab == pair_distance(b, a, scale)
        assert 0.0 <= d_ab <= 1.0
        assert pair_distance(a, a, scale) == 0.0

    def test_scaling_context_from_groups(self):
        t = [grouped("t1", gpa=1.0, credits=10), grouped("t2", gpa=3.0, credits=20)]
        c = [grouped("c1", gpa=2.0, credits=40, arm=Arm.CONTROL)]
        scale = ScalingContext.from_groups(t, c)
        assert scale.gpa_min == 1.0 and scale.gpa_max == 1.0
        assert scale.credits_min == 20.0 and scale.credits_max == 30.0


class TestBuildGroups:
    def _cohort(self):
        return cohort_of(
            # Passed x above a C strictly before Y: treatment.
            history("t1", taking("base", FALL11, "B"), taking("x", FALL11, "B"),
                    taking("Y", FALL12, "A")),
            # Took x before Y but only a C: control.
            history("c1", taking("base", FALL11, "B"), taking("x", FALL11, "C"),
                    taking("Y", FALL12, "B")),
            # Never took x before Y: control.
            history("c2", taking("base", FALL11, "B"), taking("Y", SPRING12, "C+")),
            # x only in the same term as Y: excluded.
            history("e1", taking("base", FALL11, "B"), taking("x", FALL12, "A"),
                    taking("Y", FALL12, "B")),
            # Y in their first term, no prior history: excluded.
            history("e2", taking("Y", FALL11, "B"), taking("base", SPRING12, "B")),
        )

    def test_classification(self):
        cohort = self._cohort()
        pair = build_course_pair(cohort, "Y", "x")
        treatment, control = build_groups(cohort, pair)
        assert [s.student_id for s in treatment] == ["t1"]
        assert sorted(s.student_id for s in control) == ["c1", "c2"]

    def test_failed_then_passed_before_y_is_treatment(self):
        cohort = cohort_of(
            history("s1", taking("base", FALL11, "B"), taking("x", FALL11, "F"),
                    taking("x", SPRING12, "B"), taking("Y", FALL12, "B")),
            history("c1", taking("base", FALL11, "B"), taking("Y", FALL12, "B")),
        )
        pair = build_course_pair(cohort, "Y", "x")
        treatment, control = build_groups(cohort, pair)
        assert [s.student_id for s in treatment] == ["s1"]
        # Jaccard window: courses before the qualifying (passing) attempt.
        assert treatment[0].prior_to_x_courses == {"base", "x"}

    def test_outcome_is_first_attempt_points(self):
        cohort = cohort_of(
            history("s1", taking("base", FALL11, "B"), taking("x", FALL11, "B"),
                    taking("Y", SPRING12, "F"), taking("Y", FALL12, "A")),
            history("c1", taking("base", FALL11, "B"), taking("Y", SPRING12, "B")),
        )
        pair = build_course_pair(cohort, "Y", "x")
        treatment, _ = build_groups(cohort, pair)
        assert treatment[0].outcome == 0.0

    def test_empty_arm_raises_with_stage(self):
        cohort = cohort_of(
            history("t1", taking("base", FALL11, "B"), taking("x", FALL11, "B"),
                    taking("Y", FALL12, "A")),
        )
        pair = build_course_pair(cohort, "Y", "x")
        with pytest.raises(NotEstimable) as err:
            build_groups(cohort, pair)
        assert err.value.stage == "grouping"
        assert "control" in err.value.reason

    def test_brute_force_classification_oracle(self):
        rng = np.random.default_rng(3)
        calendar = [FALL11, SPRING12, FALL12]
        letters = ["A", "B", "C", "D", "F"]
        hs = []
        for i in range(60):
            takes = [("base", calendar[0], letters[rng.integers(0, 5)])]
            if rng.random() < 0.7:
                takes.append(("x", calendar[rng.integers(0, 3)], letters[rng.integers(0, 5)]))
            takes.append(("Y", calendar[rng.integers(1, 3)], letters[rng.integers(0, 5)]))
            seen = set()
            entries = []
            for c, t, g in takes:
                if (c, t) not in seen:
                    seen.add((c, t))
                    entries.append(taking(c, t, g))
            hs.append(history(f"s{i:02d}", *entries))
        cohort = cohort_of(*hs)
        pair = build_course_pair(cohort, "Y", "x")
        treatment, control = build_groups(cohort, pair)
        got = {s.student_id: s.arm for s in treatment + control}

        expected = {}
        for h in hs:
            y_first = h.by_course["Y"][0]
            prior = h.takings_before(y_first.term)
            if not prior:
                continue
            x_prior = [t for t in h.by_course.get("x", ()) if t.term < y_first.term]
            if any(t.grade.points > 2.0 for t in x_prior):
                expected[h.student_id] = Arm.TREATMENT
            elif x_prior:
                expected[h.student_id] = Arm.CONTROL
            elif any(t.term == y_first.term for t in h.by_course.get("x", ())):
                continue
            else:
                expected[h.student_id] = Arm.CONTROL
        assert got == expected


def brute_force_greedy(treatment, control, cutoff):
    """Reference matcher: rescan the full table for the closest unmatched
    cross-arm pair, accept, repeat."""
    scale = ScalingContext.from_groups(treatment, control)
    used_t, used_c, matches = set(), set(), []
    limit = min(len(treatment), len(control))
    while len(matches) < limit:
        best = None
        for a in treatment:
            if a.student_id in used_t:
                continue
            for b in control:
                if b.student_id in used_c:
                    continue
                key = (pair_distance(a, b, scale), a.student_id, b.student_id)
                if best is None or key < best:
                    best = key
        if best is None or best[0] > cutoff:
            break
        matches.append(best)
        used_t.add(best[1])
        used_c.add(best[2])
    return matches


def random_arm(rng, size, arm, prefix):
    students = []
    for i in range(size):
        students.append(
            grouped(
                f"{prefix}{i}",
                gpa=float(rng.uniform(0, 4)),
                credits=float(rng.uniform(0, 150)),
                courses=frozenset(
                    rng.choice(list("abcdefgh"), size=rng.integers(0, 5), replace=False)
                ),
                arm=arm,
                outcome=float(rng.uniform(0, 4)),
            )
        )
    return students


class TestGreedyMatch:
    def test_single_candidate(self):
        t = [grouped("t", gpa=3.0)]
        c = [grouped("c", gpa=3.1, arm=Arm.CONTROL)]
        sample = greedy_match(t, c, cutoff=0.5)
        assert len(sample.pairs) == 1
        assert sample.unmatched_treatment_count == 0

    def test_all_beyond_cutoff_raises(self):
        t = [grouped("t", courses={"a"})]
        c = [grouped("c", courses={"b"}, arm=Arm.CONTROL)]  # j = 1 alone
        with pytest.raises(NotEstimable) as err:
            greedy_match(t, c, cutoff=0.5)
        assert err.value.stage == "matching"

    def test_cutoff_validation(self):
        t = [grouped("t")]
        c = [grouped("c", arm=Arm.CONTROL)]
        for bad in (0.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                greedy_match(t, c, bad)

    def test_hand_built_three_by_three(self):
        # Same course sets and credits, so distance reduces to the scaled GPA
        # gap over sqrt(3); gaps are min-max scaled over the 9 candidates.
        t = [grouped(f"t{i}", gpa=g, courses={"c"}) for i, g in enumerate([1.0, 2.0, 3.0])]
        c = [grouped(f"c{i}", gpa=g, courses={"c"}, arm=Arm.CONTROL)
             for i, g in enumerate([1.1, 2.5, 3.9])]
        gaps = sorted(abs(a - b) for a in (1.0, 2.0, 3.0) for b in (1.1, 2.5, 3.9))
        lo, hi = gaps[0], gaps[-1]
        assert (lo, hi) == pytest.approx((0.1, 2.9))

        sample = greedy_match(t, c, cutoff=0.5)
        matched = [(p.treatment.student_id, p.control.student_id) for p in sample.pairs]
        assert matched == [("t0", "c0"), ("t1", "c1"), ("t2", "c2")]
        expected = [0.0, ((0.5 - lo) / (hi - lo)) / SQRT3, ((0.9 - lo) / (hi - lo)) / SQRT3]
        assert [p.distance for p in sample.pairs] == pytest.approx(expected, abs=1e-12)
        # Tighter cutoff drops only the widest pair.
        tight = greedy_match(t, c, cutoff=expected[1] + 1e-9)
        assert len(tight.pairs) == 2

    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(12)
        for trial in range(40):
            t = random_arm(rng, int(rng.integers(2, 7)), Arm.TREATMENT, "t")
            c = random_arm(rng, int(rng.integers(2, 7)), Arm.CONTROL, "c")
            cutoff = float(rng.uniform(0.05, 1.0))
            expected = brute_force_greedy(t, c, cutoff)
            try:
                sample = greedy_match(t, c, cutoff)
                got = [
                    (p.distance, p.treatment.student_id, p.control.student_id)
                    for p in sample.pairs
                ]
            except NotEstimable:
                got = []
            assert [(tid, cid) for _, tid, cid in got] == [
                (tid, cid) for _, tid, cid in expected
            ]
            for (d1, _, _), (d2, _, _) in zip(got, expected):
                assert d1 == pytest.approx(d2, abs=1e-12)

    def test_order_invariance(self):
        rng = np.random.default_rng(5)
        t = random_arm(rng, 6, Arm.TREATMENT, "t")
        c = random_arm(rng, 8, Arm.CONTROL, "c")
        a = greedy_match(t, c, 0.8)
        b = greedy_match(list(reversed(t)), list(reversed(c)), 0.8)
        assert [
            (p.treatment.student_id, p.control.student_id) for p in a.pairs
        ] == [(p.treatment.student_id, p.control.student_id) for p in b.pairs]

    def test_no_student_reused_and_distances_below_cutoff(self):
        rng = np.random.default_rng(9)
        t = random_arm(rng, 10, Arm.TREATMENT, "t")
        c = random_arm(rng, 7, Arm.CONTROL, "c")
        sample = greedy_match(t, c, 0.6)
        ids = [p.treatment.student_id for p in sample.pairs] + [
            p.control.student_id for p in sample.pairs
        ]
        assert len(ids) == len(set(ids))
        assert all(p.distance <= 0.6 for p in sample.pairs)
        assert len(sample.pairs) <= min(len(t), len(c))
        assert sample.unmatched_treatment_count == len(t) - len(sample.pairs)
        assert sample.unmatched_control_count == len(c) - len(sample.pairs)

    def test_pair_count_monotone_in_cutoff(self):
        rng = np.random.default_rng(17)
        t = random_arm(rng, 9, Arm.TREATMENT, "t")
        c = random_arm(rng, 9, Arm.CONTROL, "c")
        candidates = build_candidates(t, c)
        counts = []
        for cutoff in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0):
            try:
                counts.append(len(match_candidates(candidates, cutoff).pairs))
            except NotEstimable:
                counts.append(0)
        assert counts == sorted(counts)

    def test_candidate_reuse_equals_direct_call(self):
        rng = np.random.default_rng(23)
        t = random_arm(rng, 6, Arm.TREATMENT, "t")
        c = random_arm(rng, 6, Arm.CONTROL, "c")
        direct = greedy_match(t, c, 0.7)
        reused = match_candidates(build_candidates(t, c), 0.7)
        assert direct == reused

    def test_audit_csv_format(self):
        t = [grouped("t", gpa=3.0)]
        c = [grouped("c", gpa=3.0, arm=Arm.CONTROL)]
        text = matched_sample_csv(greedy_match(t, c, 0.5))
        lines = text.strip().splitlines()
        assert lines[0] == "treatment_id,control_id,distance"
        assert lines[1] == "t,c,0.000000"
