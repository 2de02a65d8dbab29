"""Tests for the ordered-median model and its polynomial lifts."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from owasdp.omrf import (
    EmptyProblemError,
    EmptyWindowError,
    LambdaWeights,
    LiftBuildError,
    LiftedProblem,
    OmrfProblem,
    PatternMismatchError,
    build_auto,
    build_general_lift,
    build_kcentrum,
    build_monotone,
    build_trimmed,
    evaluate_ordered_median,
    function_bounds,
    lifted_witness,
    putinar_structurally_bounded,
    running_intersection_holds,
)
from owasdp.polynomial import (
    Polynomial,
    RationalFunction,
    SemialgebraicSet,
    VariableUniverse,
    parse,
)

from support import abs_evaluate, random_omrf_problem, random_omrf_point


# ---------------------------------------------------------------------------
# Construction helpers
# ---------------------------------------------------------------------------


def make_problem(
    names,
    numerator_texts,
    weights,
    denominator_texts=None,
    inequality_texts=(),
    equality_texts=(),
    ball=4.0,
):
    universe = VariableUniverse(names)
    functions = []
    for idx, text in enumerate(numerator_texts):
        numerator = parse(text, universe)
        if denominator_texts is None:
            denominator = Polynomial.constant(universe, 1.0)
        else:
            denominator = parse(denominator_texts[idx], universe)
        functions.append(RationalFunction(numerator, denominator))
    if not isinstance(weights, LambdaWeights):
        weights = LambdaWeights.constants(universe, weights)
    ground = SemialgebraicSet(
        universe,
        [parse(t, universe) for t in inequality_texts],
        [parse(t, universe) for t in equality_texts],
    )
    return OmrfProblem(tuple(functions), weights, ground, ball)


def assert_lift_sound(problem, lifted, point, tol=1e-10):
    """Witness feasibility plus objective agreement at one point."""
    z = lifted_witness(problem, lifted, point)
    for h in lifted.equality_constraints:
        assert abs(h.evaluate(z)) <= tol * (1.0 + abs_evaluate(h, z))
    for g in lifted.inequality_constraints:
        assert g.evaluate(z) >= -tol * (1.0 + abs_evaluate(g, z))
    om_value = evaluate_ordered_median(problem, point)
    den_value = lifted.objective_den.evaluate(z)
    assert den_value > 0.0
    lifted_value = lifted.objective_num.evaluate(z) / den_value
    assert abs(lifted_value - om_value) <= 1e-9 * (1.0 + abs(om_value))


random_problem = random_omrf_problem
random_point = random_omrf_point


# ---------------------------------------------------------------------------
# LambdaWeights
# ---------------------------------------------------------------------------


class TestLambdaWeights:
    def classify(self, values):
        universe = VariableUniverse(["x"])
        return LambdaWeights.constants(universe, values)

    def test_all_ones(self):
        w = self.classify([1.0, 1.0, 1.0])
        assert w.is_all_ones()
        assert w.top_k() == 3
        assert w.trimmed_window() == (0, 0)
        assert w.is_monotone()
        assert w.classify() == "all_ones"

    def test_top_k(self):
        w = self.classify([1.0, 1.0, 0.0])
        assert not w.is_all_ones()
        assert w.top_k() == 2
        assert w.trimmed_window() == (0, 1)
        assert w.is_monotone()
        assert w.classify() == "top_k"

    def test_trimmed_window(self):
        w = self.classify([0.0, 1.0, 1.0, 0.0])
        assert w.top_k() is None
        assert w.trimmed_window() == (1, 1)
        assert not w.is_monotone()
        assert w.classify() == "trimmed_window"

    def test_monotone(self):
        w = self.classify([3.0, 2.0, 1.0])
        assert w.top_k() is None
        assert w.trimmed_window() is None
        assert w.is_monotone()
        assert w.classify() == "monotone"

    def test_generic(self):
        assert self.classify([1.0, 0.0, -1.0]).classify() == "generic"
        assert self.classify([2.0, 1.0, 3.0]).classify() == "generic"
        assert self.classify([1.0, 1.0, 0.0, 1.0]).classify() == "generic"

    def test_all_zero_is_monotone(self):
        assert self.classify([0.0, 0.0]).classify() == "monotone"

    def test_polynomial_weights(self):
        universe = VariableUniverse(["x"])
        entries = (parse("1 + x", universe), parse("x", universe))
        w = LambdaWeights(entries)
        assert not w.is_constant()
        assert w.top_k() is None
        assert w.classify() == "generic"
        with pytest.raises(ValueError):
            w.constant_values()

    def test_padded_values(self):
        assert self.classify([1.0, 0.5]).padded_constant_values() == (1.0, 0.5, 0.0)

    def test_empty_rejected(self):
        with pytest.raises(EmptyProblemError):
            LambdaWeights(())

    def test_evaluate(self):
        universe = VariableUniverse(["x"])
        entries = (parse("1 + x", universe), parse("2", universe))
        values = LambdaWeights(entries).evaluate(np.array([0.5]))
        np.testing.assert_allclose(values, [1.5, 2.0])


# ---------------------------------------------------------------------------
# OmrfProblem
# ---------------------------------------------------------------------------


class TestOmrfProblem:
    def test_length_mismatch(self):
        universe = VariableUniverse(["x"])
        f = RationalFunction.from_polynomial(parse("x", universe))
        w = LambdaWeights.constants(universe, [1.0, 0.0])
        with pytest.raises(ValueError):
            OmrfProblem((f,), w, SemialgebraicSet(universe), 1.0)

    def test_nonpositive_ball(self):
        universe = VariableUniverse(["x"])
        f = RationalFunction.from_polynomial(parse("x", universe))
        w = LambdaWeights.constants(universe, [1.0])
        with pytest.raises(ValueError):
            OmrfProblem((f,), w, SemialgebraicSet(universe), 0.0)

    def test_region_attaches_ball(self):
        problem = make_problem(("x", "y"), ("x", "y"), (1.0, 0.0), ball=9.0)
        region = problem.region
        assert region.ball_bound == 9.0
        assert region.ball_variables == (0, 1)
        assert region.contains(np.array([1.0, 2.0]))
        assert not region.contains(np.array([3.0, 1.0]))

    def test_ground_ball_must_cover_all_variables(self):
        universe = VariableUniverse(["x", "y"])
        f = RationalFunction.from_polynomial(parse("x", universe))
        w = LambdaWeights.constants(universe, [1.0])
        ground = SemialgebraicSet(universe, ball_bound=4.0, ball_variables=(0,))
        with pytest.raises(ValueError):
            OmrfProblem((f,), w, ground, 4.0)

    def test_ground_ball_must_agree(self):
        universe = VariableUniverse(["x"])
        f = RationalFunction.from_polynomial(parse("x", universe))
        w = LambdaWeights.constants(universe, [1.0])
        ground = SemialgebraicSet(universe, ball_bound=2.0, ball_variables=(0,))
        with pytest.raises(ValueError):
            OmrfProblem((f,), w, ground, 4.0)


# ---------------------------------------------------------------------------
# evaluate_ordered_median
# ---------------------------------------------------------------------------


class TestEvaluate:
    def test_max_of_two(self):
        problem = make_problem(("x",), ("x", "1 - x"), (1.0, 0.0), ball=2.0)
        assert evaluate_ordered_median(problem, [0.2]) == pytest.approx(0.8)

    def test_all_ones_is_plain_sum(self):
        rng = np.random.default_rng(7)
        problem = make_problem(
            ("x",), ("x^2", "1 - x", "3*x"), (1.0, 1.0, 1.0), ball=4.0
        )
        for _ in range(20):
            x = rng.uniform(-1.0, 1.0, 1)
            expected = sum(f.evaluate(x) for f in problem.functions)
            assert evaluate_ordered_median(problem, x) == pytest.approx(expected)

    def test_range_weights_match_independent_sort(self):
        problem = make_problem(
            ("x",), ("x^2", "x^2 - x", "2*x^2 + 1"), (1.0, 0.0, -1.0), ball=4.0
        )
        x = np.array([0.3])
        values = sorted((f.evaluate(x) for f in problem.functions), reverse=True)
        expected = values[0] - values[2]
        assert evaluate_ordered_median(problem, x) == pytest.approx(expected)
        assert expected == pytest.approx(1.18 - (-0.21))

    def test_denominator_zero_raises(self):
        problem = make_problem(
            ("x",), ("1",), (1.0,), denominator_texts=("x",), ball=4.0
        )
        with pytest.raises(ValueError):
            evaluate_ordered_median(problem, [0.0])
        with pytest.raises(ValueError):
            evaluate_ordered_median(problem, [-0.5])


# ---------------------------------------------------------------------------
# Structural checks
# ---------------------------------------------------------------------------


class TestStructuralHelpers:
    def test_running_intersection_passes_on_chain(self):
        assert running_intersection_holds([(1, 2), (2, 3), (3, 4)])

    def test_running_intersection_detects_violation(self):
        # third clique overlaps {1} and {3} but no single predecessor holds both
        assert not running_intersection_holds([(1, 2), (3, 4), (1, 3)])

    def test_disjoint_cliques_pass(self):
        assert running_intersection_holds([(1,), (2,), (3,)])

    def test_putinar_check_detects_missing_ball(self):
        universe = VariableUniverse(["x"])
        x = parse("x", universe)
        lifted = LiftedProblem(
            universe=universe,
            objective_num=x,
            objective_den=Polynomial.constant(universe, 1.0),
            inequality_constraints=(x,),
            equality_constraints=(),
            cliques=((0,),),
            original_variables=(0,),
            form="general",
            variable_groups=(("w", ()),),
        )
        assert not putinar_structurally_bounded(lifted)


# ---------------------------------------------------------------------------
# Interval bounds
# ---------------------------------------------------------------------------


class TestFunctionBounds:
    def test_bounds_enclose_sampled_values(self):
        problem = make_problem(
            ("x",),
            ("x + 2", "x^2 - x"),
            (1.0, 0.0),
            denominator_texts=("1 + x^2", "1"),
            ball=1.0,
        )
        bounds = function_bounds(problem)
        rng = np.random.default_rng(3)
        for _ in range(200):
            x = rng.uniform(-1.0, 1.0, 1)
            for f, (lo, hi) in zip(problem.functions, bounds):
                assert lo - 1e-12 <= f.evaluate(x) <= hi + 1e-12

    def test_uncertifiable_denominator_rejected(self):
        problem = make_problem(
            ("x",), ("1",), (1.0,), denominator_texts=("2 + x",), ball=9.0
        )
        # denominator enclosure over [-3, 3] dips below zero
        with pytest.raises(LiftBuildError):
            function_bounds(problem)


# ---------------------------------------------------------------------------
# General lift
# ---------------------------------------------------------------------------


class TestGeneralLift:
    def test_shapes_m2(self):
        problem = make_problem(
            ("x",),
            ("x", "1 - x"),
            (1.0, 0.0),
            inequality_texts=("x", "1 - x"),
            ball=2.0,
        )
        lifted = build_general_lift(problem)
        assert lifted.form == "general"
        assert len(lifted.universe) == 1 + 4
        # rows + columns + binarity
        assert len(lifted.equality_constraints) == 2 + 2 + 4
        # ground (2) + ball + sorting (1) + per-column balls (2)
        assert len(lifted.inequality_constraints) == 2 + 1 + 1 + 2
        assert lifted.cliques == ((0, 1, 2, 3, 4),)
        assert putinar_structurally_bounded(lifted)
        assert running_intersection_holds(lifted.cliques)
        assert lifted.objective_den.is_constant()

    def test_cliques_overlap_consecutive_columns(self):
        problem = make_problem(
            ("x", "y"), ("x", "y", "x + y"), (1.0, 0.5, 0.0), ball=8.0
        )
        lifted = build_general_lift(problem)
        assert len(lifted.cliques) == 2
        for clique in lifted.cliques:
            assert len(clique) == 2 + 2 * 3  # x vars + two columns of w
        assert running_intersection_holds(lifted.cliques)

    def test_m1_forces_single_assignment(self):
        problem = make_problem(("x",), ("x^2",), (2.0,), ball=4.0)
        lifted = build_general_lift(problem)
        assert len(lifted.universe) == 2
        w_minus_one = parse("w_1_1 - 1", lifted.universe)
        matching = [h for h in lifted.equality_constraints if h == w_minus_one]
        assert len(matching) == 2  # row sum and column sum coincide
        expected = parse("2.0*w_1_1*x^2", lifted.universe)
        assert lifted.objective_num == expected

    def test_objective_matches_weighted_columns(self):
        problem = make_problem(("x",), ("x", "1 - x"), (1.0, 0.0), ball=2.0)
        lifted = build_general_lift(problem)
        expected = parse("w_1_1*x - w_2_1*x + w_2_1", lifted.universe)
        assert lifted.objective_num == expected

    def test_only_sorting_permutations_feasible(self):
        universe = VariableUniverse(["x"])
        x = parse("x", universe)
        functions = tuple(
            RationalFunction.from_polynomial(p)
            for p in (2.1 * x, 0.4 * x + 0.9, -1.3 * x + 1.7)
        )
        weights = LambdaWeights.constants(universe, [2.0, 1.0, 0.0])
        problem = OmrfProblem(
            functions, weights, SemialgebraicSet(universe), 4.0
        )
        lifted = build_general_lift(problem)
        w_ids = dict(lifted.variable_groups)["w"]
        m = 3
        # sorting constraints are the w-supported inequalities that also
        # involve x (the per-column balls are pure w)
        sorting = [
            g
            for g in lifted.inequality_constraints
            if set(g.variables()) & set(w_ids) and 0 in g.variables()
        ]
        assert len(sorting) == m - 1
        for x_val in np.linspace(0.05, 0.95, 7):
            point = np.array([x_val])
            values = [f.evaluate(point) for f in functions]
            for perm in itertools.permutations(range(m)):
                z = np.zeros(len(lifted.universe))
                z[0] = x_val
                for position, func_index in enumerate(perm):
                    z[w_ids[func_index * m + position]] = 1.0
                feasible = all(g.evaluate(z) >= -1e-9 for g in sorting)
                correctly_sorted = all(
                    values[perm[j]] >= values[perm[j + 1]] - 1e-12
                    for j in range(m - 1)
                )
                assert feasible == correctly_sorted
                if feasible:
                    om = evaluate_ordered_median(problem, point)
                    ratio = lifted.objective_num.evaluate(
                        z
                    ) / lifted.objective_den.evaluate(z)
                    assert ratio == pytest.approx(om, abs=1e-10)

    def test_witness_tie_break_prefers_lower_index(self):
        problem = make_problem(("x",), ("x", "x"), (1.0, 0.0), ball=2.0)
        lifted = build_general_lift(problem)
        z = lifted_witness(problem, lifted, [0.7])
        w_ids = dict(lifted.variable_groups)["w"]
        m = 2
        assert z[w_ids[0 * m + 0]] == 1.0  # function 1 takes position 1
        assert z[w_ids[1 * m + 1]] == 1.0  # function 2 takes position 2


# ---------------------------------------------------------------------------
# Compact builders
# ---------------------------------------------------------------------------


class TestKcentrum:
    def make(self, k, m=3):
        texts = ["x^2", "x^2 - x", "2*x^2 + 1"][:m]
        weights = [1.0] * k + [0.0] * (m - k)
        return make_problem(("x",), texts, weights, ball=9.0)

    def test_pattern_required(self):
        problem = make_problem(("x",), ("x", "1 - x"), (1.0, -1.0), ball=4.0)
        with pytest.raises(PatternMismatchError):
            build_kcentrum(problem, 1)

    def test_k_must_match_pattern(self):
        problem = self.make(2)
        with pytest.raises(PatternMismatchError):
            build_kcentrum(problem, 1)

    def test_k_out_of_range(self):
        problem = self.make(2)
        with pytest.raises(LiftBuildError):
            build_kcentrum(problem, 0)
        with pytest.raises(LiftBuildError):
            build_kcentrum(problem, 4)

    def test_structure(self):
        problem = self.make(2)
        lifted = build_kcentrum(problem, 2)
        assert lifted.form == "kcentrum"
        assert lifted.form_params == (2,)
        assert len(lifted.universe) == 1 + 1 + 3
        assert len(lifted.cliques) == 3
        for clique in lifted.cliques:
            assert len(clique) == 3  # x, t, r_j
        assert putinar_structurally_bounded(lifted)
        assert running_intersection_holds(lifted.cliques)
        assert lifted.objective_den == Polynomial.constant(lifted.universe, 1.0)

    def test_k_equals_m_objective_is_plain_sum(self):
        problem = self.make(3)
        lifted = build_kcentrum(problem, 3)
        rng = np.random.default_rng(11)
        for _ in range(10):
            x = rng.uniform(-1.0, 1.0, 1)
            z = lifted_witness(problem, lifted, x)
            total = sum(f.evaluate(x) for f in problem.functions)
            assert lifted.objective_num.evaluate(z) == pytest.approx(total)

    def test_epigraph_minimization_matches_sorted_sum(self):
        # min over t of (k t + sum_j max(0, f_j - t)) equals the sum of the
        # k largest values; the minimum is attained at the k-th largest.
        rng = np.random.default_rng(5)
        for _ in range(50):
            values = rng.uniform(-3.0, 3.0, 5)
            k = int(rng.integers(1, 6))
            candidates = [
                k * t + sum(max(0.0, v - t) for v in values) for t in values
            ]
            expected = sum(sorted(values, reverse=True)[:k])
            assert min(candidates) == pytest.approx(expected, abs=1e-12)


class TestMonotone:
    def test_pattern_required(self):
        problem = make_problem(("x",), ("x", "1 - x"), (1.0, 2.0), ball=4.0)
        with pytest.raises(PatternMismatchError):
            build_monotone(problem)
        problem = make_problem(("x",), ("x", "1 - x"), (1.0, -1.0), ball=4.0)
        with pytest.raises(PatternMismatchError):
            build_monotone(problem)

    def test_structure(self):
        problem = make_problem(
            ("x",), ("x^2", "x^2 - x", "2*x^2 + 1"), (3.0, 2.0, 1.0), ball=9.0
        )
        lifted = build_monotone(problem)
        assert lifted.form == "monotone"
        assert len(lifted.universe) == 1 + 3 + 9
        assert len(lifted.cliques) == 9
        assert putinar_structurally_bounded(lifted)
        assert running_intersection_holds(lifted.cliques)

    def test_telescoping_identity(self):
        # weighted sorted sum == telescoped sums-of-largest, pointwise
        rng = np.random.default_rng(13)
        for _ in range(100):
            m = int(rng.integers(1, 7))
            values = rng.uniform(-5.0, 5.0, m)
            lam = np.sort(rng.uniform(0.0, 4.0, m))[::-1]
            ordered = np.sort(values)[::-1]
            direct = float(np.dot(lam, ordered))
            padded = np.append(lam, 0.0)
            telescoped = sum(
                (padded[k] - padded[k + 1]) * ordered[: k + 1].sum()
                for k in range(m)
            )
            assert abs(direct - telescoped) <= 1e-10 * (1.0 + abs(direct))

    def test_single_level_matches_kcentrum_witness_values(self):
        top1 = make_problem(("x",), ("x^2", "1 - x"), (1.0, 0.0), ball=4.0)
        monotone = build_monotone(top1)
        kcentrum = build_kcentrum(top1, 1)
        rng = np.random.default_rng(17)
        for _ in range(20):
            x = rng.uniform(-1.0, 1.0, 1)
            z_m = lifted_witness(top1, monotone, x)
            z_k = lifted_witness(top1, kcentrum, x)
            value_m = monotone.objective_num.evaluate(z_m)
            value_k = kcentrum.objective_num.evaluate(z_k)
            assert value_m == pytest.approx(value_k)
            assert value_m == pytest.approx(evaluate_ordered_median(top1, x))

    def test_all_ones_reproduces_plain_sum(self):
        problem = make_problem(("x",), ("x", "1 - x", "x^2"), (1.0, 1.0, 1.0), ball=4.0)
        lifted = build_monotone(problem)
        rng = np.random.default_rng(19)
        for _ in range(10):
            x = rng.uniform(-1.0, 1.0, 1)
            z = lifted_witness(problem, lifted, x)
            total = sum(f.evaluate(x) for f in problem.functions)
            assert lifted.objective_num.evaluate(z) == pytest.approx(total)


class TestTrimmed:
    def make(self, weights, m=4):
        texts = ["x^2", "x^2 - x", "2*x^2 + 1", "x + 1"][:m]
        return make_problem(("x",), texts, weights, ball=9.0)

    def test_window_identity(self):
        # sum of central values == difference of sums-of-largest, pointwise
        rng = np.random.default_rng(23)
        for _ in range(100):
            m = int(rng.integers(2, 8))
            k1 = int(rng.integers(0, m))
            k2 = int(rng.integers(0, m - k1))
            values = rng.uniform(-5.0, 5.0, m)
            ordered = np.sort(values)[::-1]
            central = ordered[k1 : m - k2].sum()
            difference = ordered[: m - k2].sum() - ordered[:k1].sum()
            assert abs(central - difference) <= 1e-10 * (1.0 + abs(central))

    def test_zero_k1_collapses_to_kcentrum(self):
        problem = self.make([1.0, 1.0, 1.0, 0.0])
        lifted = build_trimmed(problem, 0, 1)
        assert lifted.form == "kcentrum"
        assert lifted.form_params == (3,)
        reference = build_kcentrum(problem, 3)
        assert lifted.objective_num == _rehomed(reference.objective_num, lifted)
        assert len(lifted.universe) == len(reference.universe)

    def test_zero_trim_is_plain_sum(self):
        problem = self.make([1.0, 1.0, 1.0, 1.0])
        lifted = build_trimmed(problem, 0, 0)
        assert lifted.form == "kcentrum"
        assert lifted.form_params == (4,)

    def test_structure(self):
        problem = self.make([0.0, 1.0, 1.0, 0.0])
        lifted = build_trimmed(problem, 1, 1)
        assert lifted.form == "trimmed"
        assert lifted.form_params == (1, 1)
        assert len(lifted.universe) == 1 + 1 + 4 + 4
        assert len(lifted.cliques) == 4
        for clique in lifted.cliques:
            assert len(clique) == 4  # x, t, r_j, v_j
        assert putinar_structurally_bounded(lifted)
        assert running_intersection_holds(lifted.cliques)
        # selector sum is an equality crossing cliques
        v_ids = dict(lifted.variable_groups)["v"]
        crossing = [
            h
            for h in lifted.equality_constraints
            if set(h.variables()) == set(v_ids)
        ]
        assert len(crossing) == 1

    def test_empty_window_rejected(self):
        problem = self.make([0.0, 1.0, 1.0, 0.0])
        with pytest.raises(EmptyWindowError):
            build_trimmed(problem, 2, 2)

    def test_negative_counts_rejected(self):
        problem = self.make([0.0, 1.0, 1.0, 0.0])
        with pytest.raises(LiftBuildError):
            build_trimmed(problem, -1, 1)

    def test_pattern_must_match(self):
        problem = self.make([0.0, 1.0, 1.0, 0.0])
        with pytest.raises(PatternMismatchError):
            build_trimmed(problem, 2, 1)


def _rehomed(poly, lifted):
    return Polynomial(lifted.universe, poly.terms)


# ---------------------------------------------------------------------------
# Dispatcher
# ---------------------------------------------------------------------------


class TestBuildAuto:
    def test_top_k_routes_to_kcentrum(self):
        problem = make_problem(("x",), ("x", "1 - x"), (1.0, 1.0), ball=4.0)
        assert build_auto(problem).form == "kcentrum"

    def test_window_routes_to_trimmed(self):
        problem = make_problem(("x",), ("x", "1 - x", "x^2"), (0.0, 1.0, 0.0), ball=4.0)
        lifted = build_auto(problem)
        assert lifted.form == "trimmed"
        assert lifted.form_params == (1, 1)

    def test_monotone_routes_to_telescoping(self):
        problem = make_problem(("x",), ("x", "1 - x"), (3.0, 1.0), ball=4.0)
        assert build_auto(problem).form == "monotone"

    def test_generic_routes_to_general(self):
        problem = make_problem(("x",), ("x", "1 - x"), (1.0, -1.0), ball=4.0)
        assert build_auto(problem).form == "general"

    def test_polynomial_weights_route_to_general(self):
        universe = VariableUniverse(["x"])
        entries = (parse("1 + x", universe), parse("1", universe))
        functions = tuple(
            RationalFunction.from_polynomial(parse(t, universe)) for t in ("x", "1 - x")
        )
        problem = OmrfProblem(
            functions,
            LambdaWeights(entries),
            SemialgebraicSet(universe),
            4.0,
        )
        assert build_auto(problem).form == "general"


# ---------------------------------------------------------------------------
# Lift soundness: witness feasibility and objective agreement on >= 100
# random (problem, point) pairs across all four builders.
# ---------------------------------------------------------------------------


class TestLiftSoundness:
    def run_pattern(self, pattern, builder, count, seed):
        rng = np.random.default_rng(seed)
        for _ in range(count):
            problem = random_problem(rng, pattern)
            lifted = builder(problem)
            point = random_point(rng, problem)
            assert_lift_sound(problem, lifted, point)
            assert putinar_structurally_bounded(lifted)
            assert running_intersection_holds(lifted.cliques)

    def test_general(self):
        self.run_pattern("general", build_general_lift, 40, 101)

    def test_kcentrum(self):
        self.run_pattern(
            "kcentrum", lambda p: build_kcentrum(p, p.weights.top_k()), 20, 102
        )

    def test_monotone(self):
        self.run_pattern("monotone", build_monotone, 20, 103)

    def test_trimmed(self):
        self.run_pattern(
            "trimmed", lambda p: build_trimmed(p, *p.weights.trimmed_window()), 20, 104
        )

    def test_denominator_flag_propagates(self):
        universe = VariableUniverse(["x"])
        f = RationalFunction(parse("x", universe), parse("1 + x^2", universe))
        problem = OmrfProblem(
            (f,),
            LambdaWeights.constants(universe, [1.0]),
            SemialgebraicSet(universe),
            4.0,
            denominators_positive=False,
        )
        lifted = build_general_lift(problem)
        assert not lifted.denominators_positive
