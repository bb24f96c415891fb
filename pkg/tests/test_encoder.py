"""
MILP building blocks checked without a solver: a hand-made assignment either
satisfies every row (residual 0) or it does not.
"""
import itertools

import numpy as np
import pytest

from app.exceptions import DimensionError, EncodingError, HorizonError
from app.models.formula import And, Or, Predicate, Tolerances
from app.models.milp import EncodingParams, LinExpr, MilpModel, VarKind
from app.services.dynamics_service import integrator
from app.services.encoder_service import (
    EPS_PER_BIG_M,
    MIN_EPS,
    RELAXATION,
    TIME_ROBUSTNESS_LEFT,
    TIME_ROBUSTNESS_RIGHT,
    MilpEncoder,
    encode_boolean,
    encode_counters,
    encode_dynamics,
    encode_extremum,
    encode_predicate,
    predicate_constants,
)
from app.services.monitor_service import counters
from app.services.parser_service import parse
from app.services.scenario_service import Scenario, ScenarioService, load_scenario

EXACT = EncodingParams(big_m=100.0, eps=1e-3, margin=0.0)


def residual(model: MilpModel, assignment) -> float:
    return model.max_residual({model.index_of(name): value for name, value in assignment.items()})


def ge(threshold, relation=">="):
    return Predicate((("x", 1.0),), relation, threshold)


class TestDynamics:
    def model(self, x0=0.0, state_bounds=None):
        sys = integrator(x0=[x0], input_limit=1.0)
        sys = type(sys).build(sys.A, sys.B, [x0], state_bounds, [(-1.0, 1.0)])
        model = MilpModel()
        encode_dynamics(model, sys, 4)
        return model

    def assignment(self, xs, us):
        values = {f"x0_{t}": x for t, x in enumerate(xs)}
        values.update({f"u0_{t}": u for t, u in enumerate(us)})
        return values

    def test_integrator_ramp_is_feasible(self):
        assert residual(self.model(), self.assignment([0, 1, 2, 3, 4], [1, 1, 1, 1])) == 0

    def test_states_follow_inputs(self):
        assert residual(self.model(), self.assignment([0, 1, 3, 4, 5], [1, 1, 1, 1])) > 0

    def test_input_box(self):
        assert residual(self.model(), self.assignment([0, 2, 3, 4, 5], [2, 1, 1, 1])) > 0

    def test_initial_state_outside_box_has_no_feasible_point(self):
        model = self.model(x0=5.0, state_bounds=[(-1.0, 1.0)])
        assert residual(model, self.assignment([5, 5, 5, 5, 5], [0, 0, 0, 0])) > 0
        assert residual(model, self.assignment([1, 1, 1, 1, 1], [0, 0, 0, 0])) > 0


class TestPredicate:
    def model(self, predicate):
        model = MilpModel()
        x = model.continuous("x", None, None)
        encode_predicate(model, predicate, [x], {"x": 0}, EXACT, "z")
        return model

    @pytest.mark.parametrize("x, z, ok", [
        (3.0, 1, True), (3.0, 0, False),
        (1.0, 0, True), (1.0, 1, False),
        (2.0, 1, True), (2.0, 0, False),
    ])
    def test_non_strict(self, x, z, ok):
        assert (residual(self.model(ge(2.0)), {"x": x, "z": z}) == 0) == ok

    @pytest.mark.parametrize("x, z, ok", [
        (3.0, 1, True), (2.0, 1, False), (2.0, 0, True), (1.0, 0, True),
    ])
    def test_strict(self, x, z, ok):
        assert (residual(self.model(ge(2.0, ">")), {"x": x, "z": z}) == 0) == ok

    def test_less_equal_orientation(self):
        model = self.model(ge(-1.0, "<="))
        assert residual(model, {"x": -2.0, "z": 1}) == 0
        assert residual(model, {"x": 0.0, "z": 0}) == 0
        assert residual(model, {"x": 0.0, "z": 1}) > 0

    def test_margin_widens_violated_side_only(self):
        model = MilpModel()
        x = model.continuous("x", None, None)
        encode_predicate(model, ge(2.0), [x], {"x": 0}, EncodingParams(big_m=100.0, eps=1e-3, margin=0.5), "z")
        assert residual(model, {"x": 2.0, "z": 1}) == 0
        assert residual(model, {"x": 1.7, "z": 1}) > 0
        assert residual(model, {"x": 1.7, "z": 0}) > 0
        assert residual(model, {"x": 1.4, "z": 0}) == 0

    def test_strict_margin_keeps_threshold_violated(self):
        model = MilpModel()
        x = model.continuous("x", None, None)
        encode_predicate(model, ge(2.0, ">"), [x], {"x": 0}, EncodingParams(big_m=100.0, eps=1e-3, margin=0.5), "z")
        assert residual(model, {"x": 2.0, "z": 0}) == 0
        assert residual(model, {"x": 2.2, "z": 0}) > 0
        assert residual(model, {"x": 2.2, "z": 1}) > 0
        assert residual(model, {"x": 2.6, "z": 1}) == 0

    @pytest.mark.parametrize("relation, z", [(">=", 1), ("<=", 1), (">", 0), ("<", 0)])
    def test_threshold_value_is_never_excluded(self, relation, z):
        params = EncodingParams(big_m=100.0, eps=1e-6, margin=1e-4)
        model = MilpModel()
        x = model.continuous("x", None, None)
        encode_predicate(model, ge(3.0, relation), [x], {"x": 0}, params, "z")
        assert residual(model, {"x": 3.0, "z": z}) == 0


class TestPredicateConstants:
    def test_tightened_from_state_box(self):
        big_m, eps = predicate_constants(ge(2.0), np.array([-10.0]), np.array([10.0]), {"x": 0},
                                         EncodingParams(big_m=1e6, eps=1e-3))
        assert big_m == pytest.approx(13.001)
        assert eps == 1e-3

    def test_eps_follows_big_m(self):
        big_m, eps = predicate_constants(ge(0.0), np.array([-1e4]), np.array([1e4]), {"x": 0},
                                         EncodingParams(big_m=1e6, eps=1e-6))
        assert eps == pytest.approx(EPS_PER_BIG_M * 10001.0)
        assert big_m == pytest.approx(1e4 + eps + 1.0)

    def test_strict_rows_fit_inside_big_m(self):
        params = EncodingParams(big_m=1e6, eps=1e-3, margin=0.5)
        big_m, eps = predicate_constants(ge(2.0, ">"), np.array([0.0]), np.array([4.0]), {"x": 0}, params)
        # z = 0 must allow p = 2 and z = 1 must allow p = -2
        assert big_m >= 2.0
        assert big_m >= 2.0 + eps + params.margin

    @pytest.mark.parametrize("lo, hi", [(None, None), (np.array([-np.inf]), np.array([np.inf]))])
    def test_unbounded_range_keeps_configured_value(self, lo, hi):
        assert predicate_constants(ge(2.0), lo, hi, {"x": 0}, EXACT) == (100.0, 1e-3)

    def test_eps_floor(self):
        params = EncodingParams(big_m=100.0, eps=1e-9)
        assert predicate_constants(ge(2.0), None, None, {"x": 0}, params) == (100.0, MIN_EPS)

    def test_too_small(self):
        with pytest.raises(EncodingError):
            predicate_constants(ge(2.0), np.array([-10.0]), np.array([10.0]), {"x": 0}, EncodingParams(big_m=5.0))

    def test_unbound_variable(self):
        with pytest.raises(DimensionError):
            predicate_constants(ge(2.0), np.zeros(1), np.zeros(1), {"y": 0}, EXACT)

    @pytest.mark.parametrize("t, expected", [(0, 3.0), (4, 7.0)])
    def test_encoder_tightens_per_instant(self, t, expected):
        encoder = MilpEncoder(integrator(x0=[0.0], input_limit=1.0), parse("F[0,4](x >= 3)"), 8, {"x": 0},
                              params=EncodingParams(big_m=1e4, eps=1e-6))
        model = encoder.build()
        z, x = model.index_of(f"z0_{t}"), model.index_of(f"x0_{t}")
        rows = [c for c in model.constraints if z in c.terms and x in c.terms]
        # reach of x - 3 after t unit steps from 0, plus eps and one
        eps = EPS_PER_BIG_M * (expected + 1.0)
        assert len(rows) == 2
        assert all(abs(c.terms[z]) == pytest.approx(expected + eps + 1.0) for c in rows)


@pytest.mark.parametrize("kind, truth", [(And, all), (Or, any)])
def test_boolean_truth_table(kind, truth):
    model = MilpModel()
    children = [model.binary(f"c{i}") for i in range(3)]
    encode_boolean(model, kind, children, "z")
    for bits in itertools.product((0, 1), repeat=3):
        for z in (0, 1):
            values = {f"c{i}": b for i, b in enumerate(bits)}
            values["z"] = z
            assert (residual(model, values) == 0) == (z == int(truth(bits)))


def test_boolean_single_child_is_passed_through():
    model = MilpModel()
    child = model.binary("c")
    assert encode_boolean(model, And, [child], "z") is child
    assert len(model.variables) == 1


class TestCounters:
    @pytest.mark.parametrize("bits", [(1, 1, 0, 1), (0, 0, 0), (1, 0, 1, 1, 0, 0)])
    def test_monitor_values_satisfy_chain(self, bits):
        model = MilpModel()
        zs = {t: model.binary(f"z{t}") for t in range(len(bits))}
        handles = encode_counters(model, zs, 0, len(bits) - 1, "a")
        expected = counters(bits)
        values = {f"z{t}": b for t, b in enumerate(bits)}
        for key, series in handles.items():
            for t, var in series.items():
                values[var.name] = expected.at(key, t)
        assert residual(model, values) == 0

        values[handles["l1"][0].name] += 1
        assert residual(model, values) > 0

    def test_initial_run(self):
        bits = (0, 0, 1)
        model = MilpModel()
        zs = {t: model.binary(f"z{t}") for t in range(4, 7)}
        handles = encode_counters(model, zs, 4, 6, "a", series=("l0",), l0_init=-2)
        expected = counters(bits, start=4, l0_init=-2)
        values = {f"z{t}": b for t, b in zip(range(4, 7), bits)}
        values.update({var.name: expected.at("l0", t) for t, var in handles["l0"].items()})
        assert residual(model, values) == 0


class TestExtremum:
    def setup_model(self, maximum):
        model = MilpModel()
        a, b = model.continuous("a", 0, 5), model.continuous("b", 0, 5)
        y = encode_extremum(model, [a, b], 0.0, 5.0, "y", maximum=maximum)
        return model, y

    def test_minimum(self):
        model, _ = self.setup_model(maximum=False)
        assert residual(model, {"a": 2, "b": 4, "y": 2, "y_s0": 1, "y_s1": 0}) == 0
        assert residual(model, {"a": 2, "b": 4, "y": 1, "y_s0": 1, "y_s1": 0}) > 0
        assert residual(model, {"a": 2, "b": 4, "y": 3, "y_s0": 0, "y_s1": 1}) > 0

    def test_maximum(self):
        model, _ = self.setup_model(maximum=True)
        assert residual(model, {"a": 2, "b": 4, "y": 4, "y_s0": 0, "y_s1": 1}) == 0
        assert residual(model, {"a": 2, "b": 4, "y": 5, "y_s0": 0, "y_s1": 1}) > 0

    def test_single_candidate_needs_no_selector(self):
        model = MilpModel()
        a = model.continuous("a")
        assert encode_extremum(model, [a], 0.0, 1.0, "y").terms == {a.index: 1.0}
        assert len(model.variables) == 1


class TestMilpModel:
    def test_linear_expressions(self):
        model = MilpModel()
        a, b = model.continuous("a"), model.continuous("b")
        expr = 2 * a - (b - 3) / 2 + 1
        assert expr.terms == {a.index: 2.0, b.index: -0.5}
        assert expr.constant == 2.5
        assert expr.evaluate({a.index: 1.0, b.index: 4.0}) == 2.5

    def test_nonlinear_product_is_rejected(self):
        model = MilpModel()
        a, b = model.continuous("a"), model.continuous("b")
        with pytest.raises(EncodingError):
            LinExpr.lift(a) * b

    @pytest.mark.parametrize("name", ["1x", "e1", "x-y", ""])
    def test_invalid_names(self, name):
        with pytest.raises(EncodingError):
            MilpModel().continuous(name)

    def test_duplicate_name(self):
        model = MilpModel()
        model.binary("z")
        with pytest.raises(EncodingError):
            model.binary("z")

    def test_constant_rows(self):
        model = MilpModel()
        assert model.add_le(LinExpr(constant=1.0), 2.0) is None
        with pytest.raises(EncodingError):
            model.add_ge(LinExpr(constant=1.0), 2.0)

    def test_counts(self):
        model = MilpModel()
        model.binary("z")
        model.integer("k", 0, 3)
        a = model.continuous("a")
        model.add_le(a, 1)
        assert model.counts() == {"continuous": 1, "binary": 1, "integer": 1, "constraints": 1, "variables": 3}
        assert model.integer_count == 2


class TestMilpEncoder:
    def encoder(self, spec="F[1,2](x >= 0.5)", horizon=6, objective=RELAXATION, **kwargs):
        return MilpEncoder(integrator(x0=[0.0], input_limit=1.0), parse(spec), horizon, {"x": 0},
                           objective=objective, params=EXACT, **kwargs)

    @pytest.mark.parametrize("objective", [RELAXATION, TIME_ROBUSTNESS_RIGHT, TIME_ROBUSTNESS_LEFT])
    def test_build(self, objective):
        encoder = self.encoder(objective=objective)
        model = encoder.build()
        model.check()
        assert model.metadata["objective"] == objective
        assert model.metadata["horizon"] == 6
        assert encoder.summary.counts == model.counts()
        assert model.counts()["binary"] > 0

    def test_relaxation_sites(self):
        encoder = self.encoder("F[1,2](x >= 0.5) & G[0,3](x <= 2.5)")
        encoder.build()
        assert [(s.path, s.kind, s.instant) for s in encoder.sites] == [
            ((0,), "finally", 0), ((1,), "globally", 0)
        ]

    def test_nested_sites_get_one_handle_per_instant(self):
        encoder = self.encoder("G[0,2](F[0,1](x >= 0.5))", horizon=8)
        encoder.build()
        assert [s.instant for s in encoder.sites] == [0, 1, 2]

    def test_relaxation_model_skips_unreachable_instants(self):
        model = self.encoder("F[1,2](x >= 0.5)", horizon=20).build()
        assert not any(v.name == "z0_10" for v in model.variables)

    def test_horizon_is_extended(self, caplog):
        encoder = self.encoder("F[2,5](x >= 0.5)", horizon=6)
        assert encoder.horizon == 9
        assert "Extending mission horizon" in caplog.text

    def test_horizon_extension_can_be_disabled(self):
        with pytest.raises(HorizonError):
            self.encoder("F[2,5](x >= 0.5)", horizon=6, auto_extend=False)

    def test_tighter_tolerance_needs_less_horizon(self):
        encoder = MilpEncoder(integrator(), parse("F[2,5](x >= 0.5)"), 6, {"x": 0},
                              tolerances=Tolerances(gamma_f=0.25))
        assert encoder.horizon == 6

    def test_unknown_objective(self):
        with pytest.raises(EncodingError):
            self.encoder(objective="space_robustness")

    def test_variable_outside_state(self):
        with pytest.raises(DimensionError):
            MilpEncoder(integrator(), parse("F[0,1](x >= 0)"), 4, {"x": 1})

    def test_unbound_formula_variable(self):
        with pytest.raises(DimensionError):
            self.encoder("F[0,1](y >= 0)").build()

    def test_input_grid_binaries(self):
        encoder = self.encoder()
        encoder.build()
        before = encoder.model.counts()["binary"]
        encoder.restrict_inputs_to_grid([[-1, 0, 1]])
        assert encoder.model.counts()["binary"] == before + 3 * encoder.horizon
        assert encoder.model.metadata["grid"] == [[-1.0, 0.0, 1.0]]

    def test_input_grid_dimension(self):
        encoder = self.encoder()
        encoder.build()
        with pytest.raises(DimensionError):
            encoder.restrict_inputs_to_grid([[0, 1], [0, 1]])

    def test_tie_break_adds_input_magnitudes(self):
        encoder = MilpEncoder(integrator(input_limit=2.0), parse("F[1,2](x >= 0.5)"), 6, {"x": 0},
                              params=EncodingParams(big_m=100.0, eps=1e-3, tie_break_weight=1e-4))
        model = encoder.build()
        magnitudes = [v for v in model.variables if v.name.startswith("absu")]
        assert len(magnitudes) == 6
        assert model.objective.terms[magnitudes[0].index] == pytest.approx(1e-4 / (1 * 6 * 2.0))
        assert model.variables[encoder.root.index].kind == VarKind.CONTINUOUS


def test_relaxation_model_is_smaller_than_time_robustness(scenarios_dir):
    scenario = Scenario.from_schema(load_scenario(scenarios_dir / "phi_case.json"))
    service = ScenarioService(scenario)
    relaxation = service.encoder(RELAXATION).model
    robustness = service.encoder(TIME_ROBUSTNESS_RIGHT).model
    assert relaxation.integer_count < robustness.integer_count
    assert len(relaxation.constraints) < len(robustness.constraints)
