import numpy as np
import pytest

from app.exceptions import DimensionError, InputBoundsError
from app.models.system import LinearSystem
from app.services.dynamics_service import (
    double_integrator,
    integrator,
    reachable_bounds,
    rollout,
    state_violations,
)


class TestRollout:
    def test_integrator_accumulates_inputs(self):
        signal = rollout(integrator(x0=[1.0], input_limit=1.0), [1, -1, 1, 1])
        assert signal.horizon == 4
        np.testing.assert_allclose(signal.row("x1"), [1, 2, 1, 2, 3])

    def test_variable_names(self):
        signal = rollout(integrator(), [0.5], variables={"x": 0})
        assert signal.row("x")[1] == 0.5
        assert signal.row("x1")[1] == 0.5

    def test_double_integrator_constant_acceleration(self):
        sys = double_integrator(dt=0.1)
        u = np.tile([1.0, -2.0], (10, 1))
        signal = rollout(sys, u)
        # p = a t^2 / 2 and v = a t after one second
        np.testing.assert_allclose(signal.values[:, -1], [0.5, 1.0, -1.0, -2.0], atol=1e-12)

    def test_zero_steps(self):
        signal = rollout(integrator(x0=[2.0]), np.zeros((0, 1)))
        assert signal.horizon == 0
        assert signal.row("x1")[0] == 2.0

    def test_input_outside_box(self):
        with pytest.raises(InputBoundsError):
            rollout(integrator(input_limit=1.0), [0.5, 1.5])

    def test_input_shape(self):
        with pytest.raises(DimensionError):
            rollout(double_integrator(dt=0.1), [1.0, 2.0])

    def test_state_box_is_reported_not_clamped(self, caplog):
        sys = integrator(input_limit=2.0)
        sys = LinearSystem.build(sys.A, sys.B, [0.0], state_bounds=[(-1, 1)], input_bounds=[(-2, 2)])
        signal = rollout(sys, [2.0, 0.0])
        assert signal.row("x1")[1] == 2.0
        assert state_violations(sys, signal.values) == [(1, 0), (2, 0)]
        assert "leaves the state box" in caplog.text


class TestReachableBounds:
    def test_integrator_grows_by_input_limit(self):
        lo, hi = reachable_bounds(integrator(x0=[1.0], input_limit=1.0), 3)
        np.testing.assert_allclose(lo[:, 0], [1, 0, -1, -2])
        np.testing.assert_allclose(hi[:, 0], [1, 2, 3, 4])

    def test_state_box_caps_bounds(self):
        sys = LinearSystem.build(np.eye(1), np.eye(1), [0.0], state_bounds=[(-2, 2)], input_bounds=[(-1, 1)])
        lo, hi = reachable_bounds(sys, 4)
        np.testing.assert_allclose(hi[:, 0], [0, 1, 2, 2, 2])
        np.testing.assert_allclose(lo[:, 0], [0, -1, -2, -2, -2])

    def test_unbounded_inputs(self):
        lo, hi = reachable_bounds(integrator(), 2)
        assert lo[0, 0] == hi[0, 0] == 0
        assert lo[1, 0] == -np.inf and hi[2, 0] == np.inf

    def test_double_integrator_contains_rollout(self):
        sys = double_integrator(dt=0.5, input_limit=1.0)
        lo, hi = reachable_bounds(sys, 6)
        assert np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))
        signal = rollout(sys, np.tile([1.0, -1.0], (6, 1)))
        assert np.all(signal.values.T >= lo - 1e-12) and np.all(signal.values.T <= hi + 1e-12)

    def test_negative_horizon(self):
        with pytest.raises(DimensionError):
            reachable_bounds(integrator(), -1)


class TestLinearSystem:
    def test_unbounded_sides(self):
        sys = LinearSystem.build(np.eye(2), np.eye(2), [0, 0], state_bounds=[(None, 3), (-1, None)])
        assert sys.x_lo[0] == -np.inf and sys.x_hi[0] == 3
        assert sys.x_lo[1] == -1 and sys.x_hi[1] == np.inf

    def test_input_magnitude(self):
        assert integrator(input_limit=2.5).input_magnitude == 2.5
        assert integrator().input_magnitude == 1.0

    @pytest.mark.parametrize("kwargs", [
        dict(A=np.eye(2), B=np.ones((3, 1)), x0=[0, 0]),
        dict(A=np.ones((2, 3)), B=np.ones((2, 1)), x0=[0, 0]),
        dict(A=np.eye(2), B=np.ones((2, 1)), x0=[0, 0, 0]),
        dict(A=np.eye(1), B=np.eye(1), x0=[0], state_bounds=[(2, 1)]),
        dict(A=np.eye(1), B=np.eye(1), x0=[0], input_bounds=[(0, 1), (0, 1)]),
        dict(A=np.eye(1), B=np.eye(1), x0=[0], dt=0.0),
    ])
    def test_rejects_inconsistent_shapes(self, kwargs):
        with pytest.raises(DimensionError):
            LinearSystem.build(**kwargs)

    def test_initial_state_outside_box_is_allowed(self, caplog):
        sys = LinearSystem.build(np.eye(1), np.eye(1), [5.0], state_bounds=[(-1, 1)])
        assert sys.x0[0] == 5.0
        assert "outside the state box" in caplog.text

    def test_double_integrator_matrices(self):
        sys = double_integrator(dt=0.5)
        assert sys.A.shape == (4, 4) and sys.B.shape == (4, 2)
        assert sys.A[0, 1] == 0.5 and sys.B[0, 0] == 0.125 and sys.B[1, 0] == 0.5
        assert sys.A[2, 3] == 0.5 and sys.B[3, 1] == 0.5
        np.testing.assert_array_equal(sys.u_hi, [2.2, 2.2])
