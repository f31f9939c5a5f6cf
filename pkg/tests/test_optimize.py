import numpy as np
import pytest

from matchcast.optimize import OptimSettings, minimize


def quadratic(center):
    def objective(x):
        d = x - center
        return float(d @ d), 2.0 * d

    return objective


def rosenbrock(x):
    a, b = 1.0, 100.0
    f = (a - x[0]) ** 2 + b * (x[1] - x[0] ** 2) ** 2
    g = np.array(
        [
            -2 * (a - x[0]) - 4 * b * x[0] * (x[1] - x[0] ** 2),
            2 * b * (x[1] - x[0] ** 2),
        ]
    )
    return float(f), g


class TestMinimize:
    def test_quadratic_exact(self):
        center = np.array([1.5, -2.0, 0.25])
        result = minimize(quadratic(center), np.zeros(3))
        assert result.converged
        assert result.x == pytest.approx(center, abs=1e-8)
        assert result.grad_norm <= 1e-8

    def test_already_optimal_takes_zero_iterations(self):
        center = np.array([0.5, 0.5])
        result = minimize(quadratic(center), center.copy())
        assert result.converged
        assert result.iterations == 0

    def test_rosenbrock_valley(self):
        result = minimize(rosenbrock, np.array([-1.2, 1.0]), OptimSettings(max_iter=500))
        assert result.converged
        assert result.x == pytest.approx([1.0, 1.0], abs=1e-6)

    def test_box_clamp_flags_active_bound(self):
        # Unconstrained minimum at 5, box at 2: the solution pins to the wall.
        result = minimize(
            quadratic(np.array([5.0])), np.zeros(1), OptimSettings(bound=2.0)
        )
        assert result.x == pytest.approx([2.0])
        assert result.at_bound == (0,)
        assert result.converged  # projected gradient vanishes at the face

    def test_iteration_cap_respected(self):
        result = minimize(rosenbrock, np.array([-1.2, 1.0]), OptimSettings(max_iter=3))
        assert result.iterations <= 3
        assert not result.converged

    def test_deterministic(self):
        a = minimize(rosenbrock, np.array([-1.2, 1.0]))
        b = minimize(rosenbrock, np.array([-1.2, 1.0]))
        assert np.array_equal(a.x, b.x)
        assert a.iterations == b.iterations

    def test_bad_settings_rejected(self):
        with pytest.raises(ValueError):
            OptimSettings(tol=0.0)
