from pathlib import Path

import pytest

from app.config import settings
from app.exceptions import EncodingError, SolverError
from app.models.milp import MilpModel, Sense
from app.models.solution import BackendConfig, SolveStatus
from app.services import solver_service
from app.services.solver_service import export_lp, format_coefficient, parse_cbc_solution


def knapsack() -> MilpModel:
    """max 3a + 2b + c  s.t.  a + b + c <= 2, a, b binary, 0 <= c <= 1.5."""
    model = MilpModel(name="knapsack")
    a, b = model.binary("a"), model.binary("b")
    c = model.continuous("c", 0.0, 1.5)
    model.add_le(a + b + c, 2.0, name="capacity")
    model.set_objective(3 * a + 2 * b + c, Sense.MAXIMIZE)
    return model


class TestExportLp:
    def test_sections(self):
        text = export_lp(knapsack())
        lines = text.splitlines()
        assert lines[0] == "\\ Model knapsack"
        assert lines[1] == "Maximize"
        assert lines[2] == " obj: 3 a + 2 b + 1 c"
        assert " capacity: 1 a + 1 b + 1 c" in lines
        assert "   <= 2" in lines
        assert " 0 <= c <= 1.5" in lines
        assert lines[-2:] == [" a b", "End"]
        assert "Binary" in lines

    def test_deterministic(self):
        assert export_lp(knapsack()) == export_lp(knapsack())

    def test_minimize_only_negates(self):
        text = export_lp(knapsack(), minimize_only=True)
        assert "Minimize" in text.splitlines()
        assert " obj: - 3 a - 2 b - 1 c" in text.splitlines()

    def test_bounds(self):
        model = MilpModel()
        free = model.continuous("f", None, None)
        upper = model.continuous("g", None, 4.0)
        fixed = model.continuous("h", 2.0, 2.0)
        k = model.integer("k", 0, 5)
        model.set_objective(free + upper + fixed + k)
        lines = export_lp(model).splitlines()
        assert " f free" in lines
        assert " -inf <= g <= 4" in lines
        assert " h = 2" in lines
        assert "General" in lines and " k" in lines

    def test_long_rows_wrap(self):
        model = MilpModel()
        xs = [model.continuous(f"v{i}") for i in range(14)]
        model.add_le(sum(xs[1:], xs[0] + 0), 1.0, name="wide")
        model.set_objective(xs[0])
        lines = export_lp(model).splitlines()
        start = lines.index(" wide: 1 v0 + 1 v1 + 1 v2 + 1 v3 + 1 v4 + 1 v5")
        assert lines[start + 1].startswith("   + 1 v6")
        assert lines[start + 3] == "   <= 1"

    def test_empty_objective(self):
        model = MilpModel()
        model.continuous("a")
        with pytest.raises(EncodingError):
            export_lp(model)


@pytest.mark.parametrize("value, text", [
    (2.0, "2"), (-3.0, "-3"), (0.5, "0.5"), (1e-6, "1e-06"), (1e20, "1e+20"),
])
def test_format_coefficient(value, text):
    assert format_coefficient(value) == text


class TestParseCbcSolution:
    def test_optimal(self):
        text = (
            "Optimal - objective value -5.00000000\n"
            "      0 a                      1                       0\n"
            "      1 b                      1                       0\n"
        )
        solution = parse_cbc_solution(text, knapsack())
        assert solution.status == SolveStatus.OPTIMAL
        assert solution.values == {0: 1.0, 1: 1.0, 2: 0.0}

    def test_infeasible(self):
        solution = parse_cbc_solution("Infeasible - objective value 0.00000000\n", knapsack())
        assert solution.status == SolveStatus.INFEASIBLE
        assert not solution.has_values

    def test_integer_infeasible(self):
        assert parse_cbc_solution("Integer infeasible - objective value 0\n", knapsack()).status == \
            SolveStatus.INFEASIBLE

    def test_stopped_on_time_with_incumbent(self):
        text = "Stopped on time - objective value -4.00000000\n      0 a  1  0\n"
        solution = parse_cbc_solution(text, knapsack())
        assert solution.status == SolveStatus.TIMEOUT
        assert solution.values[0] == 1.0

    def test_stopped_without_incumbent(self):
        text = "Stopped on time (no integer solution - continuous used) - objective value -5\n      0 a  0.5  0\n"
        solution = parse_cbc_solution(text, knapsack())
        assert solution.status == SolveStatus.TIMEOUT
        assert not solution.has_values

    def test_flagged_rows_and_unknown_columns(self):
        text = "Optimal - objective value -3\n**    0 a  1  0\n      7 helper  2  0\n"
        solution = parse_cbc_solution(text, knapsack())
        assert solution.values[0] == 1.0
        assert len(solution.values) == 3

    @pytest.mark.parametrize("text", ["", "Banana - objective value 0\n", "Optimal\n   0 a  x  0\n"])
    def test_malformed(self, text):
        with pytest.raises(SolverError):
            parse_cbc_solution(text, knapsack())


class TestBackendConfig:
    def test_overrides(self):
        config = solver_service.backend_from_settings(name="highs", time_limit=5.0, keep_files=None)
        assert config.name == "highs" and config.time_limit == 5.0

    @pytest.mark.parametrize("kwargs", [dict(name="gurobi"), dict(time_limit=0), dict(mip_gap=-1)])
    def test_rejects(self, kwargs):
        with pytest.raises(SolverError):
            BackendConfig(**kwargs)

    def test_missing_cbc_executable(self):
        assert not solver_service.backend_available(BackendConfig(executable="/nonexistent/cbc"))



class TestFailedModelRetention:
    def test_each_failure_keeps_its_own_file(self, tmp_path):
        lp = tmp_path / "model.lp"
        lp.write_text(export_lp(knapsack()))
        first = solver_service._retain(lp, BackendConfig())
        second = solver_service._retain(lp, BackendConfig())
        assert first != second
        for kept in (first, second):
            assert Path(kept).parent == Path(settings.OUTPUT_DIR)
            assert Path(kept).read_text() == lp.read_text()

    def test_kept_work_dir_is_reused(self, tmp_path):
        lp = tmp_path / "model.lp"
        lp.write_text("")
        assert solver_service._retain(lp, BackendConfig(keep_files=True)) == str(lp)

    def test_missing_file(self, tmp_path):
        assert solver_service._retain(tmp_path / "absent.lp", BackendConfig()) is None

@pytest.mark.solver
class TestSolve:
    def test_knapsack(self, backend):
        solution = solver_service.solve(knapsack(), backend)
        assert solution.status == SolveStatus.OPTIMAL
        assert solution.objective == pytest.approx(5.0)
        assert solution.values[0] == 1.0 and solution.values[1] == 1.0
        assert solution.values[2] == pytest.approx(0.0, abs=1e-6)

    def test_infeasible(self, backend):
        model = MilpModel()
        a = model.binary("a")
        model.add_ge(a, 0.5)
        model.add_le(a, 0.25)
        model.set_objective(a)
        assert solver_service.solve(model, backend).status == SolveStatus.INFEASIBLE

    def test_minimization_with_integer(self, backend):
        model = MilpModel()
        k = model.integer("k", 0, 10)
        model.add_ge(2 * k, 5.0)
        model.set_objective(k)
        solution = solver_service.solve(model, backend)
        assert solution.values[0] == 3.0
        assert solution.objective == pytest.approx(3.0)
