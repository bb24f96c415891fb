import sys
from pathlib import Path

import pytest

# Add backend to path
backend_dir = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(backend_dir))

from app.config import settings  # noqa: E402
from app.services.solver_service import backend_available, backend_from_settings  # noqa: E402

SCENARIOS = backend_dir / "scenarios"


@pytest.fixture
def scenarios_dir() -> Path:
    return SCENARIOS


@pytest.fixture
def backend():
    """Configured MILP backend; tests needing it are skipped when it is missing."""
    config = backend_from_settings(keep_files=False)
    if not backend_available(config):
        pytest.skip(f"MILP backend '{config.name}' is not available")
    return config


@pytest.fixture(autouse=True)
def isolated_output(tmp_path, monkeypatch):
    """Keep artifacts (and retained failed LP files) out of the working tree."""
    monkeypatch.setattr(settings, "OUTPUT_DIR", str(tmp_path / "out"))
    return tmp_path / "out"


@pytest.fixture(params=["cbc", "highs"])
def each_backend(request):
    """Every MILP backend in turn, skipping the ones that are not installed."""
    config = backend_from_settings(name=request.param, keep_files=False)
    if not backend_available(config):
        pytest.skip(f"MILP backend '{config.name}' is not available")
    return config
