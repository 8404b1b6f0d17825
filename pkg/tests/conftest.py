from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

CORPUS = Path(__file__).resolve().parents[1] / "src" / "riesz" / "corpus"


@pytest.fixture
def corpus():
    return CORPUS
