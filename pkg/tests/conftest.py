import numpy as np
import pytest
from hypothesis import settings

from maskshapelets.dataset import TimeSeriesDataset

# numba compiles on first call, which would trip hypothesis deadlines
settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_dataset(rng, n=12, V=3, Q=15, C=3, labels=None):
    labels = labels if labels is not None else [c % C + 1 for c in range(n)]
    return TimeSeriesDataset.from_records(
        (f"i{i}", labels[i], rng.normal(size=(V, Q))) for i in range(n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# filled by test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
