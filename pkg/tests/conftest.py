import numpy as np
import pytest

from swarmrp.datagen import DatasetSpec, generate_dataset
from swarmrp.signal import make_lfm_chirp


@pytest.fixture(scope="session")
def chirp():
    return make_lfm_chirp(1e6, 1e-4, 2e6)


@pytest.fixture(scope="session")
def small_spec():
    return DatasetSpec(
        bandwidths_hz=(0.98e6, 1e6),
        reflection_coeffs=(0.1, 0.8),
        noise_stds=(0.1, 0.2),
        target_counts=(1, 5, 40),
        strides=(5, 17),
        offset_step=250,
        jitter_max=2,
        n_empty=6,
        n_contrastive=3,
        seed=7,
    )


@pytest.fixture(scope="session")
def small_dataset(small_spec):
    return generate_dataset(small_spec)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def record_criterion(request):
    """Record one acceptance line; returns the pass flag so tests can assert on it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, name: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number} {'PASS' if passed else 'FAIL'} {name}: {detail}"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
