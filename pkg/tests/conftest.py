import sys

import numpy as np
import pytest

from vra.featurestore import build_store


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_store(tmp_path, rng):
    """Three videos, D=8, with 5, 7 and 9 frames."""
    records = [
        (f"v{i}", 1.0 + i, rng.normal(size=(n, 8)).astype(np.float32))
        for i, n in enumerate((5, 7, 9))
    ]
    return build_store(tmp_path / "store", records)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
