import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ladies.data import SyntheticSpec, generate  # noqa: E402
from ladies.graph import normalized_laplacian  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def er100():
    ds = generate(SyntheticSpec(kind="er", n=100, p=0.03, feature_dim=8, seed=7))
    return ds, normalized_laplacian(ds.graph)


@pytest.fixture(scope="session")
def sbm_ds():
    return generate(SyntheticSpec(kind="sbm", n=200, blocks=2, p_in=0.08, p_out=0.005,
                                  feature_dim=8, noise=1.0, seed=3))


def data_root():
    root = os.environ.get("LADIES_DATA")
    return Path(root) if root else None


VERDICTS = []


@pytest.fixture
def verdict(capsys):
    """Record one ``PASS/FAIL criterion N: ...`` line and fail the test on FAIL."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        VERDICTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        if not ok:
            pytest.fail(line, pytrace=False)

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
