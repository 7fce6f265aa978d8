import warnings

import numpy as np
import pytest

from blockade_spdc.fock import build_space


@pytest.fixture
def space33():
    return build_space(3, 3)


@pytest.fixture(autouse=True)
def _quiet_truncation():
    from blockade_spdc.master import TruncationWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
