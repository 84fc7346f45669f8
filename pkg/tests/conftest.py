import numpy as np
import pytest
import torch

from avsal.avdata import generate_clips
from avsal.harness import set_determinism
from helpers import tiny_family

set_determinism(True)

_ACCEPTANCE = {}


@pytest.fixture
def tiny_clips():
    return generate_clips(tiny_family(), 4, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def torch_gen():
    return torch.Generator().manual_seed(1234)


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""

    def record(name, passed, detail=""):
        _ACCEPTANCE[name] = (bool(passed), detail)
        print(f"{name}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{name}: {'PASS' if passed else 'FAIL'}  {detail}")
