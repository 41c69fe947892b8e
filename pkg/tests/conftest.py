import numpy as np
import pytest

from nonstat_vi import Mdp

from oracles import random_mdp_arrays


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_mdp(rng):
    p, r = random_mdp_arrays(rng, 5, 3)
    return Mdp(p, r, 0.9)



def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
