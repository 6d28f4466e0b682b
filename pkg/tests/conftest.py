"""Session fixtures.

Cycle finding dominates the suite's fixed cost, so every found cycle and
phase map is session scoped.  Fixtures are shared state: tests must treat
them as immutable (the dataclasses are frozen, but arrays are not)."""
import numpy as np
import pytest

from oscillab import ModelSpec, build_model, build_phase_map, find_limit_cycle


@pytest.fixture(scope="session")
def hopf():
    return build_model(ModelSpec("hopf_bounded"))


@pytest.fixture(scope="session")
def hopf_cycle(hopf):
    return find_limit_cycle(hopf)


@pytest.fixture(scope="session")
def hopf_pm(hopf, hopf_cycle):
    return build_phase_map(hopf, hopf_cycle)


@pytest.fixture(scope="session")
def three_cycles():
    return build_model(ModelSpec("three_cycles"))


@pytest.fixture(scope="session")
def tc_cycle(three_cycles):
    return find_limit_cycle(three_cycles)


@pytest.fixture(scope="session")
def tc_pm(three_cycles, tc_cycle):
    return build_phase_map(three_cycles, tc_cycle)


@pytest.fixture(scope="session")
def predator_prey():
    return build_model(ModelSpec("predator_prey"))


@pytest.fixture(scope="session")
def pp_cycle(predator_prey):
    return find_limit_cycle(predator_prey)


@pytest.fixture(scope="session")
def pp_pm(predator_prey, pp_cycle):
    return build_phase_map(predator_prey, pp_cycle)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import acceptance_report
    if acceptance_report.RESULTS:
        terminalreporter.section("acceptance gates")
        for line in acceptance_report.RESULTS:
            terminalreporter.write_line(line)
