import pytest

from homoclinic import (
    Grid,
    SolverConfig,
    example_potential,
    search_distinct,
    solve_homoclinic,
)


@pytest.fixture(scope="session")
def pot():
    return example_potential()


@pytest.fixture(scope="session")
def grid():
    return Grid(period=1.0, nodes_per_period=40, half_periods=8)


@pytest.fixture(scope="session")
def cfg():
    return SolverConfig()


# one shared solve; tests must not mutate the candidate
@pytest.fixture(scope="session")
def solved(pot, grid, cfg):
    return solve_homoclinic(pot, grid, cfg)


@pytest.fixture(scope="session")
def library3(pot, grid, cfg):
    return search_distinct(pot, grid, cfg, targets=3)


def pytest_terminal_summary(terminalreporter):
    # acceptance verdicts, one line per criterion, kept out of the capture
    import sys

    mod = next(
        (m for n, m in sys.modules.items() if n.rsplit(".", 1)[-1] == "test_acceptance"),
        None,
    )
    lines = getattr(mod, "CRITERION_LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(lines):
        terminalreporter.write_line(lines[num])
