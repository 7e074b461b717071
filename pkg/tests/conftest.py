import random

import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_addoption(parser):
    parser.addoption(
        "--probe-seed",
        type=int,
        default=20260823,
        help="seed for the randomized invariant probes",
    )


@pytest.fixture(scope="session")
def seed(request):
    return request.config.getoption("--probe-seed")


@pytest.fixture
def rng(seed):
    return random.Random(seed)


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
