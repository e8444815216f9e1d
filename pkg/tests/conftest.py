import pathlib

import pytest

from cril import parse_file
from cril.ltsi import Ltsi

PROGRAMS = pathlib.Path(__file__).resolve().parents[1] / "programs"


@pytest.fixture(scope="session")
def shared_program():
    return parse_file(PROGRAMS / "shared.cril")


@pytest.fixture(scope="session")
def racy_program():
    return parse_file(PROGRAMS / "airline_racy.cril")


@pytest.fixture(scope="session")
def semaphore_program():
    return parse_file(PROGRAMS / "airline_semaphore.cril")


@pytest.fixture(scope="session")
def shared_ltsi(shared_program):
    return Ltsi(shared_program)


@pytest.fixture(scope="session")
def racy_ltsi(racy_program):
    return Ltsi(racy_program)


@pytest.fixture(scope="session")
def semaphore_ltsi(semaphore_program):
    return Ltsi(semaphore_program)


def program_path(name: str) -> pathlib.Path:
    return PROGRAMS / f"{name}.cril"
