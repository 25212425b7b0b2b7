"""Shared fixtures: converged states are expensive, so solve them once."""

import pytest

from hartreetrap import ProblemSpec, find_ground_state, find_singular_state


@pytest.fixture(scope="session")
def spec_d7():
    return ProblemSpec(d=7)


@pytest.fixture(scope="session")
def ground_d7_b01(spec_d7):
    return find_ground_state(0.1, spec_d7)


@pytest.fixture(scope="session")
def ground_d7_b1(spec_d7):
    return find_ground_state(1.0, spec_d7)


@pytest.fixture(scope="session")
def ground_d16_b1():
    return find_ground_state(1.0, ProblemSpec(d=16))


@pytest.fixture(scope="session")
def singular_d7():
    return find_singular_state(7)
