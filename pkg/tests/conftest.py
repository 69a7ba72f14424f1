"""Shared random-sample generators for the test suite."""

import math

import numpy as np
import pytest

from cavityforce.reflection import RayState

HBAR_SI = 1.054571817e-34
C_SI = 299792458.0


def random_sphere_rays(rng, count, r_low=0.5, r_high=2.0):
    """``(ray, radius)`` pairs with origins strictly inside the sphere."""
    out = []
    for _ in range(count):
        r = rng.uniform(r_low, r_high)
        o = rng.normal(size=3)
        o *= r * rng.uniform(0.0, 0.99) ** (1.0 / 3.0) / np.linalg.norm(o)
        out.append((RayState(o, rng.normal(size=3)), r))
    return out


def random_hemisphere_entry(rng, radius=1.0, axis_index=1, margin=0.999):
    """A ray entering through the opening disk of a hemisphere whose axis is a coordinate axis."""
    rho = math.sqrt(rng.uniform()) * margin * radius
    a = rng.uniform(0.0, 2.0 * math.pi)
    others = [i for i in range(3) if i != axis_index]
    o = np.zeros(3)
    o[others[0]] = rho * math.cos(a)
    o[others[1]] = rho * math.sin(a)
    d = rng.normal(size=3)
    d[axis_index] = abs(d[axis_index]) + 1e-3
    return RayState(o, d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for an acceptance criterion, printed after the run."""

    def record(number, passed, detail):
        ACCEPTANCE_LINES[number] = f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
