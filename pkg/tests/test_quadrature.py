import numpy as np
import pytest

from cavityforce.errors import DomainError
from cavityforce.quadrature import QuadratureSpec, cavity_nodes, disk_and_direction, unit_samples


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(nodes=0)
    with pytest.raises(DomainError):
        QuadratureSpec(seed=-1)
    with pytest.raises(DomainError):
        QuadratureSpec(sequence="grid")


@pytest.mark.parametrize("sequence", ["sobol", "halton"])
def test_samples_are_seeded(sequence):
    a = unit_samples(QuadratureSpec(64, 7, sequence), 64)
    b = unit_samples(QuadratureSpec(64, 7, sequence), 64)
    c = unit_samples(QuadratureSpec(64, 8, sequence), 64)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.shape == (64, 4) and a.min() >= 0.0 and a.max() < 1.0


def test_non_power_of_two_sobol_count():
    assert unit_samples(QuadratureSpec(100), 100).shape == (100, 4)


def test_disk_and_direction_geometry():
    u = unit_samples(QuadratureSpec(1024, 3), 1024)
    axis = np.array([0.0, 0.0, 1.0])
    o, d = disk_and_direction(u, 2.0, axis)
    assert np.all(np.abs(o @ axis) < 1e-15)
    assert np.all(np.linalg.norm(o, axis=1) <= 2.0)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.all(d @ axis > 0.0)
    # Uniform solid angle on the half-sphere: mean cos = 1/2; uniform disk: mean rho^2 = r^2/2.
    assert np.mean(d @ axis) == pytest.approx(0.5, abs=5e-3)
    assert np.mean(np.sum(o * o, axis=1)) == pytest.approx(2.0, abs=2e-2)


def test_symmetric_nodes_are_inversion_pairs():
    o, d = cavity_nodes(QuadratureSpec(256, 1), 1.0, (0.0, 1.0, 0.0), symmetric=True)
    assert np.array_equal(o[0::2], -o[1::2])
    assert np.array_equal(d[0::2], -d[1::2])
    with pytest.raises(DomainError):
        cavity_nodes(QuadratureSpec(255, 1), 1.0, (0.0, 1.0, 0.0), symmetric=True)
