import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import cavityforce.reflection as refl
from cavityforce.errors import DegeneratePlaneError, DomainError, GrazingIncidenceError
from cavityforce.reflection import (
    RayState,
    chord_angle_function,
    closed_form_nth_point,
    cramer_matrix,
    det3,
    first_intersection,
    incidence_angle,
    incidence_plane_normal,
    reflect,
    trace_iterative,
)

from conftest import random_sphere_rays

unit_floats = st.floats(-1.0, 1.0, allow_nan=False)


def test_first_intersection_on_sphere(rng):
    for ray, r in random_sphere_rays(rng, 200):
        t, p = first_intersection(ray, r)
        assert t > 0.0
        assert np.linalg.norm(p) == pytest.approx(r, rel=1e-13)
        assert p == pytest.approx(ray.origin + t * ray.direction)


def test_first_intersection_rejects_exterior_origin():
    with pytest.raises(DomainError):
        first_intersection(RayState((2.0, 0.0, 0.0), (1.0, 0.0, 0.0)), 1.0)


@settings(max_examples=200, deadline=None)
@given(st.tuples(unit_floats, unit_floats, unit_floats), st.tuples(unit_floats, unit_floats, unit_floats))
def test_reflect_is_involution_and_preserves_norm(k, n):
    k = np.array(k)
    n = np.array(n)
    if np.linalg.norm(n) < 1e-3:
        return
    n = n / np.linalg.norm(n)
    out = reflect(k, n)
    assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(k), abs=1e-12)
    assert reflect(out, n) == pytest.approx(k, abs=1e-12)
    assert out @ n == pytest.approx(-(k @ n), abs=1e-12)


def test_reflect_general_coefficients_match_mirror_when_unity():
    k = np.array([0.3, -0.4, 0.5])
    n = np.array([0.0, 0.6, 0.8])
    mirror = reflect(k, n)
    explicit = reflect(k, n, coeff_parallel=1.0 + 0.0, coeff_perp=1.0 + 0.0)
    assert explicit == pytest.approx(mirror)
    damped = reflect(k, n, coeff_parallel=0.5, coeff_perp=0.25)
    tangential = k - (k @ n) * n
    assert damped == pytest.approx(0.25 * tangential - 0.5 * (k @ n) * n)


def test_incidence_angle_extremes():
    assert incidence_angle((1.0, 0.0, 0.0), (2.0, 0.0, 0.0)) == 0.0
    assert incidence_angle((0.0, 1.0, 0.0), (2.0, 0.0, 0.0)) == pytest.approx(math.pi / 2)
    assert incidence_angle((1.0, 1.0, 0.0), (1.0, 0.0, 0.0)) == pytest.approx(math.pi / 4)


def test_incidence_plane_normal_degenerate_for_central_ray():
    with pytest.raises(DegeneratePlaneError):
        incidence_plane_normal(RayState((0.2, 0.0, 0.0), (1.0, 0.0, 0.0)))
    with pytest.raises(DegeneratePlaneError):
        incidence_plane_normal(RayState((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)))


def test_det3_matches_numpy(rng):
    for _ in range(50):
        m = rng.normal(size=(3, 3))
        assert det3(m) == pytest.approx(np.linalg.det(m), rel=1e-10, abs=1e-12)


def test_cramer_matrix_determinant_identity(rng):
    for _ in range(50):
        r1 = rng.normal(size=3)
        r2 = r1 @ r1
        assert det3(cramer_matrix(r1)) == pytest.approx(r2 * r1.sum(), rel=1e-10, abs=1e-12)


def test_cramer_matrix_encodes_dot_minus_cross(rng):
    r1 = rng.normal(size=3)
    x = rng.normal(size=3)
    assert cramer_matrix(r1) @ x == pytest.approx((r1 @ x) * np.ones(3) - np.cross(r1, x))


def test_chord_angle_function_values():
    gamma, dot = chord_angle_function(2.0, math.pi / 6, 3)
    phi = math.pi - math.pi / 3
    assert gamma == pytest.approx(4.0 * math.sin(2 * phi))
    assert dot == pytest.approx(4.0 * math.cos(2 * phi))


def test_closed_form_first_point_is_first_intersection(rng):
    for ray, r in random_sphere_rays(rng, 50):
        assert closed_form_nth_point(ray, r, 1) == pytest.approx(first_intersection(ray, r)[1])


def test_closed_form_matches_iteration(rng):
    worst = 0.0
    for ray, r in random_sphere_rays(rng, 300):
        trace = trace_iterative(ray, r, 10)
        for n in range(1, len(trace) + 1):
            worst = max(worst, np.linalg.norm(closed_form_nth_point(ray, r, n) - trace.points[n - 1]))
    assert worst < 1e-9


def test_closed_form_rotation_fallback_matches(monkeypatch):
    # x + y + z = 0 on the first strike forces the singular Cramer system.
    ray = RayState((0.0, 0.0, 0.0), (1.0, -1.0, 0.0))
    plane_ray = RayState((0.1, 0.1, -0.2), (1.0, -1.0, 0.0))
    for candidate in (ray, plane_ray):
        try:
            trace = trace_iterative(candidate, 1.0, 8)
        except DomainError:
            continue
        for n in range(1, len(trace) + 1):
            assert closed_form_nth_point(candidate, 1.0, n) == pytest.approx(trace.points[n - 1], abs=1e-10)
    monkeypatch.setattr(refl, "CRAMER_CONDITION", 1e9)
    ray = RayState((0.1, -0.05, 0.0), (0.0, 0.0, 1.0))
    trace = trace_iterative(ray, 1.0, 10)
    for n in range(1, 11):
        assert closed_form_nth_point(ray, 1.0, n) == pytest.approx(trace.points[n - 1], abs=1e-12)


def test_radial_ray_alternates_antipodes():
    ray = RayState((0.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    trace = trace_iterative(ray, 2.0, 10)
    assert trace.cycle and trace.complete
    assert len(trace) == 2
    assert trace.points[0] == pytest.approx([0, 0, 2])
    assert trace.points[1] == pytest.approx([0, 0, -2])
    assert closed_form_nth_point(ray, 2.0, 7) == pytest.approx([0, 0, 2])
    assert closed_form_nth_point(ray, 2.0, 8) == pytest.approx([0, 0, -2])


def test_grazing_ray_rejected(monkeypatch):
    # An interior origin cannot get closer than about sqrt(2 eps) to grazing
    # in double precision, so the guard is exercised with a wider margin.
    monkeypatch.setattr(refl, "GRAZING_MARGIN", 1e-6)
    ray = RayState((0.0, 1.0 - 1e-14, 0.0), (1.0, 0.0, 0.0))
    with pytest.raises(GrazingIncidenceError):
        closed_form_nth_point(ray, 1.0, 3)


def test_invalid_index_rejected():
    ray = RayState((0.1, 0.0, 0.0), (0.0, 1.0, 0.0))
    with pytest.raises(DomainError):
        closed_form_nth_point(ray, 1.0, 0)
    with pytest.raises(DomainError):
        trace_iterative(ray, 1.0, 0)


def test_trace_invariants(rng):
    for ray, r in random_sphere_rays(rng, 200):
        trace = trace_iterative(ray, r, 10)
        pts = trace.points
        assert np.max(np.abs(np.linalg.norm(pts, axis=1) - r)) < 1e-10 * r
        assert np.ptp(trace.incidence_angles) < 1e-10
        chords = trace.chord_lengths
        assert np.ptp(chords) < 1e-10 * r
        assert chords[0] == pytest.approx(trace.chord_length, rel=1e-12)
        assert trace.chord_length == pytest.approx(2 * r * math.cos(trace.incidence_angle), rel=1e-10)
        n = trace.plane_normal
        assert np.max(np.abs(pts @ n)) < 1e-10 * r


def test_ray_state_normalizes_direction():
    ray = RayState((0.0, 0.0, 0.0), (0.0, 3.0, 4.0))
    assert ray.direction == pytest.approx([0.0, 0.6, 0.8])
    assert ray.point_at(5.0) == pytest.approx([0.0, 3.0, 4.0])
    with pytest.raises(DomainError):
        RayState((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    planed = RayState((0.5, 0.0, 0.0), (0.0, 1.0, 0.0)).with_plane()
    assert planed.incidence_plane_normal == pytest.approx([0.0, 0.0, 1.0])
