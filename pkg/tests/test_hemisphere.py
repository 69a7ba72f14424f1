import math

import numpy as np
import pytest

from cavityforce.errors import DomainError, NoIntersectionError
from cavityforce.hemisphere import (
    CavityGeometry,
    CavityKind,
    Reentry,
    ReflectionClass,
    check_entry,
    classify_reflection,
    exit_crossing_norm,
    exit_ray,
    max_reflections,
    opening_crossing,
    plate_element_position,
    plate_element_velocity,
    plate_frame,
    plate_reflection_point,
    reentry_check,
    reflection_budget,
    trace_hemisphere,
)
from cavityforce.reflection import RayState, first_intersection, reflect
from cavityforce.vectors import direction_cosines

from conftest import random_hemisphere_entry

HEMI = CavityGeometry(1.0, kind="hemisphere")


def test_axial_entry_single_reflection():
    ray = RayState((0.0, 0.0, 0.0), (0.0, 1.0, 0.0))
    assert max_reflections(ray, HEMI) == 1
    trace = trace_hemisphere(ray, HEMI)
    assert trace.count == 1
    assert trace.exit_point == pytest.approx([0.0, 0.0, 0.0])
    cls = classify_reflection(ray, HEMI)
    assert cls.reflection_class is ReflectionClass.SINGLE and cls.degenerate


def test_check_entry_rejections():
    with pytest.raises(DomainError):
        check_entry(RayState((0.0, 0.1, 0.0), (0.0, 1.0, 0.0)), HEMI)
    with pytest.raises(DomainError):
        check_entry(RayState((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)), HEMI)
    with pytest.raises(DomainError):
        check_entry(RayState((0.2, 0.0, 0.0), (0.0, -1.0, 0.0)), HEMI)
    with pytest.raises(DomainError):
        check_entry(RayState((0.2, 0.0, 0.0), (0.0, 1.0, 0.0)), CavityGeometry(1.0))


def test_budget_matches_brute_force(rng):
    boundary = 0
    for _ in range(500):
        ray = random_hemisphere_entry(rng)
        budget = reflection_budget(ray, HEMI)
        if budget.boundary:
            boundary += 1
            continue
        assert budget.count == trace_hemisphere(ray, HEMI).count
    assert boundary < 5


def test_budget_with_other_axis_and_radius(rng):
    geom = CavityGeometry(2.5, kind="hemisphere", axis=(0.0, 0.0, 1.0))
    for _ in range(200):
        ray = random_hemisphere_entry(rng, radius=2.5, axis_index=2)
        budget = reflection_budget(ray, geom)
        if not budget.boundary:
            assert budget.count == trace_hemisphere(ray, geom).count


def test_known_two_reflection_case():
    # Entry at the centre offset, steep toward the far wall: hand-checked geometry.
    ray = RayState((-0.5, 0.0, 0.0), (1.0, 0.2, 0.0))
    trace = trace_hemisphere(ray, HEMI)
    assert max_reflections(ray, HEMI) == trace.count


def test_exit_crossing_norm_matches_line_intersection(rng):
    for _ in range(300):
        ray = random_hemisphere_entry(rng)
        _, r1 = first_intersection(ray, 1.0)
        k1 = reflect(ray.direction, -r1)
        # Solve R1 + t k1 = s R0_hat in the incidence plane by least squares.
        r0_hat = ray.origin / np.linalg.norm(ray.origin)
        m = np.column_stack([k1, -r0_hat])
        (t, s), *_ = np.linalg.lstsq(m, -r1, rcond=None)
        expected = abs(s) if t > 0 and s < 0 else math.inf
        got = exit_crossing_norm(ray, HEMI)
        if math.isinf(expected) or math.isinf(got):
            if not (math.isinf(expected) and math.isinf(got)):
                assert min(expected, got) > 1e6
        else:
            assert got == pytest.approx(expected, rel=1e-8)


def test_classification_consistent_with_count(rng):
    for _ in range(500):
        ray = random_hemisphere_entry(rng)
        cls = classify_reflection(ray, HEMI)
        if cls.boundary:
            continue
        assert (cls.reflection_class is ReflectionClass.SINGLE) == (cls.max_reflections == 1)


def test_exit_ray_matches_trace(rng):
    for _ in range(200):
        ray = random_hemisphere_entry(rng)
        if reflection_budget(ray, HEMI).boundary:
            continue
        trace = trace_hemisphere(ray, HEMI)
        leaving = exit_ray(ray, HEMI)
        assert leaving.origin == pytest.approx(trace.points[-1], abs=1e-9)
        assert leaving.direction == pytest.approx(trace.exit_direction, abs=1e-9)
        assert opening_crossing(leaving, HEMI) == pytest.approx(trace.exit_point, abs=1e-8)


def test_opening_crossing_requires_downward_ray():
    with pytest.raises(NoIntersectionError):
        opening_crossing(RayState((0.0, 0.5, 0.0), (0.0, 1.0, 0.0)), HEMI)


def test_plate_frame_orthonormal():
    n, et, ep = plate_frame(0.7, 2.1)
    basis = np.array([n, et, ep])
    assert basis @ basis.T == pytest.approx(np.eye(3), abs=1e-15)
    assert n == pytest.approx(direction_cosines(0.7, 2.1))


def test_plate_facing_opening_gap():
    geom = CavityGeometry.plate_facing_opening(1.0, 0.4)
    assert geom.kind is CavityKind.PLATE_HEMISPHERE
    assert geom.gap == pytest.approx(0.4)
    assert geom.plate_normal == pytest.approx([0.0, 1.0, 0.0], abs=1e-15)
    assert geom.without_plate().kind is CavityKind.HEMISPHERE


def test_plate_fields_require_plate_kind():
    with pytest.raises(DomainError):
        CavityGeometry(1.0, kind="hemisphere", plate_orientation=(0.0, 0.0), plate_center=(0, -1, 0))
    with pytest.raises(DomainError):
        CavityGeometry(1.0, kind="plate-hemisphere")
    with pytest.raises(DomainError):
        CavityGeometry(0.0)


def test_plate_point_lies_on_plate(rng):
    geom = CavityGeometry.plate_facing_opening(1.0, 0.3)
    hits = 0
    for _ in range(200):
        ray = random_hemisphere_entry(rng)
        leaving = exit_ray(ray, geom)
        try:
            hit = plate_reflection_point(leaving, geom)
        except NoIntersectionError:
            continue
        hits += 1
        assert (hit.plate_point - geom.plate_center_local) @ geom.plate_normal == pytest.approx(0.0, abs=1e-12)
        assert plate_element_position(geom, *hit.plate_coordinates) == pytest.approx(hit.plate_point)
        assert hit.plate_point == pytest.approx(leaving.point_at(hit.parameter), abs=1e-12)
    assert hits > 100


def _line_disk_oracle(point, direction, radius):
    if abs(direction[1]) < 1e-14:
        return False
    s = -point[1] / direction[1]
    q = point + s * direction
    return s > 0 and math.hypot(q[0], q[2]) < radius


def test_reentry_matches_line_disk_oracle(rng):
    checked = 0
    while checked < 400:
        gap = rng.uniform(0.05, 2.0)
        th = rng.uniform(math.pi / 2 - 0.6, math.pi / 2 + 0.6)
        ph = rng.uniform(math.pi / 2 - 0.6, math.pi / 2 + 0.6)
        geom = CavityGeometry(1.0, kind="plate-hemisphere", plate_orientation=(th, ph),
                              plate_center=(0.0, -gap, 0.0))
        ray = random_hemisphere_entry(rng, margin=0.99)
        leaving = exit_ray(ray, geom)
        try:
            hit = plate_reflection_point(leaving, geom)
        except NoIntersectionError:
            continue
        if hit.boundary:
            continue
        checked += 1
        expected = _line_disk_oracle(hit.plate_point, hit.reflected_direction, 1.0)
        assert (hit.reentry is Reentry.REENTERS) == expected
        assert reentry_check(hit, leaving, geom) is hit.reentry


def test_reentry_normal_incidence_plate_returns_ray():
    geom = CavityGeometry.plate_facing_opening(1.0, 0.5)
    ray = RayState((0.0, 0.0, 0.0), (0.0, 1.0, 0.0))
    leaving = exit_ray(ray, geom)
    hit = plate_reflection_point(leaving, geom)
    assert hit.plate_point == pytest.approx([0.0, -0.5, 0.0], abs=1e-12)
    assert hit.reentry is Reentry.REENTERS


def test_plate_element_velocity_static_and_finite_difference():
    assert plate_element_velocity(0.4, 1.2, 0.3, -0.2) == pytest.approx(np.zeros(3))
    th, ph, nt, npp = 0.4, 1.2, 0.3, -0.2
    rates = (0.11, -0.07, 0.05, 0.02)
    v = plate_element_velocity(th, ph, nt, npp, *rates, translation_rate=(0.1, 0.0, -0.3))

    def pos(t):
        _, et, ep = plate_frame(th + rates[0] * t, ph + rates[1] * t)
        center = np.array([0.1, 0.0, -0.3]) * t
        return center + (nt + rates[2] * t) * et + (npp + rates[3] * t) * ep

    h = 1e-6
    assert v == pytest.approx((pos(h) - pos(-h)) / (2 * h), abs=1e-9)
