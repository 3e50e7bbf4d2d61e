"""Procedural clean-weather scan synthesis.

Casts the calibrated beam pattern against a parametric scene (ground plane,
yaw-rotated boxes, road polygon) and emits a labeled polar grid map. This is
the ground-truth generator: box hits carry the box class, ground hits inside
the road polygon are road, other ground hits are background, sky beams are
unreturned. Rain labels never originate here.

Scene geometry lives in a world frame whose z axis points up; the sensor sits
at (0, 0, sensor_height) and output coordinates are sensor-frame.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    BACKGROUND,
    BIKE,
    CAR,
    PEDESTRIAN,
    ROAD,
    SPRINKLER,
    TARGETS,
    LabelSet,
    SensorCalibration,
)
from .errors import InvalidSpecError, UnknownSceneError
from .pgm import PolarGridMap, beam_directions

BUILTIN_SCENE_NAMES = ("minimal", "corridor", "rehearse-like")


@dataclass(frozen=True)
class OrientedBox:
    """Axis-aligned box rotated by yaw about z: center (m), half extents (m)."""

    center: np.ndarray
    half_extents: np.ndarray
    yaw: float
    class_id: int
    reflectance: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(3))
        object.__setattr__(
            self, "half_extents", np.asarray(self.half_extents, dtype=np.float64).reshape(3)
        )


@dataclass(frozen=True)
class SceneSpec:
    """Parametric scene: ground plane, labeled boxes, road polygon."""

    ground_normal: np.ndarray
    ground_offset: float
    boxes: tuple = ()
    road_polygon: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    ground_reflectance: float = 0.3

    def __post_init__(self):
        normal = np.asarray(self.ground_normal, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(normal)
        if norm > 0:
            normal = normal / norm
        object.__setattr__(self, "ground_normal", normal)
        object.__setattr__(self, "boxes", tuple(self.boxes))
        object.__setattr__(
            self, "road_polygon", np.asarray(self.road_polygon, dtype=np.float64).reshape(-1, 2)
        )


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _polygon_is_simple(poly: np.ndarray) -> bool:
    n = poly.shape[0]
    for i in range(n):
        a1, a2 = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_intersect(a1, a2, poly[j], poly[(j + 1) % n]):
                return False
    return True


def validate_scene(spec: SceneSpec) -> None:
    if spec.ground_normal[2] <= 0:
        raise InvalidSpecError("ground normal must have positive z component")
    for i, box in enumerate(spec.boxes):
        if np.any(box.half_extents <= 0):
            raise InvalidSpecError(f"box {i} has non-positive half extents")
    if spec.road_polygon.shape[0] < 3:
        raise InvalidSpecError("road polygon needs at least 3 vertices")
    if not _polygon_is_simple(spec.road_polygon):
        raise InvalidSpecError("road polygon is self-intersecting")


def builtin_scene(name: str) -> SceneSpec:
    """Fixed scene fixtures: "minimal", "corridor", or "rehearse-like"."""
    ground = dict(ground_normal=(0.0, 0.0, 1.0), ground_offset=0.0)
    if name == "minimal":
        return SceneSpec(
            **ground,
            boxes=(),
            road_polygon=[(-20.0, -20.0), (20.0, -20.0), (20.0, 20.0), (-20.0, 20.0)],
        )
    if name == "corridor":
        walls = (
            OrientedBox((12.0, -4.0, 1.0), (10.0, 0.3, 1.0), 0.0, TARGETS, 0.5),
            OrientedBox((12.0, 4.0, 1.0), (10.0, 0.3, 1.0), 0.0, TARGETS, 0.5),
        )
        return SceneSpec(
            **ground,
            boxes=walls,
            road_polygon=[(0.0, -4.0), (25.0, -4.0), (25.0, 4.0), (0.0, 4.0)],
        )
    if name == "rehearse-like":
        boxes = (
            OrientedBox((10.0, 2.0, 0.8), (2.2, 0.9, 0.8), 0.15, CAR, 0.55),
            OrientedBox((7.0, -2.5, 0.9), (0.3, 0.3, 0.9), 0.0, PEDESTRIAN, 0.4),
            OrientedBox((13.0, -1.0, 0.7), (0.9, 0.3, 0.7), -0.4, BIKE, 0.45),
            OrientedBox((5.0, 4.0, 1.2), (0.4, 0.4, 1.2), 0.0, SPRINKLER, 0.6),
            OrientedBox((16.0, 4.5, 1.2), (0.4, 0.4, 1.2), 0.0, SPRINKLER, 0.6),
            OrientedBox((18.0, -3.5, 0.6), (0.5, 0.5, 0.6), 0.3, TARGETS, 0.7),
            OrientedBox((21.0, 1.5, 0.6), (0.5, 0.5, 0.6), -0.2, TARGETS, 0.7),
        )
        return SceneSpec(
            **ground,
            boxes=boxes,
            road_polygon=[(-2.0, -25.0), (30.0, -25.0), (30.0, 25.0), (-2.0, 25.0)],
        )
    raise UnknownSceneError(f"unknown scene {name!r}; choose from {BUILTIN_SCENE_NAMES}")


def _ray_box_hits(origin: np.ndarray, dirs: np.ndarray, box: OrientedBox) -> np.ndarray:
    """Entry distance of each ray into the box, +inf where missed. dirs is (M, 3)."""
    c, s = np.cos(-box.yaw), np.sin(-box.yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    o = rot @ (origin - box.center)
    d = dirs @ rot.T
    d = np.where(np.abs(d) < 1e-300, 1e-300, d)
    t1 = (-box.half_extents - o) / d
    t2 = (box.half_extents - o) / d
    t_near = np.minimum(t1, t2).max(axis=1)
    t_far = np.maximum(t1, t2).min(axis=1)
    hit = (t_far >= t_near) & (t_far > 0)
    t = np.where(t_near > 0, t_near, t_far)
    return np.where(hit, t, np.inf)


def points_in_polygon(xy: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd (ray crossing) test; points on an edge count as inside."""
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    polygon = np.asarray(polygon, dtype=np.float64).reshape(-1, 2)
    x, y = xy[:, 0], xy[:, 1]
    inside = np.zeros(xy.shape[0], dtype=bool)
    on_edge = np.zeros(xy.shape[0], dtype=bool)
    n = polygon.shape[0]
    scale = max(1.0, np.abs(polygon).max())
    eps = 1e-12 * scale * scale
    for i in range(n):
        ax, ay = polygon[i]
        bx, by = polygon[(i + 1) % n]
        cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
        dot = (x - ax) * (bx - ax) + (y - ay) * (by - ay)
        seg_len2 = (bx - ax) ** 2 + (by - ay) ** 2
        on_edge |= (np.abs(cross) <= eps) & (dot >= -eps) & (dot <= seg_len2 + eps)
        crosses = ((ay > y) != (by > y)) & (
            x < (bx - ax) * (y - ay) / (by - ay + np.where(by == ay, 1e-300, 0.0)) + ax
        )
        inside ^= crosses
    return inside | on_edge


def raycast_scene(
    spec: SceneSpec,
    calib: SensorCalibration,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> tuple[PolarGridMap, LabelSet]:
    """Cast every calibrated beam against the scene.

    Returns the resulting grid and per-cell labels over the flattened grid
    (length V*H). Range noise is zero-mean Gaussian along the ray, drawn from
    a counter-based generator so results are schedule-independent.
    """
    validate_scene(spec)
    if noise_sigma < 0:
        raise InvalidSpecError("noise_sigma must be non-negative")
    v, h = calib.v, calib.h
    origin = np.array([0.0, 0.0, calib.sensor_height])
    dirs = beam_directions(calib).reshape(-1, 3)
    m = dirs.shape[0]

    # Ground plane: normal . p + offset = 0 in world coordinates.
    denom = dirs @ spec.ground_normal
    denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
    t_ground = -(spec.ground_normal @ origin + spec.ground_offset) / denom
    t_ground = np.where(t_ground > 0, t_ground, np.inf)

    best_t = t_ground.copy()
    best_label = np.full(m, -1, dtype=np.int32)  # -1 = ground, resolved below
    best_refl = np.full(m, spec.ground_reflectance)
    for box in spec.boxes:
        t_box = _ray_box_hits(origin, dirs, box)
        closer = t_box < best_t
        best_t = np.where(closer, t_box, best_t)
        best_label[closer] = box.class_id
        best_refl[closer] = box.reflectance

    returned = np.isfinite(best_t) & (best_t >= calib.r_min) & (best_t <= calib.r_max)

    # Ground hits become road only inside the road polygon.
    ground_hit = returned & (best_label == -1)
    labels = np.zeros(m, dtype=np.int32)
    labels[returned] = np.where(best_label[returned] >= 0, best_label[returned], BACKGROUND)
    if ground_hit.any():
        hit_xy = origin[:2] + dirs[ground_hit, :2] * best_t[ground_hit, None]
        in_road = points_in_polygon(hit_xy, spec.road_polygon)
        ground_labels = np.where(in_road, ROAD, BACKGROUND)
        labels[ground_hit] = ground_labels

    ranges = np.where(returned, best_t, calib.r_max)
    if noise_sigma > 0:
        rng = np.random.Generator(np.random.Philox(key=seed))
        noise = rng.normal(0.0, noise_sigma, m)
        ranges = np.where(returned, np.clip(ranges + noise, calib.r_min, calib.r_max), ranges)

    coords = dirs * ranges[:, None]
    intensity = np.where(returned, best_refl, 0.0)
    grid = PolarGridMap(
        coords.reshape(v, h, 3),
        intensity.reshape(v, h),
        ranges.reshape(v, h),
        (~returned).reshape(v, h),
    )
    return grid, LabelSet(labels)
