"""Automatic annotation: RANSAC road plane, box labels, elimination rain labeling,
and nearest-neighbor label transfer to sparse clouds.

Labeling precedence is total and fixed: sprinkler boxes, then object boxes,
then rain (above plane, inside road polygon), then road (within plane
tolerance, inside polygon), then background. Points below the plane beyond
tolerance keep their slot as background so cloud and label lengths stay
aligned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BACKGROUND, RAIN, ROAD, SPRINKLER, LabelSet, PointCloud, validate_cloud
from .errors import (
    DegeneratePolygonError,
    EmptySourceError,
    NoValidHypothesisError,
    TooFewPointsError,
)
from .scene import OrientedBox, SceneSpec, points_in_polygon


@dataclass(frozen=True)
class PlaneModel:
    """Plane {p : normal . p + offset = 0} with unit normal, normal.z >= 0."""

    normal: np.ndarray
    offset: float
    inlier_count: int

    def __post_init__(self):
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=np.float64).reshape(3))

    def signed_distance(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords).reshape(-1, 3) @ self.normal + self.offset


@dataclass(frozen=True)
class AnnotationScene:
    """Hand-drawn annotation geometry: labeled boxes plus the 2D road polygon."""

    sprinkler_boxes: tuple
    object_boxes: tuple
    road_polygon: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sprinkler_boxes", tuple(self.sprinkler_boxes))
        object.__setattr__(self, "object_boxes", tuple(self.object_boxes))
        object.__setattr__(
            self, "road_polygon", np.asarray(self.road_polygon, dtype=np.float64).reshape(-1, 2)
        )


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 200
    inlier_threshold: float = 0.05
    seed: int = 0


def ransac_plane(cloud: PointCloud, iterations: int, inlier_threshold: float,
                 seed: int = 0) -> PlaneModel:
    """Best-of-N three-point RANSAC plane fit with least-squares refit.

    Degenerate (collinear) samples are skipped but still count against the
    iteration budget. Deterministic for a fixed seed.
    """
    validate_cloud(cloud)
    if cloud.count < 3:
        raise TooFewPointsError(f"plane fit needs >= 3 points, have {cloud.count}")
    if iterations < 1 or not inlier_threshold > 0:
        raise TooFewPointsError("need iterations >= 1 and a positive threshold")

    coords = cloud.coords
    rng = np.random.default_rng(seed)
    best_count = -1
    best_mask = None
    for _ in range(iterations):
        i, j, k = rng.choice(cloud.count, size=3, replace=False)
        normal = np.cross(coords[j] - coords[i], coords[k] - coords[i])
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            continue
        normal = normal / norm
        offset = -normal @ coords[i]
        dist = np.abs(coords @ normal + offset)
        mask = dist <= inlier_threshold
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
    if best_mask is None:
        raise NoValidHypothesisError("all sampled triplets were degenerate")

    inliers = coords[best_mask]
    centroid = inliers.mean(axis=0)
    _, _, vt = np.linalg.svd(inliers - centroid, full_matrices=False)
    normal = vt[-1]
    if normal[2] < 0:
        normal = -normal
    return PlaneModel(normal, float(-normal @ centroid), best_count)


def point_in_polygon(xy, polygon) -> bool:
    """Even-odd rule for a single 2D point; edge points count as inside."""
    polygon = np.asarray(polygon, dtype=np.float64).reshape(-1, 2)
    if polygon.shape[0] < 3:
        raise DegeneratePolygonError("polygon needs at least 3 vertices")
    return bool(points_in_polygon(np.asarray(xy, dtype=np.float64).reshape(1, 2), polygon)[0])


def _in_box(coords: np.ndarray, box: OrientedBox) -> np.ndarray:
    c, s = np.cos(-box.yaw), np.sin(-box.yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    local = (coords - box.center) @ rot.T
    return (np.abs(local) <= box.half_extents).all(axis=1)


def annotation_scene_from_spec(spec: SceneSpec, margin: float = 0.0,
                               sensor_height: float = 0.0) -> AnnotationScene:
    """Derive annotation geometry from a synthesis scene.

    Boxes are shifted into the sensor frame (scene synthesis emits
    sensor-frame clouds) and optionally inflated by a margin to absorb range
    noise on object surfaces.
    """
    shift = np.array([0.0, 0.0, -sensor_height])
    sprinklers = []
    objects = []
    for box in spec.boxes:
        grown = OrientedBox(box.center + shift, box.half_extents + margin, box.yaw,
                            box.class_id, box.reflectance)
        (sprinklers if box.class_id == SPRINKLER else objects).append(grown)
    return AnnotationScene(tuple(sprinklers), tuple(objects), spec.road_polygon)


def auto_annotate(
    cloud: PointCloud,
    scene: AnnotationScene,
    ransac: RansacConfig = RansacConfig(),
    plane_tolerance: float = 0.1,
) -> LabelSet:
    """Label a cloud by elimination against the fitted road plane and scene boxes."""
    validate_cloud(cloud)
    if scene.road_polygon.shape[0] < 3:
        raise DegeneratePolygonError("road polygon needs at least 3 vertices")
    plane = ransac_plane(cloud, ransac.iterations, ransac.inlier_threshold, ransac.seed)
    d = plane.signed_distance(cloud.coords)

    labels = np.full(cloud.count, -1, dtype=np.int32)
    for box in scene.sprinkler_boxes + scene.object_boxes:
        unlabeled = labels < 0
        inside = _in_box(cloud.coords, box)
        labels[unlabeled & inside] = box.class_id

    in_road = points_in_polygon(cloud.coords[:, :2], scene.road_polygon)
    unlabeled = labels < 0
    labels[unlabeled & (d > plane_tolerance) & in_road] = RAIN
    unlabeled = labels < 0
    labels[unlabeled & (np.abs(d) <= plane_tolerance) & in_road] = ROAD
    labels[labels < 0] = BACKGROUND
    return LabelSet(labels)


def transfer_labels(src_cloud: PointCloud, src_labels: LabelSet,
                    dst_cloud: PointCloud) -> LabelSet:
    """Give each destination point the label of its nearest source point.

    Exact distance ties resolve to the lowest source index, which is what a
    first-occurrence argmin over squared distances gives.
    """
    validate_cloud(src_cloud)
    validate_cloud(dst_cloud)
    if src_cloud.count == 0:
        raise EmptySourceError("source cloud is empty")
    if src_labels.count != src_cloud.count:
        raise EmptySourceError(
            f"source labels ({src_labels.count}) do not match cloud ({src_cloud.count})"
        )
    out = np.empty(dst_cloud.count, dtype=np.int32)
    chunk = max(1, 2_000_000 // max(1, src_cloud.count))
    for start in range(0, dst_cloud.count, chunk):
        block = dst_cloud.coords[start:start + chunk]
        diff = block[:, None, :] - src_cloud.coords[None, :, :]
        nearest = np.argmin((diff ** 2).sum(axis=2), axis=1)
        out[start:start + chunk] = src_labels.labels[nearest]
    return LabelSet(out)
