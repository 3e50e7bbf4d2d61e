"""Bit-exact file formats.

.bin    little-endian float32 quadruplets (x, y, z, intensity), 16 B/point
.label  little-endian uint32 per point, low 16 bits class id, high 16 reserved
.json   scenes, calibrations, rain configs, filter params
.csv    benchmark results, percent values at 2 decimals, integer ms

Readers map every malformed input to a typed error; they never crash on
arbitrary bytes.
"""
from __future__ import annotations

import json

import numpy as np

from .core import NUM_CLASSES, LabelSet, PointCloud, SensorCalibration
from .errors import (
    InvalidClassError,
    NonFiniteCoordinateError,
    SchemaError,
    TruncatedFileError,
)
from .evaluation import BenchmarkRow, MetricReport
from .filters import Dror, Dsor, FilterParams, Ror, Sor
from .rainsim import RainConfig
from .scene import OrientedBox, SceneSpec, validate_scene
from .annotate import AnnotationScene

RESULTS_COLUMNS = ("filter", "rain_density", "precision", "recall", "f1", "rain_iou", "time_ms")


# ---------------------------------------------------------------- binary

def write_cloud(cloud: PointCloud) -> bytes:
    quads = np.empty((cloud.count, 4), dtype="<f4")
    quads[:, :3] = cloud.coords
    quads[:, 3] = cloud.intensity
    return quads.tobytes()


def read_cloud(data: bytes) -> PointCloud:
    if len(data) % 16 != 0:
        raise TruncatedFileError(f"cloud file length {len(data)} is not a multiple of 16")
    quads = np.frombuffer(data, dtype="<f4").reshape(-1, 4).astype(np.float64)
    finite = np.isfinite(quads[:, :3]).all(axis=1)
    if not finite.all():
        raise NonFiniteCoordinateError(int(np.argmin(finite)))
    return PointCloud(quads[:, :3], quads[:, 3])


def write_labels(labels: LabelSet) -> bytes:
    return labels.labels.astype("<u4").tobytes()


def read_labels(data: bytes) -> LabelSet:
    if len(data) % 4 != 0:
        raise TruncatedFileError(f"label file length {len(data)} is not a multiple of 4")
    raw = np.frombuffer(data, dtype="<u4")
    valid = (raw >> 16 == 0) & (raw < NUM_CLASSES)
    if raw.size and not valid.all():
        raise InvalidClassError(int(np.argmin(valid)))
    return LabelSet(raw.astype(np.int32))


# ---------------------------------------------------------------- json helpers

def _get(obj, key, path, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{path}/{key}", "missing")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"{path}/{key}", f"expected {getattr(kind, '__name__', kind)}")
    return value


def _number(obj, key, path) -> float:
    value = _get(obj, key, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path}/{key}", "expected number")
    return float(value)


def _vector(obj, key, path, length) -> list:
    value = _get(obj, key, path, list)
    if len(value) != length or not all(isinstance(x, (int, float)) for x in value):
        raise SchemaError(f"{path}/{key}", f"expected {length} numbers")
    return [float(x) for x in value]


def _parse_json(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("/", f"invalid JSON: {exc.msg}") from exc


def _parse_box(obj, path) -> OrientedBox:
    return OrientedBox(
        center=_vector(obj, "center", path, 3),
        half_extents=_vector(obj, "half_extents", path, 3),
        yaw=_number(obj, "yaw", path),
        class_id=int(_number(obj, "class_id", path)),
        reflectance=_number(obj, "reflectance", path),
    )


def _parse_polygon(obj, key, path) -> list:
    poly = _get(obj, key, path, list)
    if len(poly) < 3:
        raise SchemaError(f"{path}/{key}", "need at least 3 vertices")
    out = []
    for i, vertex in enumerate(poly):
        if not (isinstance(vertex, list) and len(vertex) == 2
                and all(isinstance(x, (int, float)) for x in vertex)):
            raise SchemaError(f"{path}/{key}/{i}", "expected [x, y]")
        out.append([float(vertex[0]), float(vertex[1])])
    return out


def _box_to_json(box: OrientedBox) -> dict:
    return {
        "center": list(box.center),
        "half_extents": list(box.half_extents),
        "yaw": box.yaw,
        "class_id": box.class_id,
        "reflectance": box.reflectance,
    }


# ---------------------------------------------------------------- scenes

def write_scene_json(spec: SceneSpec) -> str:
    return json.dumps(
        {
            "ground_plane": {"normal": list(spec.ground_normal), "offset": spec.ground_offset},
            "boxes": [_box_to_json(b) for b in spec.boxes],
            "road_polygon": [list(v) for v in spec.road_polygon],
            "ground_reflectance": spec.ground_reflectance,
        },
        indent=2,
    )


def read_scene_json(text: str) -> SceneSpec:
    obj = _parse_json(text)
    plane = _get(obj, "ground_plane", "", dict)
    boxes = _get(obj, "boxes", "", list)
    spec = SceneSpec(
        ground_normal=_vector(plane, "normal", "/ground_plane", 3),
        ground_offset=_number(plane, "offset", "/ground_plane"),
        boxes=tuple(_parse_box(b, f"/boxes/{i}") for i, b in enumerate(boxes)),
        road_polygon=_parse_polygon(obj, "road_polygon", ""),
        ground_reflectance=_number(obj, "ground_reflectance", ""),
    )
    validate_scene(spec)
    return spec


def write_annotation_json(scene: AnnotationScene) -> str:
    return json.dumps(
        {
            "sprinkler_boxes": [_box_to_json(b) for b in scene.sprinkler_boxes],
            "object_boxes": [_box_to_json(b) for b in scene.object_boxes],
            "road_polygon": [list(v) for v in scene.road_polygon],
        },
        indent=2,
    )


def read_annotation_json(text: str) -> AnnotationScene:
    obj = _parse_json(text)
    return AnnotationScene(
        sprinkler_boxes=tuple(
            _parse_box(b, f"/sprinkler_boxes/{i}")
            for i, b in enumerate(_get(obj, "sprinkler_boxes", "", list))
        ),
        object_boxes=tuple(
            _parse_box(b, f"/object_boxes/{i}")
            for i, b in enumerate(_get(obj, "object_boxes", "", list))
        ),
        road_polygon=_parse_polygon(obj, "road_polygon", ""),
    )


# ---------------------------------------------------------------- calibration / configs

def write_calibration_json(calib: SensorCalibration) -> str:
    return json.dumps(
        {
            "elevations": list(calib.elevations),
            "azimuths": list(calib.azimuths),
            "r_max": calib.r_max,
            "r_min": calib.r_min,
            "sensor_height": calib.sensor_height,
        },
        indent=2,
    )


def read_calibration_json(text: str) -> SensorCalibration:
    obj = _parse_json(text)
    elevations = _get(obj, "elevations", "", list)
    azimuths = _get(obj, "azimuths", "", list)
    return SensorCalibration(
        elevations=np.asarray(elevations, dtype=np.float64),
        azimuths=np.asarray(azimuths, dtype=np.float64),
        r_max=_number(obj, "r_max", ""),
        r_min=_number(obj, "r_min", ""),
        sensor_height=_number(obj, "sensor_height", ""),
    )


def write_rain_config_json(config: RainConfig) -> str:
    return json.dumps(
        {
            "rate": config.rate,
            "d_min": config.d_min,
            "d_max": config.d_max,
            "n0": config.n0,
            "beam_divergence": config.beam_divergence,
            "rain_reflectance": config.rain_reflectance,
            "seed": config.seed,
        },
        indent=2,
    )


def read_rain_config_json(text: str) -> RainConfig:
    obj = _parse_json(text)
    return RainConfig(
        rate=_number(obj, "rate", ""),
        d_min=_number(obj, "d_min", ""),
        d_max=_number(obj, "d_max", ""),
        n0=_number(obj, "n0", ""),
        beam_divergence=_number(obj, "beam_divergence", ""),
        rain_reflectance=_number(obj, "rain_reflectance", ""),
        seed=int(_number(obj, "seed", "")),
    )


# ---------------------------------------------------------------- filter params

_FILTER_FIELDS = {
    "ror": (Ror, ("radius", "min_neighbors")),
    "sor": (Sor, ("k", "s")),
    "dror": (Dror, ("alpha", "beta", "k_min", "sr_min")),
    "dsor": (Dsor, ("k", "s", "r")),
}
_INT_FIELDS = {"min_neighbors", "k", "k_min"}


def write_filter_params_json(params: FilterParams) -> str:
    kind = type(params).__name__.lower()
    _, fields = _FILTER_FIELDS[kind]
    out = {"kind": kind}
    out.update({name: getattr(params, name) for name in fields})
    return json.dumps(out, indent=2)


def read_filter_params_json(text: str) -> FilterParams:
    obj = _parse_json(text)
    kind = _get(obj, "kind", "", str)
    if kind not in _FILTER_FIELDS:
        raise SchemaError("/kind", f"unknown filter kind {kind!r}")
    cls, fields = _FILTER_FIELDS[kind]
    values = {}
    for name in fields:
        value = _number(obj, name, "")
        values[name] = int(value) if name in _INT_FIELDS else value
    return cls(**values)


# ---------------------------------------------------------------- results csv

def write_results_csv(rows) -> str:
    lines = [",".join(RESULTS_COLUMNS)]
    for row in rows:
        rep = row.report
        time_ms = 0 if rep.wall_time_ms is None else int(round(rep.wall_time_ms))
        lines.append(
            f"{row.filter_name},{row.rain_density},"
            f"{rep.precision * 100:.2f},{rep.recall * 100:.2f},"
            f"{rep.f1 * 100:.2f},{rep.rain_iou * 100:.2f},{time_ms}"
        )
    return "\n".join(lines) + "\n"


def read_results_csv(text: str) -> list[BenchmarkRow]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or tuple(lines[0].split(",")) != RESULTS_COLUMNS:
        raise SchemaError("/header", "unexpected results header")
    rows = []
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != len(RESULTS_COLUMNS):
            raise SchemaError(f"/row/{i}", "wrong column count")
        try:
            report = MetricReport(
                precision=float(parts[2]) / 100.0,
                recall=float(parts[3]) / 100.0,
                f1=float(parts[4]) / 100.0,
                rain_iou=float(parts[5]) / 100.0,
                wall_time_ms=float(parts[6]),
            )
        except ValueError as exc:
            raise SchemaError(f"/row/{i}", "non-numeric metric") from exc
        rows.append(BenchmarkRow(parts[0], parts[1], report))
    return rows
