import numpy as np
import pytest

from derainkit import LabelSet, PointCloud, builtin_scene, grid_calibration
from derainkit import fileio
from derainkit.annotate import annotation_scene_from_spec
from derainkit.core import empty_cloud
from derainkit.errors import (
    InvalidClassError,
    NonFiniteCoordinateError,
    SchemaError,
    TruncatedFileError,
)
from derainkit.evaluation import BenchmarkRow, MetricReport
from derainkit.filters import Dsor, Ror
from derainkit.rainsim import RainConfig


def test_cloud_round_trip_empty():
    data = fileio.write_cloud(empty_cloud())
    assert data == b""
    assert fileio.read_cloud(data).count == 0


def test_cloud_round_trip_single_point():
    cloud = PointCloud([[1.0, 2.0, 3.0]], [0.5])
    data = fileio.write_cloud(cloud)
    assert len(data) == 16
    back = fileio.read_cloud(data)
    np.testing.assert_array_equal(back.coords, cloud.coords)
    np.testing.assert_array_equal(back.intensity, cloud.intensity)
    assert fileio.write_cloud(back) == data


def test_cloud_truncated():
    with pytest.raises(TruncatedFileError):
        fileio.read_cloud(b"\x00" * 17)


def test_cloud_nonfinite_rejected():
    bad = np.array([[np.nan, 0, 0, 0.5]], dtype="<f4").tobytes()
    with pytest.raises(NonFiniteCoordinateError):
        fileio.read_cloud(bad)


def test_cloud_round_trip_random_bit_exact():
    rng = np.random.default_rng(0)
    coords = rng.normal(size=(200, 3)).astype(np.float32).astype(np.float64)
    cloud = PointCloud(coords, rng.uniform(0, 1, 200).astype(np.float32).astype(np.float64))
    data = fileio.write_cloud(cloud)
    assert fileio.write_cloud(fileio.read_cloud(data)) == data


def test_labels_round_trip():
    data = fileio.write_labels(LabelSet([2, 0, 7]))
    assert len(data) == 12
    np.testing.assert_array_equal(fileio.read_labels(data).labels, [2, 0, 7])
    assert fileio.read_labels(b"").count == 0


def test_labels_invalid_class():
    with pytest.raises(InvalidClassError) as err:
        fileio.read_labels(np.array([9], dtype="<u4").tobytes())
    assert err.value.index == 0


def test_labels_reserved_high_bits():
    with pytest.raises(InvalidClassError):
        fileio.read_labels(np.array([0x0001_0002], dtype="<u4").tobytes())


def test_labels_truncated():
    with pytest.raises(TruncatedFileError):
        fileio.read_labels(b"\x00\x01\x02")


def test_scene_json_round_trip():
    for name in ("minimal", "corridor", "rehearse-like"):
        spec = builtin_scene(name)
        back = fileio.read_scene_json(fileio.write_scene_json(spec))
        np.testing.assert_allclose(back.ground_normal, spec.ground_normal)
        np.testing.assert_allclose(back.road_polygon, spec.road_polygon)
        assert len(back.boxes) == len(spec.boxes)
        for a, b in zip(back.boxes, spec.boxes):
            np.testing.assert_allclose(a.center, b.center)
            assert a.class_id == b.class_id


def test_scene_json_missing_key_path():
    with pytest.raises(SchemaError) as err:
        fileio.read_scene_json("{}")
    assert "/ground_plane" in str(err.value)


def test_scene_json_bad_box_path():
    text = fileio.write_scene_json(builtin_scene("minimal"))
    broken = text.replace('"road_polygon"', '"not_polygon"', 1)
    with pytest.raises(SchemaError) as err:
        fileio.read_scene_json(broken)
    assert "road_polygon" in str(err.value)


def test_annotation_json_round_trip():
    ann = annotation_scene_from_spec(builtin_scene("rehearse-like"), margin=0.05,
                                     sensor_height=2.0)
    back = fileio.read_annotation_json(fileio.write_annotation_json(ann))
    assert len(back.sprinkler_boxes) == len(ann.sprinkler_boxes)
    np.testing.assert_allclose(back.road_polygon, ann.road_polygon)


def test_calibration_json_round_trip():
    calib = grid_calibration(8, 16, r_max=22.0)
    back = fileio.read_calibration_json(fileio.write_calibration_json(calib))
    np.testing.assert_array_equal(back.elevations, calib.elevations)
    np.testing.assert_array_equal(back.azimuths, calib.azimuths)
    assert back.r_max == calib.r_max and back.sensor_height == calib.sensor_height


def test_rain_config_json_round_trip():
    config = RainConfig(rate=25.0, seed=7)
    back = fileio.read_rain_config_json(fileio.write_rain_config_json(config))
    assert back == config


def test_filter_params_json_round_trip():
    for params in (Ror(0.5, 3), Dsor(5, 0.2, 0.05)):
        back = fileio.read_filter_params_json(fileio.write_filter_params_json(params))
        assert back == params


def test_filter_params_unknown_kind():
    with pytest.raises(SchemaError):
        fileio.read_filter_params_json('{"kind": "magic"}')


def test_results_csv_round_trip():
    rows = [
        BenchmarkRow("dsor", "heavy", MetricReport(0.786, 0.996, 0.879, 0.783, 12.7)),
        BenchmarkRow("dror", "light", MetricReport(0.058, 0.763, 0.109, 0.058, 199.2)),
    ]
    text = fileio.write_results_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == "filter,rain_density,precision,recall,f1,rain_iou,time_ms"
    assert len(lines) == 3
    back = fileio.read_results_csv(text)
    assert fileio.write_results_csv(back) == text


def test_results_csv_bad_header():
    with pytest.raises(SchemaError):
        fileio.read_results_csv("bogus,header\n")


def test_invalid_json_is_schema_error():
    for reader in (fileio.read_scene_json, fileio.read_annotation_json,
                   fileio.read_calibration_json, fileio.read_filter_params_json):
        with pytest.raises(SchemaError):
            reader("{not json")


def test_readers_survive_fuzzed_bytes():
    rng = np.random.default_rng(1)
    for _ in range(50):
        blob = rng.integers(0, 256, int(rng.integers(0, 200)), dtype=np.uint8).tobytes()
        for reader in (fileio.read_cloud, fileio.read_labels):
            try:
                reader(blob)
            except (TruncatedFileError, InvalidClassError, NonFiniteCoordinateError):
                pass
