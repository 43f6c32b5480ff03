"""AOI geometry, viability rules, scene store, and generator properties."""
import json
from dataclasses import replace
from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from skycount.imagery import (
    Annotation,
    SceneFormatError,
    SceneImage,
    SynthConfig,
    assess_viability,
    define_aoi,
    load_annotations,
    load_scene,
    save_annotations,
    speed_to_px,
    store_scene,
    synth_scene,
)
from skycount.imagery.synth import render_scene


# -- AOI geometry ------------------------------------------------------------


def test_aoi_bounds_paris_like():
    aoi = define_aoi(48.0, 2.0, "TST")
    assert np.isclose(aoi.lon_min, 1.475)
    assert np.isclose(aoi.lon_max, 2.525)
    assert np.isclose(aoi.lat_min, 47.65)
    assert np.isclose(aoi.lat_max, 48.35)


def test_aoi_symmetric_about_origin():
    aoi = define_aoi(0.0, 0.0, "ORIGIN")
    assert np.isclose(aoi.lon_min, -aoi.lon_max)
    assert np.isclose(aoi.lat_min, -aoi.lat_max)


def test_aoi_cell_size():
    aoi = define_aoi(10.0, 20.0, "C")
    assert np.isclose(aoi.cell_width_lon, 0.15)
    assert np.isclose(aoi.cell_height_lat, 0.1)
    # cells tile the AOI without overlap
    lon0, lat0, lon1, lat1 = aoi.cell_bounds(6, 6)
    assert np.isclose(lon1, aoi.lon_max)
    assert np.isclose(lat0, aoi.lat_min)


def test_aoi_latitude_out_of_range():
    with pytest.raises(ValueError):
        define_aoi(89.9, 0.0, "POLE")
    define_aoi(89.65, 0.0, "EDGE")  # boundary is allowed


# -- viability ---------------------------------------------------------------


def _scene_with_stats(cloud, missing):
    stats = np.zeros((7, 7, 2))
    stats[..., 0] = cloud
    stats[..., 1] = missing
    return SceneImage(
        image_id="s",
        aoi_id="a",
        timestamp=datetime(2020, 1, 1),
        pixels=np.zeros((14, 14, 3), dtype=np.float32),
        cell_stats=stats,
    )


def test_viability_cloud_boundary():
    assert not assess_viability(_scene_with_stats(0.31, 0.0)).viable.any()
    assert assess_viability(_scene_with_stats(0.30, 0.10)).viable.all()
    assert assess_viability(_scene_with_stats(0.0, 0.0)).viable.all()
    assert not assess_viability(_scene_with_stats(0.0, 0.101)).viable.any()


@given(
    cloud=st.floats(0, 1), missing=st.floats(0, 1),
    d_cloud=st.floats(0, 1), d_missing=st.floats(0, 1),
)
@settings(max_examples=200, deadline=None)
def test_viability_monotone(cloud, missing, d_cloud, d_missing):
    lower_cloud = max(0.0, cloud - d_cloud)
    lower_missing = max(0.0, missing - d_missing)
    was = assess_viability(_scene_with_stats(cloud, missing)).viable[0, 0]
    now = assess_viability(_scene_with_stats(lower_cloud, lower_missing)).viable[0, 0]
    assert now or not was


# -- synthetic generator -----------------------------------------------------


@pytest.fixture(scope="module")
def small_cfg():
    return SynthConfig(rng_seed=77, image_size=(140, 140), planes_per_image=3.0)


def test_synth_deterministic(small_cfg):
    s1, a1 = synth_scene(small_cfg, 4)
    s2, a2 = synth_scene(small_cfg, 4)
    np.testing.assert_array_equal(s1.pixels, s2.pixels)
    assert a1 == a2
    np.testing.assert_array_equal(s1.cell_stats, s2.cell_stats)


def test_synth_zero_planes():
    cfg = SynthConfig(rng_seed=3, image_size=(98, 98), planes_per_image=0.0)
    for idx in range(5):
        _, anns = synth_scene(cfg, idx)
        assert anns == []


def test_band_gap_displacement_formula():
    # 900 km/h = 250 m/s; over 0.5 s at 10 m/px -> 12.5 px per band gap
    assert np.isclose(speed_to_px(900.0), 12.5)
    assert np.isclose(speed_to_px(1800.0), 25.0)


def test_displacement_bound_rejected():
    with pytest.raises(ValueError):
        SynthConfig(speed_range=(200.0, 1900.0), parallax_offset_range=(0.0, 10.0))


def test_synth_red_blue_span_bound(small_cfg):
    # 2 * (900/72 + 10) = 45 px < 50 px design bound
    assert 2 * small_cfg.max_displacement_px() <= 50.0


def test_annotation_green_above_background(small_cfg):
    for idx in range(8):
        scene, anns = synth_scene(small_cfg, idx)
        mean_green = float(scene.pixels[..., 1].mean())
        for a in anns:
            assert scene.pixels[a.y, a.x, 1] > mean_green


def test_annotations_avoid_artifact_regions():
    cfg = SynthConfig(rng_seed=5, image_size=(140, 140), planes_per_image=3.0, artifact_rate=2.0)
    seen_artifacts = 0
    for idx in range(10):
        _, anns, _, artifact_mask = render_scene(cfg, idx)
        seen_artifacts += int(artifact_mask.any())
        for a in anns:
            assert not artifact_mask[a.y, a.x]
    assert seen_artifacts > 0  # the rate actually injects distractors


def test_synth_cell_stats_follow_cloud_mask():
    cfg = SynthConfig(rng_seed=11, image_size=(140, 140), cloud_density=0.3)
    scene, _, cloud_alpha, _ = render_scene(cfg, 0)
    cloudy = cloud_alpha > 0.5
    ch, cw = 140 // 7, 140 // 7
    for i in range(7):
        for j in range(7):
            frac = cloudy[i * ch : (i + 1) * ch, j * cw : (j + 1) * cw].mean()
            assert np.isclose(scene.cell_stats[i, j, 0], frac)


def test_plane_count_matches_annotations(small_cfg):
    total = 0
    for idx in range(10):
        _, anns = synth_scene(small_cfg, idx)
        total += len(anns)
    assert total > 10  # Poisson(3) over 10 scenes


# -- scene store -------------------------------------------------------------


def test_store_load_round_trip(tmp_path, small_cfg):
    scene, _ = synth_scene(small_cfg, 2)
    path = store_scene(scene, tmp_path)
    loaded = load_scene(path)
    np.testing.assert_array_equal(loaded.pixels, scene.pixels)
    assert loaded.image_id == scene.image_id
    assert loaded.aoi_id == scene.aoi_id
    assert loaded.timestamp == scene.timestamp
    assert loaded.gsd == scene.gsd
    np.testing.assert_allclose(loaded.cell_stats, scene.cell_stats, atol=1e-12)


def _write_raw_scene(tmp_path, size, sidecar_overrides=None, drop=None):
    rng = np.random.default_rng(0)
    raw = rng.integers(0, 255, size=(size, size, 3), dtype=np.uint8)
    png = tmp_path / "X" / "20200101T103000Z.png"
    png.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(raw, "RGB").save(png)
    sidecar = {
        "image_id": "X_20200101T103000Z",
        "aoi_id": "X",
        "timestamp": "20200101T103000Z",
        "gsd_m": 10.0,
        "cell_stats": [[{"cloud": 0.0, "missing": 0.0} for _ in range(7)] for _ in range(7)],
    }
    sidecar.update(sidecar_overrides or {})
    if drop:
        del sidecar[drop]
    png.with_suffix(".json").write_text(json.dumps(sidecar))
    return png, raw


def test_load_pads_to_grid_and_updates_missing(tmp_path):
    png, raw = _write_raw_scene(tmp_path, 450)
    scene = load_scene(png)
    assert scene.pixels.shape == (455, 455, 3)
    # padded pixels are zeros bottom/right
    assert (scene.pixels[450:, :, :] == 0).all()
    assert (scene.pixels[:, 450:, :] == 0).all()
    # 65x65 cells; last row/col carry 5 padded lines -> 5/65 missing
    assert np.isclose(scene.cell_stats[0, 6, 1], 5 / 65)
    assert np.isclose(scene.cell_stats[6, 0, 1], 5 / 65)
    # corner cell: (65^2 - 60^2) / 65^2
    assert np.isclose(scene.cell_stats[6, 6, 1], (65**2 - 60**2) / 65**2)
    assert scene.cell_stats[3, 3, 1] == 0.0


def test_load_missing_timestamp_is_format_error(tmp_path):
    png, _ = _write_raw_scene(tmp_path, 140, drop="timestamp")
    with pytest.raises(SceneFormatError):
        load_scene(png)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_scene(tmp_path / "nope.png")


def test_load_corrupt_sidecar(tmp_path):
    png, _ = _write_raw_scene(tmp_path, 140)
    png.with_suffix(".json").write_text("{not json")
    with pytest.raises(SceneFormatError):
        load_scene(png)


def test_annotations_round_trip(tmp_path):
    anns = [
        Annotation("img-a", 10, 20, "manual"),
        Annotation("img-b", 30, 40, "review"),
    ]
    path = save_annotations(anns, tmp_path / "ann.jsonl")
    assert load_annotations(path) == anns


def test_annotations_bad_record(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"image_id": "a", "x": 1}\n')
    with pytest.raises(ValueError):
        load_annotations(p)
