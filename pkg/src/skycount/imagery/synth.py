"""Seeded synthetic Sentinel-2-like scene generator with ground truth.

Each planted airplane is rendered as three single-channel Gaussian blobs:
red at p - d*u, green at p, blue at p + d*u, where u is the unit heading
and d the per-band displacement in pixels (ground speed over the ~0.5 s
band gap, plus a parallax offset). The green center is the ground truth.

Distractors reproduce the detector's hard-negative classes: bright soft
clouds with red/blue parallax fringes, sun-glint clusters, and band
misalignment strips. None of them carries an annotation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta

import numpy as np
from scipy.ndimage import gaussian_filter

from .annotations import Annotation
from .aoi import GRID_COLS, GRID_ROWS
from .scene import DEFAULT_GSD_M, SceneImage, format_timestamp

BAND_GAP_SECONDS = 0.5

# red-to-blue span the 51 px receptive field was sized for (1,800 km/h)
MAX_RED_BLUE_SPAN_PX = 50.0


def speed_to_px(speed_kmh: float, gsd_m: float = DEFAULT_GSD_M) -> float:
    """Ground displacement in pixels over one band gap at a given speed."""
    return speed_kmh / 3.6 * BAND_GAP_SECONDS / gsd_m


@dataclass
class SynthConfig:
    rng_seed: int = 0
    image_size: tuple[int, int] = (448, 448)  # (H, W), multiples of 7
    planes_per_image: float = 2.0             # Poisson mean
    speed_range: tuple[float, float] = (200.0, 900.0)      # km/h
    parallax_offset_range: tuple[float, float] = (0.0, 10.0)  # px
    plane_size_range: tuple[float, float] = (2.0, 6.0)     # px, blob FWHM
    cloud_density: float = 0.05                # target cloud cover fraction
    artifact_rate: float = 0.15                # expected artifact events/scene
    aoi_id: str = "SYNTH"
    start_date: date = date(2019, 6, 1)
    revisit_days: int = 1
    min_separation_px: float = 30.0
    gsd: float = DEFAULT_GSD_M

    def __post_init__(self):
        h, w = self.image_size
        if h % GRID_ROWS or w % GRID_COLS:
            raise ValueError(f"image_size {self.image_size} not divisible by the {GRID_ROWS}x{GRID_COLS} grid")
        if h < 70 or w < 70:
            raise ValueError("image_size too small to hold an airplane pattern")
        for name in ("speed_range", "parallax_offset_range", "plane_size_range"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise ValueError(f"{name} must be a non-empty non-negative interval, got ({lo}, {hi})")
        if self.planes_per_image < 0:
            raise ValueError("planes_per_image must be non-negative")
        span = 2.0 * (speed_to_px(self.speed_range[1], self.gsd) + self.parallax_offset_range[1])
        if span > MAX_RED_BLUE_SPAN_PX:
            raise ValueError(
                f"speed/parallax ranges give a red-blue span of {span:.1f} px, "
                f"beyond the {MAX_RED_BLUE_SPAN_PX:.0f} px design bound"
            )

    def max_displacement_px(self) -> float:
        return speed_to_px(self.speed_range[1], self.gsd) + self.parallax_offset_range[1]

    def pattern_margin_px(self) -> int:
        """Distance from the border that keeps the whole tri-band pattern inside."""
        blob_reach = 3.0 * self.plane_size_range[1] / 2.355
        return int(math.ceil(self.max_displacement_px() + blob_reach)) + 2


def _splat(channel: np.ndarray, cx: float, cy: float, sigma: float, amplitude: float) -> None:
    """Add an axisymmetric Gaussian bump to one channel, in place."""
    h, w = channel.shape
    reach = int(math.ceil(3.0 * sigma)) + 1
    x0, x1 = max(0, int(cx) - reach), min(w, int(cx) + reach + 1)
    y0, y1 = max(0, int(cy) - reach), min(h, int(cy) + reach + 1)
    if x0 >= x1 or y0 >= y1:
        return
    ys = np.arange(y0, y1, dtype=np.float64)[:, None]
    xs = np.arange(x0, x1, dtype=np.float64)[None, :]
    r2 = (xs - cx) ** 2 + (ys - cy) ** 2
    channel[y0:y1, x0:x1] += amplitude * np.exp(-r2 / (2.0 * sigma * sigma))


def _soft_ellipse(shape: tuple[int, int], cx: float, cy: float, a: float, b: float, theta: float) -> np.ndarray:
    """Opacity mask of a rotated ellipse with Gaussian falloff near the rim."""
    h, w = shape
    reach = int(math.ceil(max(a, b))) * 2
    x0, x1 = max(0, int(cx) - reach), min(w, int(cx) + reach + 1)
    y0, y1 = max(0, int(cy) - reach), min(h, int(cy) + reach + 1)
    mask = np.zeros(shape, dtype=np.float64)
    if x0 >= x1 or y0 >= y1:
        return mask
    ys = np.arange(y0, y1, dtype=np.float64)[:, None] - cy
    xs = np.arange(x0, x1, dtype=np.float64)[None, :] - cx
    ct, st = math.cos(theta), math.sin(theta)
    u = (xs * ct + ys * st) / a
    v = (-xs * st + ys * ct) / b
    r = np.sqrt(u * u + v * v)
    mask[y0:y1, x0:x1] = np.clip(np.exp(-((np.maximum(r - 0.6, 0.0) / 0.35) ** 2)), 0.0, 1.0)
    return mask


def _background(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Gaussian-blurred seeded noise in muted earth tones."""
    base = np.array([0.21, 0.24, 0.19])
    img = np.empty((h, w, 3), dtype=np.float64)
    coarse = gaussian_filter(rng.standard_normal((h, w)), sigma=14.0, mode="reflect")
    coarse /= max(1e-9, np.abs(coarse).max())
    fine = gaussian_filter(rng.standard_normal((h, w, 3)), sigma=(2.5, 2.5, 0), mode="reflect")
    fine /= max(1e-9, np.abs(fine).max())
    for c in range(3):
        img[..., c] = base[c] + 0.05 * coarse + 0.035 * fine[..., c]
    return np.clip(img, 0.02, 0.6)


def _add_clouds(rng: np.random.Generator, img: np.ndarray, density: float) -> np.ndarray:
    """Bright soft ellipses with red/blue channels offset by 1-3 px.

    Returns the accumulated cloud opacity mask.
    """
    h, w = img.shape[:2]
    alpha = np.zeros((h, w), dtype=np.float64)
    if density <= 0:
        return alpha
    target = density * h * w
    covered = 0.0
    for _ in range(256):
        if covered >= target:
            break
        a = rng.uniform(8.0, 0.08 * max(h, w) + 12.0)
        b = a * rng.uniform(0.4, 1.0)
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        theta = rng.uniform(0, math.pi)
        brightness = rng.uniform(0.75, 0.95)
        shift = rng.uniform(1.0, 3.0)
        phi = rng.uniform(0, 2 * math.pi)
        dx, dy = shift * math.cos(phi), shift * math.sin(phi)
        green = _soft_ellipse((h, w), cx, cy, a, b, theta)
        red = _soft_ellipse((h, w), cx + dx, cy + dy, a, b, theta)
        blue = _soft_ellipse((h, w), cx - dx, cy - dy, a, b, theta)
        img[..., 0] += red * np.maximum(brightness - img[..., 0], 0.0)
        img[..., 1] += green * np.maximum(brightness - img[..., 1], 0.0)
        img[..., 2] += blue * np.maximum(brightness - img[..., 2], 0.0)
        alpha = np.maximum(alpha, green)
        covered += float((green > 0.5).sum())
    return alpha


def _add_artifacts(rng: np.random.Generator, img: np.ndarray, rate: float) -> np.ndarray:
    """Inject band-misalignment strips and sun-glint clusters; returns their mask."""
    h, w = img.shape[:2]
    mask = np.zeros((h, w), dtype=bool)
    for _ in range(rng.poisson(rate)):
        if rng.random() < 0.5:
            # misalignment strip: red band content slides sideways
            band_h = int(rng.integers(6, max(7, h // 8)))
            y0 = int(rng.integers(0, h - band_h))
            shift = int(rng.integers(2, 5)) * (1 if rng.random() < 0.5 else -1)
            img[y0 : y0 + band_h, :, 0] = np.roll(img[y0 : y0 + band_h, :, 0], shift, axis=1)
            mask[y0 : y0 + band_h, :] = True
        else:
            # sun-glint: cluster of tiny saturated blobs
            gx, gy = rng.uniform(0.1 * w, 0.9 * w), rng.uniform(0.1 * h, 0.9 * h)
            n = int(rng.integers(5, 14))
            spread = rng.uniform(8.0, 22.0)
            for _ in range(n):
                bx = gx + rng.normal(0, spread)
                by = gy + rng.normal(0, spread)
                sigma = rng.uniform(0.7, 1.6)
                amp = rng.uniform(0.5, 0.9)
                ch = int(rng.integers(0, 3)) if rng.random() < 0.4 else None
                if ch is None:
                    for c in range(3):
                        _splat(img[..., c], bx, by, sigma, amp)
                else:
                    _splat(img[..., ch], bx, by, sigma, amp)
            r = int(spread * 2.5)
            yy0, yy1 = max(0, int(gy) - r), min(h, int(gy) + r + 1)
            xx0, xx1 = max(0, int(gx) - r), min(w, int(gx) + r + 1)
            mask[yy0:yy1, xx0:xx1] = True
    return mask


def synth_scene(config: SynthConfig, scene_index: int) -> tuple[SceneImage, list[Annotation]]:
    """Render one deterministic scene for (config.rng_seed, scene_index)."""
    scene, annotations, _, _ = render_scene(config, scene_index)
    return scene, annotations


def render_scene(
    config: SynthConfig, scene_index: int
) -> tuple[SceneImage, list[Annotation], np.ndarray, np.ndarray]:
    """synth_scene plus the generator's cloud-opacity and artifact masks."""
    if scene_index < 0:
        raise ValueError("scene_index must be non-negative")
    rng = np.random.default_rng([abs(int(config.rng_seed)), int(scene_index)])
    h, w = config.image_size

    img = _background(rng, h, w)
    cloud_alpha = _add_clouds(rng, img, config.cloud_density)
    artifact_mask = _add_artifacts(rng, img, config.artifact_rate)

    margin = config.pattern_margin_px()
    n_planes = int(rng.poisson(config.planes_per_image))
    centers: list[tuple[float, float]] = []
    annotations: list[Annotation] = []
    timestamp = datetime.combine(
        config.start_date + timedelta(days=scene_index * config.revisit_days), time(10, 30)
    )
    image_id = f"{config.aoi_id}_{format_timestamp(timestamp)}"

    for _ in range(n_planes):
        placed = None
        for _attempt in range(200):
            px = rng.uniform(margin, w - 1 - margin)
            py = rng.uniform(margin, h - 1 - margin)
            if cloud_alpha[int(py), int(px)] > 0.3 or artifact_mask[int(py), int(px)]:
                continue
            if any((px - qx) ** 2 + (py - qy) ** 2 < config.min_separation_px**2 for qx, qy in centers):
                continue
            placed = (px, py)
            break
        if placed is None:
            continue
        px, py = placed
        centers.append(placed)

        heading = rng.uniform(0, 2 * math.pi)
        ux, uy = math.cos(heading), math.sin(heading)
        speed = rng.uniform(*config.speed_range)
        parallax = rng.uniform(*config.parallax_offset_range)
        d = speed_to_px(speed, config.gsd) + parallax
        size = rng.uniform(*config.plane_size_range)
        sigma = max(0.6, size / 2.355)
        amp = rng.uniform(0.4, 0.9)

        _splat(img[..., 0], px - d * ux, py - d * uy, sigma, amp)  # red trails behind
        _splat(img[..., 1], px, py, sigma, amp)
        _splat(img[..., 2], px + d * ux, py + d * uy, sigma, amp)  # blue leads ahead
        annotations.append(Annotation(image_id=image_id, x=int(round(px)), y=int(round(py)), source="synthetic"))

    # quantize to the 8-bit store grid so store/load round-trips exactly
    img = np.rint(np.clip(img, 0.0, 1.0) * 255.0) / 255.0

    ch, cw = h // GRID_ROWS, w // GRID_COLS
    cloudy = cloud_alpha > 0.5
    cell_stats = np.zeros((GRID_ROWS, GRID_COLS, 2), dtype=np.float64)
    for i in range(GRID_ROWS):
        for j in range(GRID_COLS):
            cell_stats[i, j, 0] = float(cloudy[i * ch : (i + 1) * ch, j * cw : (j + 1) * cw].mean())

    scene = SceneImage(
        image_id=image_id,
        aoi_id=config.aoi_id,
        timestamp=timestamp,
        pixels=img.astype(np.float32),
        gsd=config.gsd,
        cell_stats=cell_stats,
    )
    return scene, annotations, cloud_alpha, artifact_mask
