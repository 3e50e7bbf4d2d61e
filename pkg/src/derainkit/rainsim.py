"""Marshall-Palmer rain injection on the polar beam grid.

A Poisson field of raindrops is sampled over the volume swept by the beams,
with diameters following the truncated exponential drop-size distribution
n(D) = n0 * exp(-lambda * D) on [d_min, d_max], lambda = 4.1 * rate^-0.21
(standard Marshall-Palmer parameters). Each beam is then intersected with the
drop field: the nearest drop closer than the beam's existing return (or than
max range, for unreturned beams) becomes a rain return.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RAIN, LabelSet, SensorCalibration
from .errors import (
    DegenerateBoundsError,
    InvalidInputError,
    LengthMismatchError,
    NonPositiveRateError,
)
from .pgm import PolarGridMap, beam_directions, nearest_angle_index, to_polar

MP_N0_DEFAULT = 8000.0  # m^-3 mm^-1


@dataclass(frozen=True)
class RainConfig:
    """Rain field parameters.

    rate is in mm/h; d_min/d_max bound drop diameters in mm; n0 is the
    drop-size-distribution intercept in m^-3 mm^-1; beam_divergence is the
    beam half-angle in radians; rain_reflectance is the intensity written for
    rain returns.
    """

    rate: float
    d_min: float = 0.5
    d_max: float = 6.0
    n0: float = MP_N0_DEFAULT
    beam_divergence: float = 1e-3
    rain_reflectance: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not self.rate > 0:
            raise NonPositiveRateError("rain rate must be positive")
        if not 0 < self.d_min < self.d_max:
            raise InvalidInputError("need 0 < d_min < d_max")
        if self.beam_divergence < 0:
            raise InvalidInputError("beam_divergence must be non-negative")


@dataclass(frozen=True)
class RainDrop:
    center: np.ndarray  # m
    diameter: float  # mm


class DropField:
    """Vectorized collection of raindrops; indexing yields RainDrop values."""

    def __init__(self, centers: np.ndarray, diameters: np.ndarray):
        self.centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
        self.diameters = np.asarray(diameters, dtype=np.float64).reshape(-1)

    def __len__(self) -> int:
        return self.centers.shape[0]

    def __getitem__(self, i: int) -> RainDrop:
        return RainDrop(self.centers[i], float(self.diameters[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def marshall_palmer_lambda(rate: float):
    """Drop-size-distribution slope in mm^-1: 4.1 * rate^-0.21."""
    if not rate > 0:
        raise NonPositiveRateError("rain rate must be positive")
    return 4.1 * rate ** -0.21


def expected_drop_concentration(config: RainConfig) -> float:
    """Drops per cubic meter: integral of n0 exp(-lambda D) over [d_min, d_max]."""
    lam = marshall_palmer_lambda(config.rate)
    return (config.n0 / lam) * (np.exp(-lam * config.d_min) - np.exp(-lam * config.d_max))


def diameter_cdf(diameters, config: RainConfig):
    """CDF of the truncated exponential diameter distribution on [d_min, d_max]."""
    lam = marshall_palmer_lambda(config.rate)
    d = np.clip(np.asarray(diameters, dtype=np.float64), config.d_min, config.d_max)
    lo = np.exp(-lam * config.d_min)
    hi = np.exp(-lam * config.d_max)
    return (lo - np.exp(-lam * d)) / (lo - hi)


def sample_drop_field(config: RainConfig, bounds) -> DropField:
    """Poisson-sample raindrops uniformly inside an axis-aligned box.

    bounds is a (min_corner, max_corner) pair in meters. Drop count is
    Poisson(concentration * volume); diameters come from the truncated
    exponential via inverse CDF. Fully determined by config.seed.
    """
    lo = np.asarray(bounds[0], dtype=np.float64).reshape(3)
    hi = np.asarray(bounds[1], dtype=np.float64).reshape(3)
    if np.any(hi < lo):
        raise DegenerateBoundsError("bounds max corner below min corner")
    volume = float(np.prod(hi - lo))
    rng = np.random.default_rng(config.seed)
    count = int(rng.poisson(expected_drop_concentration(config) * volume)) if volume > 0 else 0
    if count == 0:
        return DropField(np.empty((0, 3)), np.empty(0))
    centers = rng.uniform(lo, hi, size=(count, 3))
    lam = marshall_palmer_lambda(config.rate)
    u = rng.uniform(0.0, 1.0, count)
    e_lo = np.exp(-lam * config.d_min)
    e_hi = np.exp(-lam * config.d_max)
    diameters = -np.log(e_lo - u * (e_lo - e_hi)) / lam
    return DropField(centers, diameters)


def intersect_beam(origin, direction, drop: RainDrop, divergence: float):
    """Range at which a (possibly diverging) beam hits a drop, or None.

    The beam hits if the drop center projects forward of the origin and its
    perpendicular distance to the ray is within drop radius plus the beam
    footprint t * tan(divergence).
    """
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    direction = np.asarray(direction, dtype=np.float64).reshape(3)
    rel = drop.center - origin
    t = float(rel @ direction)
    if t <= 0:
        return None
    perp = np.linalg.norm(rel - t * direction)
    radius_m = drop.diameter / 2000.0  # mm diameter -> m radius
    if perp <= radius_m + t * np.tan(divergence):
        return t
    return None


def beam_field_bounds(calib: SensorCalibration) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box covering the sensor origin and all beam tips at r_max."""
    tips = beam_directions(calib).reshape(-1, 3) * calib.r_max
    lo = np.minimum(tips.min(axis=0), 0.0)
    hi = np.maximum(tips.max(axis=0), 0.0)
    return lo, hi


def inject_rain(
    pgm: PolarGridMap,
    labels: LabelSet,
    calib: SensorCalibration,
    config: RainConfig,
    occlude_returns: bool = True,
) -> tuple[PolarGridMap, LabelSet]:
    """Inject simulated raindrops into a scan.

    For every beam the nearest intersecting drop with range in
    [r_min, existing return range) becomes a rain return (label 2) at
    rain_reflectance intensity; unreturned beams accept drops out to r_max.
    With occlude_returns=False only unreturned beams can gain rain points.
    Deterministic for fixed inputs.
    """
    v, h = pgm.v, pgm.h
    if labels.count != v * h:
        raise LengthMismatchError(f"labels ({labels.count}) do not match grid ({v * h})")

    drops = sample_drop_field(config, beam_field_bounds(calib))
    new_coords = pgm.coords.copy()
    new_intensity = pgm.intensity.copy()
    new_ranges = pgm.ranges.copy()
    new_unreturned = pgm.unreturned.copy()
    new_labels = labels.labels.copy()
    if len(drops) == 0:
        return (
            PolarGridMap(new_coords, new_intensity, new_ranges, new_unreturned),
            LabelSet(new_labels),
        )

    dirs = beam_directions(calib)
    limits = np.where(pgm.unreturned, calib.r_max, pgm.ranges if occlude_returns else -np.inf)

    nonzero = np.linalg.norm(drops.centers, axis=1) > 0
    centers = drops.centers[nonzero]
    radii = drops.diameters[nonzero] / 2000.0
    c_r, c_az, c_el = to_polar(centers)
    ei = nearest_angle_index(c_el, calib.elevations)
    ai = nearest_angle_index(c_az, calib.azimuths)
    tan_div = np.tan(config.beam_divergence)
    norm2 = np.einsum("ij,ij->i", centers, centers)

    # A drop can only intersect beams in its immediate angular neighborhood
    # (drop radius plus beam footprint stays below the beam spacing at ranges
    # past r_min), so testing the 3x3 neighborhood of the nearest cell covers
    # every geometrically possible hit.
    best = np.full(v * h, np.inf)
    for de in (-1, 0, 1):
        for da in (-1, 0, 1):
            e = np.clip(ei + de, 0, v - 1)
            a = np.clip(ai + da, 0, h - 1)
            d = dirs[e, a]
            t = np.einsum("ij,ij->i", centers, d)
            perp2 = np.maximum(norm2 - t * t, 0.0)
            eff = radii + t * tan_div
            flat = e * h + a
            hit = (t > 0) & (perp2 <= eff * eff) & (t >= calib.r_min) & (t < limits.reshape(-1)[flat])
            np.minimum.at(best, flat[hit], t[hit])

    rained = np.isfinite(best)
    if rained.any():
        idx = np.flatnonzero(rained)
        t_hit = best[idx]
        flat_dirs = dirs.reshape(-1, 3)[idx]
        new_coords.reshape(-1, 3)[idx] = flat_dirs * t_hit[:, None]
        new_intensity.reshape(-1)[idx] = config.rain_reflectance
        new_ranges.reshape(-1)[idx] = t_hit
        new_unreturned.reshape(-1)[idx] = False
        new_labels[idx] = RAIN
    return (
        PolarGridMap(new_coords, new_intensity, new_ranges, new_unreturned),
        LabelSet(new_labels),
    )
