"""Synthetic lane surfaces and the accelerometer drives recorded over them.

A surface is a smooth base (a few long-wavelength sinusoids) plus sparse
Gaussian bumps and dips whose density and height grow with the roughness
class.  A drive samples the elevation along a time-parameterised path and
reports its second time derivative, scaled by a vehicle gain, plus sensor
noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from lanesig.drive import Drive


class Roughness(str, Enum):
    GREEN = "Green"
    YELLOW = "Yellow"
    RED = "Red"

    @classmethod
    def parse(cls, value) -> "Roughness":
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower():
                return member
        raise ValueError(f"unknown roughness class {value!r}")


#: anomalies per metre
ANOMALY_RATE = {Roughness.GREEN: 0.05, Roughness.YELLOW: 0.15, Roughness.RED: 0.4}
#: multiplier on anomaly amplitude
AMPLITUDE_SCALE = {Roughness.GREEN: 0.5, Roughness.YELLOW: 0.75, Roughness.RED: 1.0}


@dataclass(frozen=True)
class SurfaceConfig:
    """Surface model knobs.  Lengths in metres."""

    base_components: int = 4
    base_amplitude_max: float = 0.002
    base_wavelength: tuple[float, float] = (2.0, 40.0)
    width: tuple[float, float] = (0.05, 0.30)
    amplitude: tuple[float, float] = (0.002, 0.020)
    rates: dict = field(default_factory=lambda: dict(ANOMALY_RATE))
    amplitude_scale: dict = field(default_factory=lambda: dict(AMPLITUDE_SCALE))
    #: share of anomalies that are dips (cracks, potholes) rather than bumps
    dip_fraction: float = 0.5
    #: per-lane spread of anomaly height and density around the class values;
    #: 0 makes every lane of a class statistically identical
    texture: float = 0.0

    def __post_init__(self):
        if not 0 <= self.texture < 1:
            raise ValueError("texture must lie in [0, 1)")
        if not 0 <= self.dip_fraction <= 1:
            raise ValueError("dip_fraction must lie in [0, 1]")


@dataclass
class SurfaceProfile:
    lane_id: int
    length_m: float
    resolution_m: float
    elevation: np.ndarray
    roughness_class: Roughness
    anomaly_rate: float
    anomaly_positions: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if not (self.length_m > 0 and self.resolution_m > 0):
            raise ValueError("surface length and resolution must be positive")
        expected = _n_points(self.length_m, self.resolution_m)
        if len(self.elevation) != expected:
            raise ValueError(f"elevation has {len(self.elevation)} points, expected {expected}")

    @property
    def positions(self) -> np.ndarray:
        return np.arange(len(self.elevation)) * self.resolution_m


@dataclass(frozen=True)
class VehicleParams:
    suspension_gain: float = 1.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.suspension_gain > 0:
            raise ValueError("suspension_gain must be positive")
        if not self.noise_std >= 0:
            raise ValueError("noise_std must be non-negative")


@dataclass(frozen=True)
class SpeedProfile:
    """Piecewise-linear speed (m/s) through ``(times, speeds)`` knots."""

    times: np.ndarray
    speeds: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.speeds, dtype=float)
        if t.shape != v.shape or t.ndim != 1 or t.size < 2:
            raise ValueError("speed profile needs matching 1-D times/speeds with >= 2 knots")
        if np.any(np.diff(t) <= 0):
            raise ValueError("speed profile times must be strictly increasing")
        if np.any(v <= 0):
            raise ValueError("speeds must be positive")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "speeds", v)

    @classmethod
    def constant(cls, speed: float, duration_s: float) -> "SpeedProfile":
        return cls(np.array([0.0, duration_s]), np.array([speed, speed]))

    @property
    def duration_s(self) -> float:
        return float(self.times[-1])

    def speed_at(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.speeds)

    def distance(self) -> float:
        """Distance covered over the whole profile."""
        return float(np.trapezoid(self.speeds, self.times))


def _n_points(length_m: float, resolution_m: float) -> int:
    # tolerate representation error, e.g. 500 / 0.01
    return int(math.floor(length_m / resolution_m + 1e-9)) + 1


def gen_surface(seed: int, length_m: float, resolution_m: float, roughness="Green",
                *, lane_id: int = 0, config: SurfaceConfig | None = None) -> SurfaceProfile:
    """Generate a deterministic lane elevation profile.

    >>> gen_surface(7, 500.0, 0.01, "Green").elevation.size
    50001
    """
    if length_m < 1 or not 0 < resolution_m <= length_m:
        raise ValueError(f"invalid surface dimensions length={length_m}, resolution={resolution_m}")
    cls = Roughness.parse(roughness)
    cfg = config or SurfaceConfig()
    rng = np.random.default_rng(seed)
    x = np.arange(_n_points(length_m, resolution_m)) * resolution_m

    k = cfg.base_components
    wavelengths = rng.uniform(*cfg.base_wavelength, size=k)
    phases = rng.uniform(0, 2 * np.pi, size=k)
    weights = rng.uniform(0.2, 1.0, size=k)
    amps = cfg.base_amplitude_max * weights / weights.sum()
    h = (amps[:, None] * np.sin(2 * np.pi * x[None, :] / wavelengths[:, None] + phases[:, None])).sum(0)

    # lane texture comes from its own stream so texture=0 leaves the other draws untouched
    ta, tr = 1.0 + cfg.texture * np.random.default_rng([seed, 1]).uniform(-1, 1, 2)
    rate = cfg.rates[cls] * tr
    count = rng.poisson(rate * length_m)
    centres = np.sort(rng.uniform(0, length_m, size=count))
    # width is the full width at half maximum
    sigmas = rng.uniform(*cfg.width, size=count) / (2 * math.sqrt(2 * math.log(2)))
    heights = (ta * rng.uniform(*cfg.amplitude, size=count) * cfg.amplitude_scale[cls]
               * np.where(rng.random(count) < cfg.dip_fraction, -1.0, 1.0))
    for c, s, a in zip(centres, sigmas, heights):
        lo = np.searchsorted(x, c - 5 * s)
        hi = np.searchsorted(x, c + 5 * s)
        h[lo:hi] += a * np.exp(-0.5 * ((x[lo:hi] - c) / s) ** 2)

    return SurfaceProfile(lane_id=lane_id, length_m=float(length_m), resolution_m=float(resolution_m),
                          elevation=h, roughness_class=cls, anomaly_rate=rate,
                          anomaly_positions=centres, seed=seed)


def gen_speed_profile(seed: int, duration_s: float, v_mean: float, v_frac_std: float,
                      n_segments: int) -> SpeedProfile:
    """Random piecewise-linear speed profile.

    Knot speeds are ``v_mean * max(0.2, 1 + v_frac_std * z)`` with ``z`` the
    standard normal draws of ``numpy.random.default_rng(seed)``, in knot order.
    A single knot gives a constant profile over ``[0, duration_s]``.
    """
    if not v_mean > 0:
        raise ValueError("v_mean must be positive")
    if not 0 <= v_frac_std < 1:
        raise ValueError("v_frac_std must lie in [0, 1)")
    if n_segments < 1 or not duration_s > 0:
        raise ValueError("need n_segments >= 1 and a positive duration")
    z = np.random.default_rng(seed).standard_normal(n_segments)
    speeds = v_mean * np.maximum(0.2, 1.0 + v_frac_std * z)
    if n_segments == 1:
        return SpeedProfile(np.array([0.0, duration_s]), np.repeat(speeds, 2))
    return SpeedProfile(np.linspace(0.0, duration_s, n_segments), speeds)


def simulate_drive(surface: SurfaceProfile, speed: SpeedProfile, vehicle: VehicleParams,
                   fs: float = 1000.0, *, drive_id: str = "") -> Drive:
    """Record vertical acceleration while driving the full length of ``surface``."""
    if not fs > 0:
        raise ValueError("fs must be positive")
    if speed.distance() < surface.length_m:
        raise ValueError(
            f"speed profile covers {speed.distance():.1f} m, surface is {surface.length_m:.1f} m long")
    n_max = int(math.ceil(speed.duration_s * fs)) + 1
    v = speed.speed_at(np.arange(n_max) / fs)
    x = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) / fs)])
    n = int(np.searchsorted(x, surface.length_m, side="right"))
    x = x[:n]
    h = np.interp(x, surface.positions, surface.elevation)
    acc = np.zeros(n)
    if n >= 3:
        acc[1:-1] = (h[2:] - 2 * h[1:-1] + h[:-2]) * fs * fs
        acc[0], acc[-1] = acc[1], acc[-2]
    acc *= vehicle.suspension_gain
    if vehicle.noise_std > 0:
        acc += np.random.default_rng(vehicle.seed).normal(0.0, vehicle.noise_std, n)
    return Drive(
        samples=acc,
        sample_rate_hz=float(fs),
        segments=((0, surface.lane_id),),
        provenance=({"kind": "original", "surface_seed": surface.seed, "lane": surface.lane_id,
                     "gain": vehicle.suspension_gain, "noise_std": vehicle.noise_std},),
        seed=vehicle.seed,
        drive_id=drive_id or f"lane{surface.lane_id}-s{vehicle.seed}",
    )


def count_anomalies(elevation: np.ndarray, threshold: float = 0.001, window: int = 101) -> int:
    """Count contiguous runs where ``|elevation - moving median|`` exceeds ``threshold``."""
    from scipy.ndimage import median_filter

    resid = np.abs(elevation - median_filter(elevation, size=window, mode="nearest"))
    above = resid > threshold
    return int(np.count_nonzero(above[1:] & ~above[:-1]) + above[0])
