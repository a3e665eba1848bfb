"""Environment condition profiles and their per-sensor degradation tables.

A profile is weather x illumination. Weather and darkness degrade the camera
(noise up, contrast down) much more than the active range sensors; the radar
speed channel is the most consistent of the three across every profile.
"""

from __future__ import annotations

from dataclasses import dataclass

WEATHERS = ("Clear", "Drizzle", "Rainy", "Storm")
ILLUMINATIONS = ("Day", "Sunset", "Night", "Dark")

# camera noise sigma / contrast-retention factors, one entry per level
_W_NOISE = {"Clear": 0.0, "Drizzle": 0.02, "Rainy": 0.05, "Storm": 0.09}
_I_NOISE = {"Day": 0.0, "Sunset": 0.012, "Night": 0.03, "Dark": 0.05}
_W_CONTRAST = {"Clear": 1.0, "Drizzle": 0.90, "Rainy": 0.75, "Storm": 0.55}
_I_CONTRAST = {"Day": 1.0, "Sunset": 0.85, "Night": 0.60, "Dark": 0.40}

# lidar dropout / range jitter scale with precipitation only (active sensor)
_W_DROPOUT = {"Clear": 0.0, "Drizzle": 0.05, "Rainy": 0.12, "Storm": 0.25}
_W_JITTER = {"Clear": 0.0, "Drizzle": 0.01, "Rainy": 0.02, "Storm": 0.04}

# radar relative-speed noise, m/s
_W_RADAR = {"Clear": 0.0, "Drizzle": 0.02, "Rainy": 0.04, "Storm": 0.06}

# reference for normalizing radar noise into a unitless degradation score
TYPICAL_SPEED = 10.0


@dataclass(frozen=True)
class ConditionProfile:
    """Per-sensor noise parameters for one weather x illumination setting."""

    name: str
    cam_noise_sigma: float
    cam_contrast: float
    lidar_dropout: float
    lidar_range_jitter: float
    radar_noise: float

    def __post_init__(self):
        assert 0.0 <= self.lidar_dropout <= 1.0
        assert 0.0 < self.cam_contrast <= 1.0
        assert min(self.cam_noise_sigma, self.lidar_range_jitter, self.radar_noise) >= 0.0

    def camera_degradation(self) -> float:
        return self.cam_noise_sigma + (1.0 - self.cam_contrast)

    def lidar_degradation(self) -> float:
        return self.lidar_dropout + self.lidar_range_jitter

    def radar_degradation(self) -> float:
        return self.radar_noise / TYPICAL_SPEED


def _build(weather: str, illum: str) -> ConditionProfile:
    return ConditionProfile(
        name=f"{weather}{illum}",
        cam_noise_sigma=_W_NOISE[weather] + _I_NOISE[illum],
        cam_contrast=_W_CONTRAST[weather] * _I_CONTRAST[illum],
        lidar_dropout=_W_DROPOUT[weather],
        lidar_range_jitter=_W_JITTER[weather],
        radar_noise=_W_RADAR[weather],
    )


PROFILES: dict[str, ConditionProfile] = {
    f"{w}{i}": _build(w, i) for w in WEATHERS for i in ILLUMINATIONS
}


def get_profile(name: str) -> ConditionProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise KeyError(
            f"unknown condition {name!r}; expected one of {sorted(PROFILES)}"
        ) from None
