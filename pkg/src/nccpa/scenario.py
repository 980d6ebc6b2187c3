"""Physical scene: BS array, UT placement and per-path geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

SPEED_OF_LIGHT = 3.0e8  # m/s; gives lambda_c = 0.01 m at 30 GHz exactly
MAX_RETRIES = 100


class ConfigError(ValueError):
    """Raised for invalid or inconsistent scenario parameters."""


@dataclass(frozen=True)
class ScenarioConfig:
    """All physical and experiment parameters.

    Defaults reproduce the full-scale simulation setup (30 GHz, 256-element
    half-wavelength ULA, 16 UTs, 6 paths, 12 distance rings, beta 1.8).
    Angles in ``ut_angle_range`` and ``angular_dispersion`` are physical
    azimuths in radians measured from array broadside.
    """

    carrier_frequency: float = 30e9
    num_antennas: int = 256
    antenna_spacing: float | None = None  # None -> half wavelength
    num_uts: int = 16
    num_paths: int = 6
    paths_detected: int = 12
    num_distance_samples: int = 12
    beta_delta: float = 1.8
    num_covariance_draws: int = 500
    chart_dimension: int = 2
    pilot_length: int = 4
    snr: float = 10.0  # linear
    rng_seed: int = 0
    ut_angle_range: tuple[float, float] = (-math.pi / 3, math.pi / 3)
    ut_distance_range: tuple[float, float] = (5.0, 70.0)
    angular_dispersion: float = math.pi / 6
    # relative width of the per-path distance window around the UT mean distance
    distance_dispersion: float = 0.2
    # None -> unit large-scale gain for every UT
    pathloss_exponent: float | None = None
    # redraw path angles/distances on every covariance draw instead of fixing them
    redraw_paths: bool = False
    k_neighbors: int | None = None
    feature_method: str = "projection"
    num_rate_trials: int = 50

    def __post_init__(self):
        if self.antenna_spacing is None:
            object.__setattr__(self, "antenna_spacing", self.wavelength / 2)
        object.__setattr__(self, "ut_angle_range", tuple(float(x) for x in self.ut_angle_range))
        object.__setattr__(self, "ut_distance_range", tuple(float(x) for x in self.ut_distance_range))
        self.validate()

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    def validate(self):
        checks = [
            (self.carrier_frequency > 0, "carrier_frequency must be positive"),
            (self.num_antennas >= 2, "num_antennas must be >= 2"),
            (self.antenna_spacing > 0, "antenna_spacing must be positive"),
            (self.num_uts >= 2, "num_uts must be >= 2"),
            (2 <= self.pilot_length <= self.num_uts, "pilot_length must lie in [2, num_uts]"),
            (self.num_paths >= 1, "num_paths must be >= 1"),
            (self.paths_detected >= 1, "paths_detected must be >= 1"),
            (self.num_distance_samples >= 1, "num_distance_samples must be >= 1"),
            (self.chart_dimension >= 1, "chart_dimension must be >= 1"),
            (self.beta_delta > 0, "beta_delta must be positive"),
            (self.num_covariance_draws >= 1, "num_covariance_draws must be >= 1"),
            (self.snr > 0, "snr must be positive"),
            (self.angular_dispersion >= 0, "angular_dispersion must be >= 0"),
            (self.distance_dispersion >= 0, "distance_dispersion must be >= 0"),
            (self.num_rate_trials >= 1, "num_rate_trials must be >= 1"),
            (self.feature_method in ("projection", "somp"), "feature_method must be 'projection' or 'somp'"),
            (self.k_neighbors is None or self.k_neighbors >= 1, "k_neighbors must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        lo, hi = self.ut_angle_range
        if not (-math.pi / 2 < lo <= hi < math.pi / 2):
            raise ConfigError("ut_angle_range must lie inside (-pi/2, pi/2)")
        lo, hi = self.ut_distance_range
        if not (0 < lo <= hi):
            raise ConfigError("ut_distance_range must satisfy 0 < low <= high")
        if hi >= rayleigh_distance(self):
            raise ConfigError(
                f"ut_distance_range upper bound {hi} m is not below the "
                f"Rayleigh distance {rayleigh_distance(self):.4f} m"
            )

    def with_updates(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


def rayleigh_distance(config: ScenarioConfig) -> float:
    """Near-field boundary ``2 M^2 d^2 / lambda_c`` in meters."""
    return array_rayleigh_distance(config.num_antennas, config.antenna_spacing, config.wavelength)


def array_rayleigh_distance(num_antennas: int, spacing: float, wavelength: float) -> float:
    return 2.0 * num_antennas * num_antennas * spacing * spacing / wavelength


@dataclass
class UtGeometry:
    """Per-UT multipath geometry.

    ``angles`` are direction sines, ``distances`` in meters, both shaped
    ``(K, L)``. ``gains`` is one nominal CN(0, 1) realization of the path
    gains. ``mean_azimuths`` / ``mean_distances`` locate each UT.
    """

    angles: np.ndarray
    distances: np.ndarray
    gains: np.ndarray
    large_scale_gain: np.ndarray
    mean_azimuths: np.ndarray
    mean_distances: np.ndarray
    path_azimuths: np.ndarray = field(repr=False, default=None)

    @property
    def num_uts(self) -> int:
        return self.angles.shape[0]

    @property
    def num_paths(self) -> int:
        return self.angles.shape[1]

    def positions(self) -> np.ndarray:
        """UT mean positions as a ``2 x K`` array (x along broadside, y along the array)."""
        return np.vstack([
            self.mean_distances * np.cos(self.mean_azimuths),
            self.mean_distances * np.sin(self.mean_azimuths),
        ])


def complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Circularly-symmetric CN(0, 1) samples."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)


def draw_paths(config: ScenarioConfig, mean_azimuth, mean_distance, rng: np.random.Generator, size):
    """Scatter path azimuths and distances around UT mean locations.

    ``mean_azimuth`` / ``mean_distance`` broadcast against ``size``. Azimuths
    are uniform within ``angular_dispersion / 2`` of the mean; distances are
    uniform within ``distance_dispersion / 2`` (relative) of the mean, with
    draws outside ``ut_distance_range`` redrawn.
    """
    d_lo, d_hi = config.ut_distance_range
    limit = rayleigh_distance(config)
    half_az = config.angular_dispersion / 2
    half_rel = config.distance_dispersion / 2
    mean_distance = np.broadcast_to(np.asarray(mean_distance, dtype=float), size)

    azimuth = np.asarray(mean_azimuth) + rng.uniform(-half_az, half_az, size=size)
    dist = np.full(size, np.nan)
    todo = np.ones(size, dtype=bool)
    for _ in range(MAX_RETRIES):
        n = int(todo.sum())
        if n == 0:
            break
        cand = mean_distance[todo] * (1.0 + rng.uniform(-half_rel, half_rel, size=n))
        ok = (cand >= d_lo) & (cand <= d_hi) & (cand < limit)
        idx = np.flatnonzero(todo)
        dist.flat[idx[ok]] = cand[ok]
        todo.flat[idx[ok]] = False
    if todo.any():
        raise ConfigError(
            f"could not place {int(todo.sum())} path(s) inside the distance range "
            f"after {MAX_RETRIES} retries"
        )
    return azimuth, dist


def place_uts(config: ScenarioConfig, rng: np.random.Generator) -> UtGeometry:
    """Draw UT locations and per-path scatterer geometry.

    Each UT gets a mean azimuth and distance drawn uniformly over the
    configured ranges; its ``L`` paths are scattered around that location
    by :func:`draw_paths`.
    """
    K, L = config.num_uts, config.num_paths
    a_lo, a_hi = config.ut_angle_range
    d_lo, d_hi = config.ut_distance_range

    mean_az = rng.uniform(a_lo, a_hi, size=K)
    mean_dist = rng.uniform(d_lo, d_hi, size=K)
    path_az, dist = draw_paths(config, mean_az[:, None], mean_dist[:, None], rng, (K, L))
    gains = complex_normal(rng, (K, L))

    if config.pathloss_exponent is None:
        xi = np.ones(K)
    else:
        xi = (mean_dist / d_lo) ** (-config.pathloss_exponent)

    return UtGeometry(
        angles=np.sin(path_az),
        distances=dist,
        gains=gains,
        large_scale_gain=xi,
        mean_azimuths=mean_az,
        mean_distances=mean_dist,
        path_azimuths=path_az,
    )
