"""
Uniform linear array model
==========================

Steering vectors, their angle derivatives, the gridded dictionary and the
snapshot generator with Gaussian noise plus Bernoulli-gated outliers.

Angles are in degrees at every public boundary; derivatives are per radian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """ULA with ``num_elements`` sensors spaced ``element_spacing_over_wavelength`` apart."""

    num_elements: int
    element_spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if int(self.num_elements) != self.num_elements or self.num_elements < 2:
            raise ValueError(f"num_elements must be an integer >= 2, got {self.num_elements}")
        if not self.element_spacing_over_wavelength > 0:
            raise ValueError("element_spacing_over_wavelength must be positive")

    @property
    def phase_scale(self) -> float:
        return 2 * np.pi * self.element_spacing_over_wavelength


@dataclass(frozen=True)
class AngleGrid:
    """Uniform angle grid covering [-90, 90] degrees, both endpoints included."""

    angles_deg: np.ndarray
    spacing_deg: float

    def __post_init__(self):
        a = np.asarray(self.angles_deg, dtype=float)
        if a.ndim != 1 or a.size < 2:
            raise ValueError("grid needs at least two angles")
        if a[0] != -90.0 or a[-1] != 90.0:
            raise ValueError("grid must start at -90 and end at +90 degrees")
        steps = np.diff(a)
        if np.any(steps <= 0) or not np.allclose(steps, self.spacing_deg, rtol=1e-12, atol=1e-12 * 180):
            raise ValueError("grid angles must be strictly increasing and uniformly spaced")
        object.__setattr__(self, "angles_deg", a)

    @classmethod
    def uniform(cls, spacing_deg: float = 2.0) -> "AngleGrid":
        n = 180.0 / spacing_deg
        if not spacing_deg > 0 or abs(n - round(n)) > 1e-9:
            raise ValueError(f"spacing {spacing_deg} must divide 180 degrees evenly")
        n = int(round(n))
        return cls(np.linspace(-90.0, 90.0, n + 1), 180.0 / n)

    @property
    def size(self) -> int:
        return self.angles_deg.size

    def check_sources(self, K: int) -> None:
        if not self.size > 2 * K:
            raise ValueError(f"grid of {self.size} points is too coarse for {K} sources")


@dataclass(frozen=True)
class ArrayScenario:
    """Everything needed to generate one simulated trial.

    ``snr_db=math.inf`` disables the Gaussian noise; ``sor_db=math.inf``
    makes outliers zero-valued.
    """

    geometry: ArrayGeometry
    true_doas_deg: tuple
    num_snapshots: int
    snr_db: float
    sor_db: float = -20.0
    outlier_prob: float = 0.0
    coherent: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        doas = tuple(float(d) for d in np.atleast_1d(self.true_doas_deg))
        object.__setattr__(self, "true_doas_deg", doas)
        if not doas:
            raise ValueError("at least one source is required")
        if any(not -90.0 < d < 90.0 for d in doas):
            raise ValueError("true DOAs must lie strictly inside (-90, 90)")
        if len(set(doas)) != len(doas):
            raise ValueError("true DOAs must be pairwise distinct")
        if int(self.num_snapshots) != self.num_snapshots or self.num_snapshots < 1:
            raise ValueError("num_snapshots must be a positive integer")
        if not 0.0 <= self.outlier_prob <= 1.0:
            raise ValueError("outlier_prob must lie in [0, 1]")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")

    @property
    def num_sources(self) -> int:
        return len(self.true_doas_deg)

    @property
    def noise_variance(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    @property
    def outlier_variance(self) -> float:
        return 10.0 ** (-self.sor_db / 10.0)


@dataclass(frozen=True)
class SnapshotData:
    observations: np.ndarray
    clean_signal: np.ndarray
    gaussian_noise: np.ndarray
    outliers: np.ndarray
    outlier_mask: np.ndarray
    sources: np.ndarray = field(repr=False, default=None)


def _as_angles(angles_deg, *, open_interval: bool = False) -> np.ndarray:
    a = np.atleast_1d(np.asarray(angles_deg, dtype=float))
    if a.ndim != 1 or a.size == 0:
        raise ValueError("angle list must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(a)):
        raise ValueError("angles must be finite")
    if open_interval:
        if np.any(np.abs(a) >= 90.0):
            raise ValueError("angles must lie strictly inside (-90, 90) degrees")
    elif np.any(np.abs(a) > 90.0):
        raise ValueError("angles must lie in [-90, 90] degrees")
    return a


def _phases(geometry: ArrayGeometry, angles_deg: np.ndarray) -> np.ndarray:
    m = np.arange(geometry.num_elements)[:, None]
    return geometry.phase_scale * m * np.sin(np.deg2rad(angles_deg))[None, :]


def steering_vector(geometry: ArrayGeometry, angle_deg: float) -> np.ndarray:
    """Array response ``exp(-j 2 pi (d/lambda) m sin(theta))`` for m = 0..M-1."""
    return steering_matrix(geometry, [angle_deg])[:, 0]


def steering_matrix(geometry: ArrayGeometry, angles_deg: Sequence[float]) -> np.ndarray:
    """Stack steering vectors column-wise, shape ``(M, len(angles_deg))``."""
    a = _as_angles(angles_deg)
    return np.exp(-1j * _phases(geometry, a))


def steering_derivative(geometry: ArrayGeometry, angles_deg: Sequence[float]) -> np.ndarray:
    """Derivative of each steering column with respect to the angle in radians.

    Endpoints are rejected because the derivative vanishes there.
    """
    a = _as_angles(angles_deg, open_interval=True)
    m = np.arange(geometry.num_elements)[:, None]
    factor = -1j * geometry.phase_scale * m * np.cos(np.deg2rad(a))[None, :]
    return factor * np.exp(-1j * _phases(geometry, a))


def _complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synthesize(scenario: ArrayScenario) -> SnapshotData:
    """Generate ``Y = A(theta) S + W + O`` for one trial.

    Sources are unit-modulus with uniform phases. With ``coherent=True`` all
    sources share one phase sequence, each scaled by a fixed random unit
    complex constant. The draw order is fixed, so a given seed always yields
    the same arrays.
    """
    rng = np.random.default_rng(int(scenario.rng_seed))
    geometry = scenario.geometry
    M, T, K = geometry.num_elements, scenario.num_snapshots, scenario.num_sources

    if scenario.coherent:
        common = rng.uniform(0.0, 2 * np.pi, size=T)
        offsets = rng.uniform(0.0, 2 * np.pi, size=K)
        S = np.exp(1j * (offsets[:, None] + common[None, :]))
    else:
        S = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=(K, T)))

    clean = steering_matrix(geometry, scenario.true_doas_deg) @ S

    if math.isinf(scenario.snr_db) and scenario.snr_db > 0:
        noise = np.zeros((M, T), dtype=complex)
    else:
        noise = _complex_gaussian(rng, (M, T), scenario.noise_variance)

    mask = rng.random((M, T)) < scenario.outlier_prob
    if math.isinf(scenario.sor_db) and scenario.sor_db > 0:
        values = np.zeros((M, T), dtype=complex)
    else:
        values = _complex_gaussian(rng, (M, T), scenario.outlier_variance)
    outliers = np.where(mask, values, 0.0)

    return SnapshotData(
        observations=clean + noise + outliers,
        clean_signal=clean,
        gaussian_noise=noise,
        outliers=outliers,
        outlier_mask=mask,
        sources=S,
    )


def trial_seed(master_seed: int, *indices: int) -> int:
    """Derive an independent 64-bit seed for one trial from a master seed."""
    ss = np.random.SeedSequence([int(master_seed), *map(int, indices)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
