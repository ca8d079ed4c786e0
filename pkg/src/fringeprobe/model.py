"""Closed-form scalar field models of the two-beam crossing.

Coordinates: ``z`` is the symmetry axis of the two beams, ``y`` the
transverse direction normal to the fringes (and to the wire). Beam 1
travels along ``(0, -sin(alpha/2), cos(alpha/2))`` and beam 2 along
``(0, +sin(alpha/2), cos(alpha/2))``. Both beams are in phase at
``y = pattern_offset``.

Every function accepts numpy arrays for its position/angle argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .errors import DomainError

PLANCK = 6.62607015e-34
HBAR = PLANCK / (2.0 * math.pi)


@dataclass(frozen=True)
class FieldSample:
    """Undisturbed field and its Babinet split at ``position``.

    ``e0 == e_wire + e_slit`` holds exactly (in floating point) by
    construction.
    """

    position: float
    e0: float
    e_wire: float
    e_slit: float


@dataclass(frozen=True)
class MomentumProfile:
    positions: np.ndarray
    g_z: np.ndarray
    particle_momenta: tuple

    def to_dict(self) -> dict:
        return {
            "positions_m": [float(v) for v in self.positions],
            "g_z": [float(v) for v in self.g_z],
            "particle_momenta": [[float(c) for c in p] for p in self.particle_momenta],
        }


def fringe_spacing(config: ExperimentConfig) -> float:
    """Distance between adjacent dark fringes, ``wavelength / crossing_angle``."""
    return config.wavelength / config.crossing_angle


def wavenumber(config: ExperimentConfig) -> float:
    return 2.0 * math.pi / config.wavelength


def fringe_wavenumber(config: ExperimentConfig) -> float:
    """Argument scale of the cos^2 fringe factor, ``k sin(alpha/2)``.

    The exact fringe period is ``pi / fringe_wavenumber``, which equals
    ``fringe_spacing`` up to a relative ``alpha**2 / 24``.
    """
    return wavenumber(config) * math.sin(config.crossing_angle / 2.0)


def beam_directions(config: ExperimentConfig) -> tuple:
    half = config.crossing_angle / 2.0
    k1 = np.array([0.0, -math.sin(half), math.cos(half)])
    k2 = np.array([0.0, math.sin(half), math.cos(half)])
    return k1, k2


def gaussian_envelope(config: ExperimentConfig, y):
    u = (np.asarray(y, dtype=float) - config.pattern_offset) / config.gaussian_radius
    return np.exp(-0.5 * u * u)


def fringe_factor(config: ExperimentConfig, y):
    """``cos^2[k (y - y0) sin(alpha/2)]``."""
    phase = fringe_wavenumber(config) * (np.asarray(y, dtype=float) - config.pattern_offset)
    return np.cos(phase) ** 2


def intersection_intensity(config: ExperimentConfig, y):
    """Relative intensity across the beam crossing.

    Gaussian envelope of radius ``gaussian_radius`` times
    ``a + cos^2[k (y - y0) sin(alpha/2)]``. The peak value at ``y0`` is
    ``1 + a``; absolute scaling is left to callers.
    """
    return gaussian_envelope(config, y) * (config.amplitude_asymmetry + fringe_factor(config, y))


def single_beam_intensity(config: ExperimentConfig, y):
    """Gaussian flux profile left when one beam is blocked."""
    return gaussian_envelope(config, y)


def slit_intensity(config: ExperimentConfig, theta):
    """Fraunhofer intensity of a slit of width ``wire_thickness``.

    ``sinc^2[(k dy / 2) sin(theta)]`` normalized to 1 at ``theta = 0``.

    Raises:
        DomainError: if any ``|theta| >= pi/2``.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) >= math.pi / 2):
        raise DomainError("slit_intensity requires |theta| < pi/2")
    u = 0.5 * wavenumber(config) * config.wire_thickness * np.sin(theta)
    # np.sinc is the normalized sinc, sin(pi x) / (pi x)
    return np.sinc(u / math.pi) ** 2


def undisturbed_field(config: ExperimentConfig, y):
    """Signed scalar amplitude whose square is :func:`intersection_intensity`.

    The sign follows ``cos[k (y - y0) sin(alpha/2)]`` so the field changes
    sign across each dark fringe, as the sum of two in-phase beams does.
    """
    y = np.asarray(y, dtype=float)
    phase = fringe_wavenumber(config) * (y - config.pattern_offset)
    sign = np.where(np.cos(phase) < 0.0, -1.0, 1.0)
    return sign * np.sqrt(intersection_intensity(config, y))


def in_footprint(config: ExperimentConfig, y_wire: float, y):
    return np.abs(np.asarray(y, dtype=float) - y_wire) <= 0.5 * config.wire_thickness


def babinet_fields(config: ExperimentConfig, y_wire: float, y):
    """Vectorized Babinet split: returns ``(e0, e_wire, e_slit)`` arrays.

    The complementary slit passes the undisturbed field on the wire
    footprint ``[y_wire - dy/2, y_wire + dy/2]``; the wire passes the rest.
    """
    e0 = undisturbed_field(config, y)
    inside = in_footprint(config, y_wire, y)
    e_slit = np.where(inside, e0, 0.0)
    e_wire = e0 - e_slit
    return e0, e_wire, e_slit


def babinet_decompose(config: ExperimentConfig, y_wire: float, y: float) -> FieldSample:
    e0, e_wire, e_slit = babinet_fields(config, y_wire, y)
    return FieldSample(position=float(y), e0=float(e0), e_wire=float(e_wire),
                       e_slit=float(e_slit))


def field_momentum_density(config: ExperimentConfig, y, beam: int | None = None,
                           amplitude: float = 1.0):
    """Time-averaged field momentum density, shape ``y.shape + (3,)``.

    Units fold in epsilon_0 and c: a single beam of amplitude ``E0``
    carries ``E0**2 / 2`` along its own direction, uniformly in ``y``
    (``beam=1`` or ``beam=2``). With both beams present (``beam=None``) the
    density points along ``z`` with magnitude ``2 (a + cos^2[...])``; its
    fringe average equals the sum of the two single-beam densities.
    """
    y = np.asarray(y, dtype=float)
    if beam is not None:
        if beam not in (1, 2):
            raise DomainError(f"beam must be 1 or 2, got {beam!r}")
        direction = beam_directions(config)[beam - 1]
        magnitude = np.full(y.shape, 0.5 * amplitude**2)
        return magnitude[..., None] * direction
    g_z = 2.0 * (config.amplitude_asymmetry + fringe_factor(config, y))
    out = np.zeros(y.shape + (3,))
    out[..., 2] = g_z
    return out


def particle_momenta(config: ExperimentConfig) -> tuple:
    """Photon momenta ``(p k1, p k2)`` in SI units, ``p = h / wavelength``.

    Nothing here depends on the wire: crossing photons keep the momenta
    they had in their own beams.
    """
    p = PLANCK / config.wavelength
    k1, k2 = beam_directions(config)
    return p * k1, p * k2


def momentum_profile(config: ExperimentConfig, positions) -> MomentumProfile:
    positions = np.asarray(positions, dtype=float)
    g = field_momentum_density(config, positions)
    return MomentumProfile(positions=positions, g_z=g[..., 2],
                           particle_momenta=particle_momenta(config))
