"""Photon accounting for the wire scan and synthetic scan generation.

Counts are in photons: the flux profile across the crossing is scaled by a
constant chosen so the flux through the intersection window equals
``config.photon_budget``. Because the same constant multiplies the blocked
flux, the fractional count does not depend on it.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from decimal import Decimal
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import model
from .config import ExperimentConfig
from .errors import DomainError, ScanFormatError
from .numerics import QuadratureSpec, integrate, integrate_batch

# Lengths are in metres, so absolute tolerances must be far below 1e-10.
FLUX_QUAD = QuadratureSpec(abs_tol=1e-30, rel_tol=1e-12)
# Wire-wide strips span a small fraction of a fringe and need few panels.
STRIP_QUAD = QuadratureSpec(abs_tol=1e-30, rel_tol=1e-9, initial_panels=2)
ANGLE_QUAD = QuadratureSpec(abs_tol=1e-30, rel_tol=1e-10)

# Mean count above which Poisson draws switch from inversion to a normal
# approximation.
POISSON_INVERSION_LIMIT = 30.0


class ScanMode(str, enum.Enum):
    BOTH_BEAMS = "both_beams"
    ONE_BEAM_BLOCKED = "one_beam_blocked"


# ---------------------------------------------------------------------------
# Diffraction capture


def acceptance_half_angle(config: ExperimentConfig) -> float:
    """Half-angle about the beam axis over which diffracted light is collected.

    ``full`` convention: ``atan(aperture / L)``; ``half`` convention:
    ``atan(aperture / 2L)``.
    """
    extent = config.detector_aperture
    if config.aperture_convention == "half":
        extent = 0.5 * extent
    return math.atan(extent / config.wire_to_detector)


def _sinc_zeros(beta: float, upto: float) -> list:
    # zeros of sinc^2(beta sin theta) in (0, upto): sin(theta) = n pi / beta
    zeros = []
    n = 1
    while n * math.pi < beta:
        theta = math.asin(n * math.pi / beta)
        if theta >= upto:
            break
        zeros.append(theta)
        n += 1
    return zeros


@lru_cache(maxsize=64)
def _capture_fraction(wavelength: float, wire_thickness: float, half_angle: float) -> float:
    beta = math.pi * wire_thickness / wavelength
    edge = math.pi / 2

    def pattern(theta):
        u = beta * np.sin(theta)
        return np.sinc(u / math.pi) ** 2

    # Even integrand: integrate [0, edge] and split at every diffraction zero.
    total = integrate(pattern, 0.0, edge, ANGLE_QUAD, points=_sinc_zeros(beta, edge))
    if half_angle <= 0.0:
        return 0.0
    if half_angle >= edge:
        return 1.0
    captured = integrate(pattern, 0.0, half_angle, ANGLE_QUAD,
                         points=_sinc_zeros(beta, half_angle))
    return captured / total


def capture_fraction(config: ExperimentConfig, half_angle: float | None = None) -> float:
    """Fraction of slit-diffracted light that lands inside the detector aperture.

    Ratio of the slit pattern integrated over ``|theta| <= half_angle`` to
    the pattern integrated over the whole forward half-space. ``half_angle``
    defaults to :func:`acceptance_half_angle`.
    """
    if half_angle is None:
        half_angle = acceptance_half_angle(config)
    if half_angle < 0:
        raise DomainError("acceptance half-angle must be >= 0")
    return _capture_fraction(config.wavelength, config.wire_thickness, float(half_angle))


# ---------------------------------------------------------------------------
# Flux integrals


def intersection_window(config: ExperimentConfig) -> tuple:
    half = 0.5 * config.intersection_width
    return config.pattern_offset - half, config.pattern_offset + half


def _profile(config: ExperimentConfig, mode: ScanMode):
    if ScanMode(mode) is ScanMode.ONE_BEAM_BLOCKED:
        return lambda y: model.single_beam_intensity(config, y)
    return lambda y: model.intersection_intensity(config, y)


@lru_cache(maxsize=512)
def window_flux(config: ExperimentConfig, mode: ScanMode = ScanMode.BOTH_BEAMS) -> float:
    """Unnormalized profile integrated across the intersection window."""
    lo, hi = intersection_window(config)
    return integrate(_profile(config, mode), lo, hi, FLUX_QUAD)


def flux_scale(config: ExperimentConfig, mode: ScanMode = ScanMode.BOTH_BEAMS) -> float:
    """Photons per unit of integrated profile (the normalization constant)."""
    return config.photon_budget / window_flux(config, mode)


def total_photons(config: ExperimentConfig, mode: ScanMode = ScanMode.BOTH_BEAMS) -> float:
    """Photons crossing the intersection window: ``photon_budget`` by construction."""
    return float(config.photon_budget)


def strip_photons(config: ExperimentConfig, lo, hi,
                  mode: ScanMode = ScanMode.BOTH_BEAMS,
                  spec: QuadratureSpec = STRIP_QUAD) -> np.ndarray:
    """Photons crossing each strip ``[lo[i], hi[i]]`` of the crossing plane."""
    raw = integrate_batch(_profile(config, mode), lo, hi, spec)
    return flux_scale(config, mode) * raw


def photons_blocked(config: ExperimentConfig, y_wire, mode: ScanMode = ScanMode.BOTH_BEAMS):
    """Photons stopped by the wire centred at ``y_wire`` (scalar or array)."""
    y_wire = np.asarray(y_wire, dtype=float)
    half = 0.5 * config.wire_thickness
    counts = strip_photons(config, (y_wire - half).ravel(), (y_wire + half).ravel(), mode)
    return counts.reshape(y_wire.shape) if y_wire.ndim else float(counts[0])


def photons_through_slit(config: ExperimentConfig, y_wire, mode: ScanMode = ScanMode.BOTH_BEAMS):
    """Photons passed by the complementary slit; equal to the blocked count."""
    return photons_blocked(config, y_wire, mode)


def photons_past_wire(config: ExperimentConfig, y_wire: float,
                      mode: ScanMode = ScanMode.BOTH_BEAMS) -> float:
    """Window flux outside the wire footprint, integrated independently."""
    lo, hi = intersection_window(config)
    half = 0.5 * config.wire_thickness
    pieces = [(lo, min(hi, y_wire - half)), (max(lo, y_wire + half), hi)]
    pieces = [(a, b) for a, b in pieces if a < b]
    if not pieces:
        return 0.0
    a, b = zip(*pieces)
    return float(strip_photons(config, np.array(a), np.array(b), mode, FLUX_QUAD).sum())


def overlap_photons(config: ExperimentConfig, y_wire: float) -> float:
    """Scaled overlap integral of the undisturbed and slit fields.

    Integrates ``e0 * e_slit`` over the window and the footprint, split at
    the footprint edges where ``e_slit`` jumps.
    """
    lo, hi = intersection_window(config)
    half = 0.5 * config.wire_thickness
    lo, hi = min(lo, y_wire - half), max(hi, y_wire + half)

    def overlap(y):
        e0, _, e_slit = model.babinet_fields(config, y_wire, y)
        return e0 * e_slit

    raw = integrate(overlap, lo, hi, FLUX_QUAD, points=(y_wire - half, y_wire + half))
    return flux_scale(config) * raw


def detected_photons(config: ExperimentConfig, y_wire, mode: ScanMode = ScanMode.BOTH_BEAMS):
    """Photons reaching the detectors: ``N0 - 2 N_blocked + eta N_slit``."""
    eta = capture_fraction(config)
    n_blocked = photons_blocked(config, y_wire, mode)
    n_slit = n_blocked
    return total_photons(config, mode) - 2.0 * n_blocked + eta * n_slit


def fractional_count(config: ExperimentConfig, y_wire, mode: ScanMode = ScanMode.BOTH_BEAMS):
    """Detected fraction ``(N0 - (2 - eta) N_blocked) / N0`` with the wire at ``y_wire``."""
    eta = capture_fraction(config)
    n0 = total_photons(config, mode)
    return (n0 - (2.0 - eta) * photons_blocked(config, y_wire, mode)) / n0


def fractional_count_single_beam(config: ExperimentConfig, y_wire):
    """As :func:`fractional_count` with a purely Gaussian flux profile (one beam blocked)."""
    return fractional_count(config, y_wire, ScanMode.ONE_BEAM_BLOCKED)


# ---------------------------------------------------------------------------
# Synthetic scans


@dataclass(frozen=True)
class ScanSeries:
    positions: tuple
    f: tuple
    f_err: tuple
    mode: ScanMode = ScanMode.BOTH_BEAMS
    meta: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(float(v) for v in self.positions))
        object.__setattr__(self, "f", tuple(float(v) for v in self.f))
        object.__setattr__(self, "f_err", tuple(float(v) for v in self.f_err))
        object.__setattr__(self, "mode", ScanMode(self.mode))
        object.__setattr__(self, "meta", {str(k): str(v) for k, v in self.meta.items()})
        if not (len(self.positions) == len(self.f) == len(self.f_err)):
            raise DomainError("positions, f and f_err must have equal length")
        if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
            raise DomainError("wire positions must be strictly increasing")
        if any(e < 0 for e in self.f_err):
            raise DomainError("f_err must be >= 0")
        if any(not (math.isfinite(v) and v >= 0.0) for v in self.f):
            raise DomainError("f must be finite and >= 0")

    def __len__(self):
        return len(self.positions)

    def outliers(self) -> list:
        """Indices with ``f > 1 + 3 f_err``; noisy scans may legitimately have a few."""
        return [i for i, (v, e) in enumerate(zip(self.f, self.f_err)) if v > 1.0 + 3.0 * e]

    def arrays(self) -> tuple:
        return np.array(self.positions), np.array(self.f), np.array(self.f_err)


def scan_positions(config: ExperimentConfig, n: int) -> np.ndarray:
    """``n`` evenly spaced wire positions spanning the intersection window."""
    lo, hi = intersection_window(config)
    return np.linspace(lo, hi, n)


def poisson_draw(mean: float, rng: np.random.Generator) -> int:
    """One Poisson variate: inversion below the limit, rounded normal above."""
    if mean < 0 or not math.isfinite(mean):
        raise DomainError(f"Poisson mean must be finite and >= 0, got {mean!r}")
    if mean < POISSON_INVERSION_LIMIT:
        u = rng.random()
        k = 0
        p = math.exp(-mean)
        cdf = p
        while u > cdf and p > 0.0:
            k += 1
            p *= mean / k
            cdf += p
        return k
    return max(0, int(round(mean + math.sqrt(mean) * rng.standard_normal())))


def point_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for scan point ``index``; order of evaluation is irrelevant."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def simulate_scan(config: ExperimentConfig, positions, photons_per_point: float,
                  seed: int, mode: ScanMode = ScanMode.BOTH_BEAMS,
                  noise_free: bool = False) -> ScanSeries:
    """Emulate a wire scan with counting noise.

    Each point's detected count is Poisson with mean
    ``photons_per_point * f(position)``; ``f_hat = count / photons_per_point``
    and ``f_err = sqrt(count) / photons_per_point``. With ``noise_free`` the
    count is the mean itself.
    """
    if photons_per_point < 1:
        raise DomainError("photons_per_point must be >= 1")
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        raise DomainError("positions must be non-empty")
    mode = ScanMode(mode)
    f_model = np.atleast_1d(fractional_count(config, positions, mode))
    means = photons_per_point * f_model
    if noise_free:
        counts = means
    else:
        counts = np.array([poisson_draw(m, point_rng(seed, i)) for i, m in enumerate(means)],
                          dtype=float)
    meta = {
        "mode": mode.value,
        "seed": int(seed),
        "config_hash": config.config_hash(),
        "photons_per_point": repr(float(photons_per_point)),
        "noise_free": str(bool(noise_free)).lower(),
    }
    return ScanSeries(positions=positions, f=counts / photons_per_point,
                      f_err=np.sqrt(counts) / photons_per_point, mode=mode, meta=meta)


# ---------------------------------------------------------------------------
# CSV round trip

CSV_HEADER = "position_mm,f,f_err"


def _metres_to_mm_text(value: float) -> str:
    # Shift the shortest round-trip decimal; parsing shifts back exactly.
    return format(Decimal(repr(value)).scaleb(3), "f")


def _mm_text_to_metres(text: str) -> float:
    return float(Decimal(text).scaleb(-3))


def format_scan(scan: ScanSeries) -> str:
    out = io.StringIO()
    for key in sorted(scan.meta):
        out.write(f"# {key}: {scan.meta[key]}\n")
    if "mode" not in scan.meta:
        out.write(f"# mode: {scan.mode.value}\n")
    out.write(CSV_HEADER + "\n")
    for y, f, e in zip(scan.positions, scan.f, scan.f_err):
        out.write(f"{_metres_to_mm_text(y)},{f!r},{e!r}\n")
    return out.getvalue()


def parse_scan(text: str) -> ScanSeries:
    """Inverse of :func:`format_scan`; bit-exact for every float."""
    meta = {}
    rows = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line.strip() != CSV_HEADER:
                raise ScanFormatError(f"line {lineno}: expected header {CSV_HEADER!r}")
            header_seen = True
            continue
        parts = line.strip().split(",")
        if len(parts) != 3:
            raise ScanFormatError(f"line {lineno}: expected 3 columns")
        try:
            rows.append((_mm_text_to_metres(parts[0]), float(parts[1]), float(parts[2])))
        except (ValueError, ArithmeticError):
            raise ScanFormatError(f"line {lineno}: non-numeric field") from None
    if not header_seen:
        raise ScanFormatError("missing CSV header")
    try:
        mode = ScanMode(meta.get("mode", ScanMode.BOTH_BEAMS.value))
    except ValueError:
        raise ScanFormatError(f"unknown scan mode {meta.get('mode')!r}") from None
    positions, f, f_err = zip(*rows) if rows else ((), (), ())
    try:
        return ScanSeries(positions=positions, f=f, f_err=f_err, mode=mode, meta=meta)
    except DomainError as exc:
        raise ScanFormatError(str(exc)) from exc


def write_scan(scan: ScanSeries, path) -> None:
    Path(path).write_text(format_scan(scan), encoding="utf-8")


def read_scan(path) -> ScanSeries:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScanFormatError(f"cannot read scan {path}: {exc}") from exc
    return parse_scan(text)
