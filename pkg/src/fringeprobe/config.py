"""Experiment configuration and the ``key = value unit`` config file format.

All quantities are stored in SI units. Config files must state a unit for
every dimensional key, e.g.::

    wavelength = 632 nm
    crossing_angle = 2.97 mrad
    pattern_offset = 0.574 mm
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError

APERTURE_CONVENTIONS = ("full", "half")

_LENGTH_UNITS = {
    "m": 1.0,
    "mm": 1e-3,
    "um": 1e-6,
    "μm": 1e-6,
    "µm": 1e-6,
    "nm": 1e-9,
}
_ANGLE_UNITS = {"rad": 1.0, "mrad": 1e-3, "urad": 1e-6, "μrad": 1e-6, "µrad": 1e-6}

# key -> (kind, canonical unit used when writing files)
_KEYS = {
    "wavelength": ("length", "nm"),
    "crossing_angle": ("angle", "mrad"),
    "wire_thickness": ("length", "um"),
    "intersection_width": ("length", "mm"),
    "splitter_to_wire": ("length", "m"),
    "wire_to_detector": ("length", "m"),
    "detector_aperture": ("length", "mm"),
    "amplitude_asymmetry": ("number", ""),
    "pattern_offset": ("length", "mm"),
    "gaussian_radius": ("length", "mm"),
    "photon_budget": ("number", ""),
    "aperture_convention": ("choice", ""),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Physical parameters of the two-beam wire-scan setup (SI units).

    ``pattern_offset`` is a signed position and may be zero or negative; every
    other length must be strictly positive.
    """

    wavelength: float = 632e-9
    crossing_angle: float = 2.97e-3
    wire_thickness: float = 17e-6
    intersection_width: float = 1.0e-3
    splitter_to_wire: float = 0.454
    wire_to_detector: float = 2.521
    detector_aperture: float = 5e-3
    amplitude_asymmetry: float = 0.05
    pattern_offset: float = 0.574e-3
    gaussian_radius: float = 0.18e-3
    photon_budget: float = 1e6
    aperture_convention: str = "full"

    def __post_init__(self):
        for name in ("wavelength", "wire_thickness", "intersection_width",
                     "splitter_to_wire", "wire_to_detector", "detector_aperture",
                     "gaussian_radius"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive finite length, got {value!r}")
        if not math.isfinite(self.pattern_offset):
            raise ConfigError("pattern_offset must be finite")
        if not (0 < self.crossing_angle < 0.1):
            raise ConfigError(
                f"crossing_angle must lie in (0, 0.1) rad, got {self.crossing_angle!r}")
        if not (math.isfinite(self.amplitude_asymmetry) and self.amplitude_asymmetry >= 0):
            raise ConfigError("amplitude_asymmetry must be >= 0")
        if not (math.isfinite(self.photon_budget) and self.photon_budget > 0):
            raise ConfigError("photon_budget must be > 0")
        if self.wire_thickness >= self.wavelength / self.crossing_angle:
            raise ConfigError(
                "wire_thickness must be smaller than the fringe spacing "
                f"{self.wavelength / self.crossing_angle:.6g} m")
        if self.gaussian_radius >= self.intersection_width:
            raise ConfigError("gaussian_radius must be smaller than intersection_width")
        if self.aperture_convention not in APERTURE_CONVENTIONS:
            raise ConfigError(
                f"aperture_convention must be one of {APERTURE_CONVENTIONS}, "
                f"got {self.aperture_convention!r}")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def config_hash(self) -> str:
        """Short stable digest of every field, used to tag generated data."""
        text = ";".join(f"{f.name}={getattr(self, f.name)!r}"
                        for f in dataclasses.fields(self))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _parse_value(key: str, raw: str, lineno: int):
    kind, _ = _KEYS[key]
    if kind == "choice":
        return raw.strip()
    parts = raw.split()
    if not parts:
        raise ConfigError(f"line {lineno}: missing value for {key!r}")
    try:
        number = float(parts[0])
    except ValueError:
        raise ConfigError(f"line {lineno}: {parts[0]!r} is not a number") from None
    if kind == "number":
        if len(parts) > 1:
            raise ConfigError(f"line {lineno}: {key!r} is dimensionless, got unit {parts[1]!r}")
        return number
    if len(parts) != 2:
        raise ConfigError(f"line {lineno}: {key!r} needs exactly one unit suffix")
    table = _LENGTH_UNITS if kind == "length" else _ANGLE_UNITS
    unit = parts[1]
    if unit not in table:
        raise ConfigError(
            f"line {lineno}: unknown {kind} unit {unit!r} for {key!r} "
            f"(expected one of {sorted(table)})")
    return number * table[unit]


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text. Unknown keys, duplicates and missing units are errors.

    Keys that are absent keep their reference-setup defaults.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, lineno)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def format_config(config: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` (values written in canonical units)."""
    lines = []
    for key, (kind, unit) in _KEYS.items():
        value = getattr(config, key)
        if kind == "choice":
            lines.append(f"{key} = {value}")
        elif kind == "number":
            lines.append(f"{key} = {value!r}")
        else:
            table = _LENGTH_UNITS if kind == "length" else _ANGLE_UNITS
            lines.append(f"{key} = {value / table[unit]!r} {unit}")
    return "\n".join(lines) + "\n"


def reference_config_text() -> str:
    return resources.files("fringeprobe").joinpath("data/reference.config").read_text(encoding="utf-8")


def reference_config() -> ExperimentConfig:
    """Bundled reference setup: 632 nm beams at 2.97 mrad, 17 um wire, fitted fringe parameters."""
    return parse_config(reference_config_text())
