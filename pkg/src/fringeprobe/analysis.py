"""Complementarity bookkeeping for the wire scan.

Visibility comes from the beam amplitude asymmetry, which-way information
from the photon accounting in :mod:`fringeprobe.experiment`. The audit
reports the pooled ``K^2 + V^2`` together with the split into photons that
reach the wire (localized, no path information) and photons that pass it
(full path information, no realized fringes).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import experiment, model
from .config import ExperimentConfig
from .errors import (DegenerateDenominator, DomainError, InsufficientData, NonConvergence,
                     SingularJacobian)
from .experiment import ScanMode, ScanSeries
from .numerics import FitResult, fit_least_squares

DEFAULT_POSITIONS = 100
MIN_FIT_POINTS = 10

# Fringe spacing over wire thickness as quoted for the reference setup; the
# measured geometry gives about 12.5.
QUOTED_FRINGE_TO_WIRE_RATIO = 12.8


def visibility_from_asymmetry(a: float) -> float:
    """Fringe visibility ``1 / (1 + 2a)`` for amplitude-asymmetry parameter ``a``.

    >>> round(visibility_from_asymmetry(0.05), 4)
    0.9091
    """
    if not a >= 0:
        raise DomainError(f"amplitude asymmetry must be >= 0, got {a!r}")
    return 1.0 / (1.0 + 2.0 * a)


def visibility_from_extrema(i_max: float, i_min: float) -> float:
    return (i_max - i_min) / (i_max + i_min)


def which_way_from_counts(n0, n_blocked, eta):
    """``(N0 - 2 N_sw) / (N0 - (2 - eta) N_sw)``.

    Photons with full path information are those neither stopped by the
    wire nor diffracted by the complementary slit; the ratio is taken
    against all detected photons.
    """
    n_blocked = np.asarray(n_blocked, dtype=float)
    den = n0 - (2.0 - eta) * n_blocked
    if np.any(den <= 0):
        raise DegenerateDenominator("detected photon count is not positive")
    k = (n0 - 2.0 * n_blocked) / den
    return float(k) if k.ndim == 0 else k


def which_way(config: ExperimentConfig, y_wire):
    """Which-way parameter with the wire at ``y_wire`` (vectorized)."""
    return which_way_from_counts(experiment.total_photons(config),
                                 experiment.photons_blocked(config, y_wire),
                                 experiment.capture_fraction(config))


def which_way_profile(config: ExperimentConfig, n_positions: int = DEFAULT_POSITIONS) -> tuple:
    if n_positions < 2:
        raise DomainError("n_positions must be >= 2")
    positions = experiment.scan_positions(config, n_positions)
    return positions, np.asarray(which_way(config, positions), dtype=float)


def average_which_way(config: ExperimentConfig, n_positions: int = DEFAULT_POSITIONS) -> float:
    """Mean which-way parameter over uniformly spaced wire positions in the window."""
    _, k = which_way_profile(config, n_positions)
    return float(np.mean(k))


@dataclass(frozen=True)
class MomentumAudit:
    """Transverse momentum scales in units of ``hbar * alpha / wavelength``.

    ``delta_p_bound`` is ``hbar / (2 dy)`` for the measured wire thickness;
    ``quoted_bound_coefficient`` is the same bound evaluated with the quoted
    ``l / dy = 12.8``. ``beam_momentum_split`` is the small-angle
    ``(p2 - p1)_y = hbar k alpha``.
    """

    delta_p_bound: float
    beam_momentum_split: float
    ratio: float
    fringe_to_wire_ratio: float
    quoted_fringe_to_wire_ratio: float
    quoted_bound_coefficient: float
    quoted_ratio: float
    exact_beam_momentum_split: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def momentum_uncertainty_audit(config: ExperimentConfig) -> MomentumAudit:
    unit = model.HBAR * config.crossing_angle / config.wavelength
    l_over_dy = model.fringe_spacing(config) / config.wire_thickness
    bound = config.wavelength / (2.0 * config.wire_thickness * config.crossing_angle)
    split = 2.0 * math.pi
    p1, p2 = model.particle_momenta(config)
    quoted = QUOTED_FRINGE_TO_WIRE_RATIO / 2.0
    return MomentumAudit(
        delta_p_bound=bound,
        beam_momentum_split=split,
        ratio=bound / split,
        fringe_to_wire_ratio=l_over_dy,
        quoted_fringe_to_wire_ratio=QUOTED_FRINGE_TO_WIRE_RATIO,
        quoted_bound_coefficient=quoted,
        quoted_ratio=quoted / split,
        exact_beam_momentum_split=float((p2[1] - p1[1]) / unit),
    )


@dataclass(frozen=True)
class GroupBalance:
    k: float
    v: float

    @property
    def total(self) -> float:
        return self.k**2 + self.v**2

    def to_dict(self) -> dict:
        return {"K": self.k, "V": self.v, "K2_plus_V2": self.total}


@dataclass
class ComplementarityReport:
    eta: float
    visibility: float
    k_profile: list
    k_average: float
    kv_sum: float
    group_at_wire: GroupBalance
    group_past_wire: GroupBalance
    momentum_audit: MomentumAudit
    conventions: dict = field(default_factory=dict)

    @property
    def pooled_violation(self) -> bool:
        return self.kv_sum > 1.0

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "visibility": self.visibility,
            "k_average": self.k_average,
            "kv_sum": self.kv_sum,
            "pooled_exceeds_bound": self.pooled_violation,
            "groups": {
                "at_wire": self.group_at_wire.to_dict(),
                "past_wire": self.group_past_wire.to_dict(),
            },
            "momentum_audit": self.momentum_audit.to_dict(),
            "k_profile": [{"y_wire_m": y, "K": k} for y, k in self.k_profile],
            "conventions": dict(self.conventions),
        }


def conventions(config: ExperimentConfig, n_positions: int = DEFAULT_POSITIONS) -> dict:
    return {
        "aperture_convention": config.aperture_convention,
        "acceptance_half_angle_rad": experiment.acceptance_half_angle(config),
        "normalization_window": "pattern_offset +/- intersection_width/2",
        "k_average_weighting": f"uniform over {n_positions} wire positions spanning the window",
        "fit_length_units": "pattern_offset and gaussian_radius interpreted as millimetres",
        "slit_group_which_way": "K = 0 assigned to photons localized by the wire",
        "at_wire_visibility": "1 / (1 + 2a), not 1",
    }


def complementarity_audit(config: ExperimentConfig,
                          n_positions: int = DEFAULT_POSITIONS) -> ComplementarityReport:
    """Pooled and two-group complementarity balance for ``config``."""
    eta = experiment.capture_fraction(config)
    v = visibility_from_asymmetry(config.amplitude_asymmetry)
    positions, k = which_way_profile(config, n_positions)
    k_avg = float(np.mean(k))
    return ComplementarityReport(
        eta=eta,
        visibility=v,
        k_profile=[(float(y), float(kk)) for y, kk in zip(positions, k)],
        k_average=k_avg,
        kv_sum=k_avg**2 + v**2,
        group_at_wire=GroupBalance(k=0.0, v=v),
        group_past_wire=GroupBalance(k=k_avg, v=0.0),
        momentum_audit=momentum_uncertainty_audit(config),
        conventions=conventions(config, n_positions),
    )


# ---------------------------------------------------------------------------
# Virtual versus physical fringes


class PatternKind(str, enum.Enum):
    VIRTUAL = "virtual"
    PHYSICAL = "physical"


def classify_pattern(config: ExperimentConfig, obstacle_present: bool) -> PatternKind:
    """Fringes are physical only when an obstacle can supply transverse momentum."""
    return PatternKind.PHYSICAL if obstacle_present else PatternKind.VIRTUAL


@dataclass
class PatternDescription:
    kind: PatternKind
    field_profile: model.MomentumProfile
    particle_momenta: tuple
    particle_level: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "particle_level": self.particle_level,
            "field_profile": self.field_profile.to_dict(),
            "particle_momenta": [[float(c) for c in p] for p in self.particle_momenta],
        }


def describe_pattern(config: ExperimentConfig, obstacle_present: bool,
                     positions=None) -> PatternDescription:
    if positions is None:
        positions = experiment.scan_positions(config, 201)
    kind = classify_pattern(config, obstacle_present)
    if kind is PatternKind.PHYSICAL:
        note = "obstacle deflects photons into the field fringe distribution"
    else:
        note = "photons keep their beam momenta; no fringes at particle level"
    return PatternDescription(kind=kind, field_profile=model.momentum_profile(config, positions),
                              particle_momenta=model.particle_momenta(config),
                              particle_level=note)


# ---------------------------------------------------------------------------
# Fringe structure of a scan curve


def amplitude_spectrum(positions, f, frequencies) -> np.ndarray:
    """``|integral (f - 1) exp(-2 pi i nu y) dy|`` by the trapezoid rule.

    Measured against the unobstructed level ``f = 1``; frequencies in 1/m.
    """
    y = np.asarray(positions, dtype=float)
    g = np.asarray(f, dtype=float) - 1.0
    nu = np.atleast_1d(np.asarray(frequencies, dtype=float))
    kernel = np.exp(-2j * np.pi * nu[:, None] * y[None, :])
    return np.abs(np.trapezoid(g[None, :] * kernel, y, axis=1))


def dominant_period(positions, f, min_frequency: float | None = None,
                    samples: int = 2001) -> float:
    """Spatial period of the strongest oscillation above ``min_frequency``.

    The default cutoff, two cycles per scanned span, skips the broad
    low-frequency content of the Gaussian dip.
    """
    y = np.asarray(positions, dtype=float)
    span = y.max() - y.min()
    nyquist = 0.5 * (y.size - 1) / span
    lo = 2.0 / span if min_frequency is None else min_frequency
    nu = np.linspace(lo, nyquist, samples)
    amp = amplitude_spectrum(y, f, nu)
    i = int(np.argmax(amp))
    step = nu[1] - nu[0]
    fine = np.linspace(max(lo, nu[i] - step), min(nyquist, nu[i] + step), 401)
    return 1.0 / fine[int(np.argmax(amplitude_spectrum(y, f, fine)))]


def has_spectral_peak(positions, f, frequency: float, band: float = 0.25) -> bool:
    """Whether the spectrum has a local peak near ``frequency``.

    Scans ``frequency * (1 +/- band)``; a peak is an interior maximum at
    least twice the amplitude at both band edges.
    """
    nu = np.linspace((1.0 - band) * frequency, (1.0 + band) * frequency, 201)
    amp = amplitude_spectrum(positions, f, nu)
    i = int(np.argmax(amp))
    if i in (0, nu.size - 1):
        return False
    return bool(amp[i] >= 2.0 * max(amp[0], amp[-1]))


# ---------------------------------------------------------------------------
# Fitting


def initial_guess(positions, f) -> tuple:
    """Start values in (mm, mm, 1): deepest point, dip half-width, a = 0.1."""
    x = np.asarray(positions, dtype=float) * 1e3
    f = np.asarray(f, dtype=float)
    i_min = int(np.argmin(f))
    depth = 1.0 - f[i_min]
    deep = x[(1.0 - f) >= 0.5 * depth]
    half_width = 0.5 * (deep.max() - deep.min())
    if half_width <= 0:
        half_width = float(np.median(np.diff(x))) if x.size > 1 else 0.1
    sigma = half_width / math.sqrt(2.0 * math.log(2.0))
    return x[i_min], sigma, 0.1


def fit_scan(scan: ScanSeries, config_geometry: ExperimentConfig, init=None,
             a_max: float = 100.0) -> FitResult:
    """Fit ``(y0, sigma, a)`` of the fringed fractional-count model to a scan.

    Wavelength, crossing angle, wire thickness and the detector geometry
    (hence ``eta``) are taken from ``config_geometry`` and held fixed. The
    fit runs in millimetres. A one-beam-blocked scan carries no fringe
    information; its fit is returned with ``degenerate=True``.

    Raises:
        InsufficientData: fewer than 10 points.
        NonConvergence: both-beams fit did not converge (partial result on
            ``exc.partial``).
    """
    if len(scan) < MIN_FIT_POINTS:
        raise InsufficientData(f"need at least {MIN_FIT_POINTS} scan points, got {len(scan)}")
    x, y, y_err = scan.arrays()
    if np.all(y_err <= 0):
        y_err = np.ones_like(y)
    elif np.any(y_err <= 0):
        y_err = np.where(y_err > 0, y_err, y_err[y_err > 0].min())
    if init is None:
        init = initial_guess(x, y)
    width_mm = config_geometry.intersection_width * 1e3
    bounds = [
        (x.min() * 1e3 - width_mm, x.max() * 1e3 + width_mm),
        (1e-3, 0.999 * width_mm),
        (0.0, a_max),
    ]

    def predict(xs, theta):
        cfg = config_geometry.replace(pattern_offset=theta[0] * 1e-3,
                                      gaussian_radius=theta[1] * 1e-3,
                                      amplitude_asymmetry=theta[2])
        return experiment.fractional_count(cfg, xs)

    single = scan.mode is ScanMode.ONE_BEAM_BLOCKED
    notes = []
    try:
        ls = fit_least_squares(predict, x, y, y_err, init=init, bounds=bounds,
                               raise_on_nonconvergence=not single)
    except SingularJacobian:
        if not single:
            raise
        notes.append("singular Jacobian: a is not constrained by the data")
        return FitResult(y0=init[0] * 1e-3, sigma=init[1] * 1e-3, a=init[2],
                         residual_norm=math.nan,
                         param_stderr={"y0": math.inf, "sigma": math.inf, "a": math.inf},
                         visibility=visibility_from_asymmetry(init[2]), converged=False,
                         iterations=0, degenerate=True, notes=notes)
    except NonConvergence as exc:
        if exc.partial is None:
            raise
        part = _to_fit_result(exc.partial, notes + ["did not converge"])
        raise NonConvergence(str(exc), partial=part) from exc

    result = _to_fit_result(ls, notes)
    a_free = 2 in ls.at_bound and ls.params[2] >= a_max
    poorly_constrained = not (result.param_stderr["a"] < max(abs(result.a), 1e-12))
    if single:
        result.notes.append("one-beam-blocked scan: fringe parameter a is unconstrained")
    if a_free:
        result.notes.append("a ran to its upper bound")
    if single or a_free or (poorly_constrained and result.a > 0):
        result.degenerate = True
    return result


def _to_fit_result(ls, notes) -> FitResult:
    y0_mm, sigma_mm, a = (float(v) for v in ls.params)
    se = ls.stderr
    return FitResult(y0=y0_mm * 1e-3, sigma=sigma_mm * 1e-3, a=a,
                     residual_norm=float(ls.residual_norm),
                     param_stderr={"y0": float(se[0]) * 1e-3, "sigma": float(se[1]) * 1e-3,
                                   "a": float(se[2])},
                     visibility=visibility_from_asymmetry(a),
                     converged=bool(ls.converged), iterations=int(ls.iterations),
                     notes=list(notes))
