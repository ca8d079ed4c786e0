"""Adaptive Simpson quadrature with Richardson extrapolation.

Intervals are refined breadth first: every pass bisects all unconverged
panels with a single vectorized call of the integrand, so ``f`` must accept
and return numpy arrays. The same engine integrates one interval or a batch
of independent intervals of the same integrand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import DomainError, NonConvergence


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budget for :func:`integrate`.

    ``initial_panels`` uniform panels are laid down before any convergence
    test, which guards against an oscillatory integrand that happens to be
    sampled only near its zeros.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 1_000_000
    initial_panels: int = 8

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")
        if self.initial_panels < 1:
            raise DomainError("initial_panels must be >= 1")


DEFAULT_SPEC = QuadratureSpec()
MIN_DEPTH = 2


def _call(f, x):
    y = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    if not np.all(np.isfinite(y)):
        raise DomainError("integrand is not finite on the interval")
    return y


def _simpson(fa, fm, fb, h):
    return h / 6.0 * (fa + 4.0 * fm + fb)


def integrate_batch(f: Callable[[np.ndarray], np.ndarray], lo, hi,
                    spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Integrate ``f`` over each ``[lo[i], hi[i]]``.

    The tolerance of integral ``i`` is ``max(abs_tol, rel_tol * |I_i|)``,
    distributed over its panels in proportion to their width.

    Raises:
        DomainError: if any ``lo >= hi``.
        NonConvergence: if more than ``spec.max_subdivisions`` bisections
            are needed in total.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    lo, hi = np.broadcast_arrays(lo, hi)
    if np.any(~(lo < hi)):
        raise DomainError("integration requires lo < hi")
    n = lo.size
    lo = lo.ravel()
    hi = hi.ravel()
    width = hi - lo

    # Initial uniform panels: a (n, P+1) grid of nodes with midpoints.
    panels = spec.initial_panels
    steps = np.arange(panels + 1) / panels
    nodes = lo[:, None] + width[:, None] * steps
    mids = 0.5 * (nodes[:, :-1] + nodes[:, 1:])
    fn = _call(f, nodes)
    fm = _call(f, mids)

    owner = np.repeat(np.arange(n), panels)
    a = nodes[:, :-1].ravel()
    b = nodes[:, 1:].ravel()
    fa = fn[:, :-1].ravel()
    fb = fn[:, 1:].ravel()
    fmid = fm.ravel()
    whole = _simpson(fa, fmid, fb, b - a)

    coarse = np.bincount(owner, weights=whole, minlength=n)
    tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(coarse))

    total = np.zeros(n)
    subdivisions = 0
    depth = 0
    while a.size:
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        fx = _call(f, np.concatenate([lm, rm]))
        flm, frm = fx[: a.size], fx[a.size:]
        h = b - a
        left = _simpson(fa, flm, fmid, 0.5 * h)
        right = _simpson(fmid, frm, fb, 0.5 * h)
        refined = left + right
        err = refined - whole
        local_tol = tol[owner] * (h / width[owner])
        # Panels too narrow to bisect in floating point are accepted as is.
        # Coarse 3- and 5-point estimates can agree by accident, so nothing
        # is accepted above MIN_DEPTH bisections of the initial panels.
        converged = (np.abs(err) <= 15.0 * local_tol) & (depth >= MIN_DEPTH)
        done = converged | (m <= a) | (m >= b)
        depth += 1
        total += np.bincount(owner[done], weights=refined[done] + err[done] / 15.0, minlength=n)

        keep = ~done
        subdivisions += int(keep.sum())
        if subdivisions > spec.max_subdivisions:
            raise NonConvergence(
                f"adaptive Simpson exceeded {spec.max_subdivisions} subdivisions")
        a, m, b = a[keep], m[keep], b[keep]
        fa, fmid, fb = fa[keep], fmid[keep], fb[keep]
        flm, frm = flm[keep], frm[keep]
        left, right = left[keep], right[keep]
        owner = owner[keep]
        # Children: [a, m] with midpoint lm, [m, b] with midpoint rm.
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        fa, fb = np.concatenate([fa, fmid]), np.concatenate([fmid, fb])
        fmid = np.concatenate([flm, frm])
        whole = np.concatenate([left, right])
        owner = np.concatenate([owner, owner])
    return total


def integrate(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
              spec: QuadratureSpec = DEFAULT_SPEC,
              points: Sequence[float] = ()) -> float:
    """Definite integral of ``f`` over ``[lo, hi]``.

    ``points`` are optional interior breakpoints (kinks, jumps, zeros of an
    oscillatory integrand); the interval is split there and the pieces are
    integrated together, each to the full tolerance.

    >>> round(integrate(lambda x: x**2, 0.0, 1.0), 12)
    0.333333333333
    """
    if not lo < hi:
        raise DomainError(f"integration requires lo < hi, got [{lo}, {hi}]")
    inner = sorted(p for p in points if lo < p < hi)
    edges = np.array([lo, *inner, hi], dtype=float)
    return float(integrate_batch(f, edges[:-1], edges[1:], spec).sum())
