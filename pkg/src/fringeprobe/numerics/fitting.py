"""Damped Gauss-Newton (Levenberg-Marquardt) least squares.

Small dense problems only: the Jacobian is built by central differences and
the normal equations are solved directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import InsufficientData, NonConvergence, SingularJacobian


def _steps(theta: np.ndarray, step: float) -> np.ndarray:
    return np.where(theta != 0.0, step * np.abs(theta), step)


def finite_diff_gradient(f: Callable[[np.ndarray], float], theta,
                         step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function.

    The step for component ``i`` is ``step * |theta_i|`` (``step`` itself
    when ``theta_i == 0``), so parameters of very different magnitude are
    handled alike.
    """
    theta = np.asarray(theta, dtype=float)
    h = _steps(theta, step)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        up = theta.copy()
        dn = theta.copy()
        up[i] += h[i]
        dn[i] -= h[i]
        grad[i] = (f(up) - f(dn)) / (up[i] - dn[i])
    return grad


def finite_diff_jacobian(f: Callable[[np.ndarray], np.ndarray], theta,
                         step: float = 1e-6, lower=None, upper=None) -> np.ndarray:
    """Central-difference Jacobian of a vector function, shape (m, n).

    With ``lower``/``upper`` given, difference points are clipped to the box
    and the quotient uses the clipped spacing (one-sided at a bound).
    """
    theta = np.asarray(theta, dtype=float)
    h = _steps(theta, step)
    lower = np.full(theta.size, -np.inf) if lower is None else np.asarray(lower, float)
    upper = np.full(theta.size, np.inf) if upper is None else np.asarray(upper, float)
    cols = []
    for i in range(theta.size):
        up = theta.copy()
        dn = theta.copy()
        up[i] = min(theta[i] + h[i], upper[i])
        dn[i] = max(theta[i] - h[i], lower[i])
        cols.append((np.asarray(f(up)) - np.asarray(f(dn))) / (up[i] - dn[i]))
    return np.column_stack(cols)


def _rank_deficient(J: np.ndarray) -> bool:
    # Column-normalized so the test does not depend on parameter units.
    norms = np.linalg.norm(J, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        return True
    return np.linalg.matrix_rank(J / norms) < J.shape[1]


@dataclass
class LeastSquaresResult:
    params: np.ndarray
    stderr: np.ndarray
    residual_norm: float
    chi2: float
    converged: bool
    iterations: int
    at_bound: list = field(default_factory=list)
    chi2_history: list = field(default_factory=list)


def fit_least_squares(model: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      x, y, y_err=None, init=None,
                      bounds: Sequence[tuple] | None = None,
                      max_iter: int = 200, ftol: float = 1e-14, xtol: float = 1e-12,
                      step: float = 1e-6,
                      raise_on_nonconvergence: bool = True) -> LeastSquaresResult:
    """Minimize ``sum(((y - model(x, theta)) / y_err) ** 2)``.

    Levenberg damping on the diagonal of ``J^T J`` starts at 1e-3 and is
    multiplied by 10 after a rejected step and divided by 10 after an
    accepted one, so accepted iterates never increase chi-square. Bounds are
    enforced by projecting each trial point onto the box.

    ``residual_norm`` is the Euclidean norm of the weighted residuals.
    Standard errors come from ``(J^T J)^-1`` at the optimum, unscaled
    (``y_err`` are taken as true one-sigma errors).

    Raises:
        InsufficientData: fewer points than parameters, or a non-positive error.
        SingularJacobian: the normal equations are rank deficient.
        NonConvergence: ``max_iter`` reached; ``exc.partial`` holds the
            best result so far.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if y_err is None else np.asarray(y_err, dtype=float)
    theta = np.asarray(init, dtype=float).copy()
    n = theta.size
    if y.size < n:
        raise InsufficientData(f"{y.size} data points for {n} parameters")
    if np.any(~(w > 0)):
        raise InsufficientData("all y_err must be > 0")
    if bounds is None:
        bounds = [(-math.inf, math.inf)] * n
    lower = np.array([b[0] for b in bounds], dtype=float)
    upper = np.array([b[1] for b in bounds], dtype=float)
    theta = np.clip(theta, lower, upper)

    def residuals(t):
        return (y - model(x, t)) / w

    def jacobian(t):
        # d(residual)/d(theta) = -d(model)/d(theta) / y_err
        return finite_diff_jacobian(residuals, t, step, lower, upper)

    r = residuals(theta)
    chi2 = float(r @ r)
    history = [chi2]
    lam = 1e-3
    converged = False
    iterations = 0
    J = jacobian(theta)
    for iterations in range(1, max_iter + 1):
        JTJ = J.T @ J
        g = J.T @ r
        if _rank_deficient(J):
            raise SingularJacobian("J^T J is rank deficient at the current iterate")
        diag = np.diag(JTJ).copy()
        accepted = False
        while lam < 1e16:
            A = JTJ + lam * np.diag(diag)
            try:
                delta = np.linalg.solve(A, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = np.clip(theta + delta, lower, upper)
            r_trial = residuals(trial)
            chi2_trial = float(r_trial @ r_trial)
            if np.isfinite(chi2_trial) and chi2_trial <= chi2:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # No descent direction left at any damping: a stationary point.
            converged = True
            break
        moved = np.abs(trial - theta)
        improvement = chi2 - chi2_trial
        theta, r, chi2 = trial, r_trial, chi2_trial
        history.append(chi2)
        lam = max(lam / 10.0, 1e-12)
        small_step = np.all(moved <= xtol * (np.abs(theta) + xtol))
        small_gain = improvement <= ftol * max(chi2, 1e-300)
        if small_step or small_gain or chi2 == 0.0:
            converged = True
            break
        J = jacobian(theta)

    J = jacobian(theta)
    JTJ = J.T @ J
    try:
        cov = np.linalg.inv(JTJ)
        stderr = np.sqrt(np.abs(np.diag(cov)))
    except np.linalg.LinAlgError:
        stderr = np.full(n, math.inf)
    at_bound = [i for i in range(n) if theta[i] <= lower[i] or theta[i] >= upper[i]]
    result = LeastSquaresResult(params=theta, stderr=stderr,
                                residual_norm=math.sqrt(chi2), chi2=chi2,
                                converged=converged, iterations=iterations,
                                at_bound=at_bound, chi2_history=history)
    if not converged and raise_on_nonconvergence:
        raise NonConvergence(f"no convergence after {max_iter} iterations", partial=result)
    return result


@dataclass
class FitResult:
    """Fringe parameters recovered from a wire scan (lengths in metres)."""

    y0: float
    sigma: float
    a: float
    residual_norm: float
    param_stderr: dict
    visibility: float
    converged: bool
    iterations: int
    degenerate: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "y0_m": self.y0,
            "sigma_m": self.sigma,
            "a": self.a,
            "y0_mm": self.y0 * 1e3,
            "sigma_mm": self.sigma * 1e3,
            "visibility": self.visibility,
            "residual_norm": self.residual_norm,
            "param_stderr": dict(self.param_stderr),
            "converged": self.converged,
            "iterations": self.iterations,
            "degenerate": self.degenerate,
            "notes": list(self.notes),
        }
