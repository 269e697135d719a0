"""Damped least squares (Levenberg-Marquardt) for small, smooth models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LMResult:
    params: np.ndarray
    covariance: np.ndarray
    chi2: float
    iterations: int
    converged: bool
    grad_norm: float
    message: str


def _grad_norm(J, r):
    """Largest projection of the weighted residual on a Jacobian column, in sigma units.

    Zero at a stationary point whatever the noise level, so it serves as the
    convergence certificate for both noisy and exact data.
    """
    cn = np.linalg.norm(J, axis=0)
    g = np.abs(J.T @ r)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(cn > 0, g / cn, 0.0)
    return float(s.max()) if s.size else 0.0


def levenberg_marquardt(residual, jacobian, p0, max_iter: int = 200, xtol: float = 1e-10,
                        gtol: float = 1e-10, conv_tol: float = 1e-6, lam0: float = 1e-3) -> LMResult:
    """Minimize ``sum(residual(p)**2)``.

    ``residual(p)`` returns weighted residuals ``(y - f(p)) / sigma`` and
    ``jacobian(p)`` their derivative, shape (n_points, n_params). Marquardt
    scaling (damping proportional to diag(J^T J)) makes the iteration
    insensitive to the units of each parameter. Iteration stops when an
    accepted step changes every parameter by less than ``xtol`` relative,
    or the gradient measure drops below ``gtol``; ``converged`` additionally
    requires the final gradient measure to be below ``conv_tol``.
    """
    p = np.asarray(p0, dtype=float).copy()
    r = residual(p)
    chi2 = float(r @ r)
    J = jacobian(p)
    lam = lam0
    message = "maximum iterations reached"
    stopped = False
    it = 0
    for it in range(1, max_iter + 1):
        g = _grad_norm(J, r)
        if g < gtol:
            message = "gradient below tolerance"
            stopped = True
            break
        A = J.T @ J
        b = -J.T @ r
        d = np.diag(A).copy()
        d[d == 0] = 1.0
        accepted = False
        while lam < 1e20:
            try:
                step = np.linalg.solve(A + lam * np.diag(d), b)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_new = p + step
            r_new = residual(p_new)
            chi2_new = float(r_new @ r_new)
            if np.isfinite(chi2_new) and chi2_new <= chi2:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no downhill step left: either a minimum (gradient check below) or stuck
            message = "no downhill step at any damping"
            stopped = True
            break
        rel = np.max(np.abs(step) / (np.abs(p_new) + 1e-8))
        p, r, chi2 = p_new, r_new, chi2_new
        J = jacobian(p)
        lam = max(lam / 10.0, 1e-12)
        if rel < xtol or chi2 == 0.0:
            message = "relative step below tolerance"
            stopped = True
            break

    g = _grad_norm(J, r)
    converged = stopped and g < conv_tol
    try:
        cov = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = np.full((p.size, p.size), np.nan)
    return LMResult(p, cov, chi2, it, converged, g, message)
