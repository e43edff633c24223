"""Damped Gauss-Newton (Levenberg-Marquardt) with an analytic Jacobian."""

from dataclasses import dataclass

import numpy as np

from .errors import FitFailure

MAX_ITER = 200
STEP_TOL = 1e-10


@dataclass
class LsqResult:
    params: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    iterations: int
    dof: int


def levenberg_marquardt(residuals, jacobian, p0, max_iter=MAX_ITER, step_tol=STEP_TOL,
                        scale_covariance=True):
    """Minimize ||residuals(p)||^2.

    ``residuals`` returns weighted residuals (model - y) / sigma and
    ``jacobian`` their derivative, shape (n_points, n_params).  The returned
    covariance is (J^T J)^-1, scaled by the reduced chi^2 when
    ``scale_covariance`` is set (unknown absolute errors).
    """
    p = np.asarray(p0, dtype=float).copy()
    r = residuals(p)
    cost = r @ r
    lam = 1e-3
    for it in range(1, max_iter + 1):
        J = jacobian(p)
        JtJ = J.T @ J
        g = J.T @ r
        diag = np.diag(JtJ).copy()
        diag[diag == 0.0] = 1.0
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(JtJ + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = p + step
            r_trial = residuals(trial)
            cost_trial = r_trial @ r_trial
            # tolerate rounding-level increases so the step test, not cost noise, ends the fit
            if np.isfinite(cost_trial) and cost_trial <= cost * (1.0 + 1e-13) + 1e-300:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no descent direction left: we sit at the minimum to machine precision
            break
        rel = np.linalg.norm(step) / (np.linalg.norm(p) + 1e-12)
        p, r, cost = trial, r_trial, cost_trial
        lam = max(lam / 10.0, 1e-12)
        if rel < step_tol:
            break
    else:
        raise FitFailure(f"no convergence after {max_iter} iterations",
                         residual_norm=float(np.sqrt(cost)))
    J = jacobian(p)
    dof = max(len(r) - len(p), 1)
    try:
        cov = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = np.full((len(p), len(p)), np.inf)
    if scale_covariance:
        cov = cov * (cost / dof)
    return LsqResult(p, cov, float(np.sqrt(cost)), it, dof)
