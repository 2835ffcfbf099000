"""Linear-MMSE amplitude estimation on a detected support.

The posterior mean of the amplitudes given a support estimate is

    theta_hat = sigma_theta^2 S_hat phi^T (sigma_n^2 I + sigma_theta^2 phi S_hat phi^T)^-1 y

with ``S_hat = diag(s_hat)``.  Only the N x N symmetric positive-definite
system over the support columns is ever formed and factored; entries off
the support come out exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class LmmseSolveError(RuntimeError):
    """The N x N system was not positive definite (e.g. sigma_n = 0 with
    rank-deficient support columns)."""

    def __init__(self, message: str, support_size: int):
        super().__init__(f"{message} (support size {support_size})")
        self.support_size = support_size


@dataclass(frozen=True)
class LmmseDiagnostics:
    solve_residual: float
    support_size: int


def lmmse_amplitudes(
    y: np.ndarray,
    phi: np.ndarray,
    s_hat: np.ndarray,
    sigma_n: float,
    sigma_theta: float,
) -> tuple[np.ndarray, LmmseDiagnostics]:
    """Posterior-mean amplitudes for the active columns; zeros elsewhere."""
    y = np.asarray(y, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s_hat = np.asarray(s_hat)
    n, m = phi.shape
    theta_hat = np.zeros(m)
    support = np.flatnonzero(s_hat)
    if support.size == 0:
        return theta_hat, LmmseDiagnostics(solve_residual=0.0, support_size=0)

    phi_s = phi[:, support]
    system = (sigma_theta * sigma_theta) * (phi_s @ phi_s.T)
    system[np.diag_indices_from(system)] += sigma_n * sigma_n
    try:
        factor = scipy.linalg.cho_factor(system, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise LmmseSolveError(str(exc), support_size=int(support.size)) from exc
    u = scipy.linalg.cho_solve(factor, y, check_finite=False)

    y_norm = float(np.linalg.norm(y))
    solve_residual = 0.0
    if y_norm > 0.0:
        solve_residual = float(np.linalg.norm(system @ u - y)) / y_norm
    theta_hat[support] = (sigma_theta * sigma_theta) * (phi_s.T @ u)
    return theta_hat, LmmseDiagnostics(
        solve_residual=solve_residual, support_size=int(support.size)
    )


def compose_signal(s_hat: np.ndarray, theta_hat: np.ndarray) -> np.ndarray:
    """Elementwise product of support and amplitudes."""
    s_hat = np.asarray(s_hat)
    theta_hat = np.asarray(theta_hat, dtype=float)
    if s_hat.shape != theta_hat.shape:
        raise ValueError("s_hat and theta_hat must have equal length")
    return s_hat * theta_hat
