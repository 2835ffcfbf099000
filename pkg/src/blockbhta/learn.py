"""Closed-form hyperparameter re-estimation from the current iterate.

The solver re-tunes itself each outer iteration: the noise deviation from
the fit residual, the amplitude deviation from the observation energy and
the inactive fraction, and the chain parameters from zero counts and
transition counts of the current support.  Probabilities are clamped away
from 0 and 1 so the detection thresholds stay finite; without the clamp
an all-zero first sweep would freeze the solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Probability clamp and the relative noise floor (keeps thresholds finite).
P_FLOOR = 1e-4
SIGMA_N_FLOOR = 1e-8


def clamp_probability(value: float) -> float:
    return min(max(float(value), P_FLOOR), 1.0 - P_FLOOR)


@dataclass(frozen=True)
class HyperEstimates:
    """One snapshot of the self-tuned model parameters."""

    sigma_n: float
    sigma_theta: float
    p: float
    p10: float
    p01: float

    def __post_init__(self) -> None:
        if not self.sigma_n >= 0.0:
            raise ValueError(f"sigma_n must be >= 0, got {self.sigma_n!r}")
        if not self.sigma_theta > 0.0:
            raise ValueError(f"sigma_theta must be > 0, got {self.sigma_theta!r}")
        for name in ("p", "p10", "p01"):
            value = getattr(self, name)
            if not P_FLOOR <= value <= 1.0 - P_FLOOR:
                raise ValueError(
                    f"{name} must lie in [{P_FLOOR}, {1.0 - P_FLOOR}], got {value!r}"
                )


def update_noise_sigma(
    y: np.ndarray,
    phi: np.ndarray,
    w_hat: np.ndarray,
    sigma_theta_hat: float,
) -> float:
    """Root-mean-square fit residual, floored at ``1e-8 * sigma_theta_hat``."""
    y = np.asarray(y, dtype=float)
    residual = float(np.linalg.norm(y - phi @ w_hat)) / np.sqrt(y.shape[0])
    return max(residual, SIGMA_N_FLOOR * float(sigma_theta_hat))


def update_theta_sigma(y: np.ndarray, n: int, m: int, p_hat: float) -> float:
    """Amplitude deviation implied by the observation energy.

    ``sqrt(n * mean(y^2) / (m * (1 - p_hat)))``: with unit-norm columns the
    expected observation energy is the number of active samples times the
    amplitude variance.  ``p_hat`` is clamped below 1 before use.
    """
    p_eff = min(float(p_hat), 1.0 - P_FLOOR)
    mean_square = float(np.mean(np.square(np.asarray(y, dtype=float))))
    return float(np.sqrt(n * mean_square / (m * (1.0 - p_eff))))


def update_markov(
    s_hat: np.ndarray,
    prev_p10: float,
    prev_p01: float,
) -> tuple[float, float, float]:
    """Chain parameters from the current support's counts.

    The inactive fraction estimates ``p``; the transition-count ratios
    estimate ``p10`` and ``p01``.  A ratio with an empty denominator (no
    inactive, resp. no active, samples among the first M-1) falls back to
    the caller's previous estimate.  All outputs are clamped to
    ``[P_FLOOR, 1 - P_FLOOR]``.
    """
    s = np.asarray(s_hat, dtype=float)
    m = s.shape[0]
    if m < 2:
        raise ValueError(f"support must have length >= 2, got {m}")
    p_hat = clamp_probability(1.0 - float(np.count_nonzero(s)) / m)

    head, tail = s[:-1], s[1:]
    inactive = float(np.sum(1.0 - head))
    active = float(np.sum(head))
    if inactive > 0.0:
        p10_hat = float(np.sum(tail * (1.0 - head))) / inactive
    else:
        p10_hat = float(prev_p10)
    if active > 0.0:
        p01_hat = float(np.sum(head * (1.0 - tail))) / active
    else:
        p01_hat = float(prev_p01)
    return p_hat, clamp_probability(p10_hat), clamp_probability(p01_hat)
