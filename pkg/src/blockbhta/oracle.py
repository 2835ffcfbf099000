"""Brute-force posterior scores for the four support hypotheses.

This module is the ground truth the simplified detection rules are tested
against.  It evaluates the competing hypotheses for a neighbour pair by
explicitly assembling the N x N covariance, factoring it, and computing
Gaussian log-densities in the log domain.  Nothing here is shared with
:mod:`blockbhta.detect`: no thresholds, no rank-one shortcuts, no common
residual helper, so an algebra mistake in the fast path cannot cancel out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import BghmmModel

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class HypothesisScores:
    """Log posteriors (up to the common evidence constant) of the four
    neighbour-pair hypotheses at one index pair."""

    log_h00: float
    log_h01: float
    log_h10: float
    log_h11: float


def log_density_isotropic(x: np.ndarray, sigma_n: float) -> float:
    """Gaussian log-density of ``x`` under covariance ``sigma_n^2 I``."""
    if not sigma_n > 0.0:
        raise ValueError(f"sigma_n must be > 0, got {sigma_n!r}")
    n = x.shape[0]
    return -0.5 * (n * _LOG_2PI + 2.0 * n * math.log(sigma_n) + float(x @ x) / (sigma_n * sigma_n))


def log_density_rank_one(
    x: np.ndarray, phi_col: np.ndarray, sigma_n: float, sigma_theta: float
) -> float:
    """Gaussian log-density under ``sigma_n^2 I + sigma_theta^2 phi phi^T``.

    Assembles the full covariance and Cholesky-factors it; no use of the
    matrix-inversion or determinant lemmas.
    """
    if not sigma_n > 0.0:
        raise ValueError(f"sigma_n must be > 0, got {sigma_n!r}")
    n = x.shape[0]
    cov = (sigma_theta * sigma_theta) * np.outer(phi_col, phi_col)
    cov[np.diag_indices_from(cov)] += sigma_n * sigma_n
    factor = scipy.linalg.cho_factor(cov, lower=True, check_finite=False)
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    quad = float(x @ scipy.linalg.cho_solve(factor, x, check_finite=False))
    return -0.5 * (n * _LOG_2PI + log_det + quad)


def _residual_without(y: np.ndarray, phi: np.ndarray, w: np.ndarray, drop: list[int]) -> np.ndarray:
    """``y`` minus every column's contribution except the dropped indices."""
    w_kept = np.asarray(w, dtype=float).copy()
    for j in drop:
        if 0 <= j < w_kept.shape[0]:
            w_kept[j] = 0.0
    return np.asarray(y, dtype=float) - phi @ w_kept


def score_start_pair(
    y: np.ndarray,
    phi: np.ndarray,
    w: np.ndarray,
    i: int,
    model: BghmmModel,
) -> tuple[float, float]:
    """Log posteriors (both-inactive, start-of-block) for the pair ``(i, i+1)``.

    ``i`` is the left index; ``i = -1`` addresses the virtual inactive
    sample before the first real one.  The residual excludes the
    contributions of both pair columns.
    """
    markov = model.markov
    x = _residual_without(y, phi, w, [i, i + 1])
    phi_col = phi[:, i + 1]
    with np.errstate(divide="ignore"):
        log_prior_state = float(np.log(markov.p))
        log_h00 = log_prior_state + float(np.log(markov.p00)) + log_density_isotropic(x, model.sigma_n)
        log_h01 = log_prior_state + float(np.log(markov.p10)) + log_density_rank_one(
            x, phi_col, model.sigma_n, model.sigma_theta
        )
    return log_h00, log_h01


def score_end_pair(
    y: np.ndarray,
    phi: np.ndarray,
    w: np.ndarray,
    i: int,
    model: BghmmModel,
) -> tuple[float, float]:
    """Log posteriors (end-of-block, still-active) for the pair ``(i, i+1)``.

    The residual excludes only the tested column ``i + 1``.
    """
    markov = model.markov
    z = _residual_without(y, phi, w, [i + 1])
    phi_col = phi[:, i + 1]
    with np.errstate(divide="ignore"):
        log_prior_state = float(np.log(1.0 - markov.p))
        log_h10 = log_prior_state + float(np.log(markov.p01)) + log_density_isotropic(z, model.sigma_n)
        log_h11 = log_prior_state + float(np.log(markov.p11)) + log_density_rank_one(
            z, phi_col, model.sigma_n, model.sigma_theta
        )
    return log_h10, log_h11


def score_pair(
    y: np.ndarray,
    phi: np.ndarray,
    w: np.ndarray,
    i: int,
    model: BghmmModel,
) -> HypothesisScores:
    """All four hypothesis scores for the pair ``(i, i+1)``."""
    log_h00, log_h01 = score_start_pair(y, phi, w, i, model)
    log_h10, log_h11 = score_end_pair(y, phi, w, i, model)
    return HypothesisScores(log_h00=log_h00, log_h01=log_h01, log_h10=log_h10, log_h11=log_h11)
