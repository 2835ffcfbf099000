"""Bayesian hypothesis tests for block starts and block ends.

Each support index is tested against its left neighbour: an activity rule
(does a block start here?) and an inactivity rule (does a block end here?).
Both reduce to comparing a squared residual/column correlation against a
closed-form threshold built from the chain and noise parameters.

Two threshold variants exist.  ``derived`` is the algebra that actually
falls out of the Gaussian likelihood ratio with the rank-one covariance
update: the log-determinant term is ``ln(1 + sigma_theta^2/sigma_n^2)``
and the inactivity rule fires on *small* correlations.  ``paper_literal``
keeps the widely-circulated closed forms instead, which put
``1 + sigma_n^2/sigma_theta^2`` under the square root and fire the
inactivity rule on *large* correlations; it is retained for side-by-side
study.  The derived variant is checked decision-for-decision against the
brute-force posterior evaluation in :mod:`blockbhta.oracle`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .model import DERIVED, PAPER_LITERAL, RULE_VARIANTS, BghmmModel, SolverConfig


def _log_threshold(
    prior_ratio: float, sigma_n: float, sigma_theta: float, variant: str
) -> float:
    """Common shape of both thresholds: 2 sigma_n^2 (1 + sn^2/st^2) ln(ratio * sqrt(...))."""
    if variant not in RULE_VARIANTS:
        raise ValueError(f"unknown rule variant {variant!r}")
    if not sigma_n > 0.0:
        raise ValueError(f"sigma_n must be > 0, got {sigma_n!r}")
    if not sigma_theta > 0.0:
        raise ValueError(f"sigma_theta must be > 0, got {sigma_theta!r}")
    if variant == DERIVED:
        sqrt_arg = 1.0 + (sigma_theta / sigma_n) ** 2
    else:
        sqrt_arg = 1.0 + (sigma_n / sigma_theta) ** 2
    if prior_ratio == 0.0:
        log_arg = -math.inf
    elif math.isinf(prior_ratio):
        log_arg = math.inf
    else:
        log_arg = math.log(prior_ratio) + 0.5 * math.log(sqrt_arg)
    scale = 2.0 * sigma_n * sigma_n * (1.0 + (sigma_n / sigma_theta) ** 2)
    return scale * log_arg


def threshold_start(model: BghmmModel, variant: str = DERIVED) -> float:
    """Activity threshold for the start-of-block test.

    ``p10 = 0`` yields ``+inf`` (a block can never start), ``p00 = 0``
    yields ``-inf`` (every index activates); both are meaningful
    sentinels for the ``>`` comparison in :func:`start_test`.
    """
    markov = model.markov
    if markov.p10 == 0.0:
        ratio = math.inf
    elif markov.p00 == 0.0:
        ratio = 0.0
    else:
        ratio = markov.p00 / markov.p10
    return _log_threshold(ratio, model.sigma_n, model.sigma_theta, variant)


def threshold_end(model: BghmmModel, variant: str = DERIVED) -> float:
    """Inactivity threshold for the end-of-block test.

    ``p01 = 0`` yields ``-inf``: under the derived ``<`` rule the test can
    then never deactivate a sample, matching a chain that never leaves
    the active state.  A negative finite threshold likewise disables the
    derived rule, since a squared correlation cannot go below it.
    """
    markov = model.markov
    if markov.p01 == 0.0:
        ratio = 0.0
    elif markov.p11 == 0.0:
        ratio = math.inf
    else:
        ratio = markov.p01 / markov.p11
    return _log_threshold(ratio, model.sigma_n, model.sigma_theta, variant)


@dataclass(frozen=True)
class ThresholdPair:
    """The two detection thresholds for one parameterisation."""

    th_start: float
    th_end: float
    variant: str = DERIVED

    @classmethod
    def from_model(cls, model: BghmmModel, variant: str = DERIVED) -> "ThresholdPair":
        return cls(
            th_start=threshold_start(model, variant),
            th_end=threshold_end(model, variant),
            variant=variant,
        )


def residual_excluding(
    y: np.ndarray,
    phi: np.ndarray,
    w: np.ndarray,
    excluded: Iterable[int],
) -> np.ndarray:
    """Residual of the current fit with some columns' contributions kept out.

    Returns ``y - phi @ w + sum_{j in excluded} phi[:, j] * w[j]``, i.e. the
    part of ``y`` unexplained once every column *except* the excluded ones
    has been subtracted.  The start test excludes the tested pair, the end
    test only the tested index.
    """
    r = np.asarray(y, dtype=float) - phi @ w
    for j in excluded:
        r = r + phi[:, j] * w[j]
    return r


def start_test(x: np.ndarray, phi_col: np.ndarray, th_start: float) -> bool:
    """True iff the squared correlation exceeds the activity threshold."""
    c = float(x @ phi_col)
    return c * c > th_start


def end_test(z: np.ndarray, phi_col: np.ndarray, th_end: float, variant: str = DERIVED) -> bool:
    """True iff the inactivity rule declares the tested sample silent.

    Derived variant: small correlation is evidence of silence, fire on
    ``(z . phi)^2 < th_end``.  Paper-literal variant keeps the printed
    ``>`` direction.
    """
    if variant not in RULE_VARIANTS:
        raise ValueError(f"unknown rule variant {variant!r}")
    c = float(z @ phi_col)
    if variant == DERIVED:
        return c * c < th_end
    return c * c > th_end


def sweep_support(
    y: np.ndarray,
    phi: np.ndarray,
    w_current: np.ndarray,
    s_current: np.ndarray,
    model: BghmmModel,
    config: SolverConfig,
) -> np.ndarray:
    """One detection pass over all neighbour pairs; returns the updated support.

    Pairs ``(t-1, t)`` are tested for every index ``t``, with a virtual
    always-inactive sample to the left of index 0.  Per pair: if the
    activity rule fires the index becomes active, else if the inactivity
    rule fires it becomes inactive, else it keeps its previous state.
    Each index is written by exactly one pair and the tests read only
    ``w_current`` (fixed during the sweep), so the ascending in-place
    update order of the pseudocode is equivalent to the batch form below.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w_current, dtype=float)
    s_prev = np.asarray(s_current)
    th1 = threshold_start(model, config.rule_variant)
    th2 = threshold_end(model, config.rule_variant)

    r = y - phi @ w
    base = phi.T @ r  # residual/column correlations with nothing added back
    col_sq = np.einsum("ij,ij->j", phi, phi)
    adjacent = np.einsum("ij,ij->j", phi[:, :-1], phi[:, 1:])  # phi_{t-1} . phi_t

    # corr_z[t] = z_t . phi_t with z_t excluding column t
    corr_z = base + w * col_sq
    # corr_x[t] = x_t . phi_t with x_t excluding columns {t-1, t}
    corr_x = corr_z.copy()
    corr_x[1:] += w[:-1] * adjacent

    start_fires = corr_x * corr_x > th1
    if config.rule_variant == DERIVED:
        end_fires = corr_z * corr_z < th2
    else:
        end_fires = corr_z * corr_z > th2
    return np.where(start_fires, 1, np.where(end_fires, 0, s_prev)).astype(np.int64)
