"""Outer recovery loop: detect support, estimate amplitudes, re-tune, repeat.

``run_block_bhta`` is the full block-coupled solver.  ``run_bpa_baseline``
is the same loop with the chain forced memoryless (transition probabilities
tied to the steady state), which removes the block coupling from both
hypothesis tests; it serves as the structure-blind comparison point.
``run_oracle_support_lmmse`` skips detection entirely and estimates
amplitudes on the true support, giving a per-trial lower bound.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import learn
from .detect import sweep_support
from .estimate import compose_signal, lmmse_amplitudes
from .learn import HyperEstimates, clamp_probability
from .model import BghmmModel, SolverConfig

_UNIT_COLUMN_TOL = 1e-10


class InitializationError(RuntimeError):
    """The minimum-norm least-squares start could not be computed."""


@dataclass(frozen=True)
class SolverOutput:
    """Recovered signal plus convergence and self-tuning diagnostics."""

    w_hat: np.ndarray
    s_hat: np.ndarray
    theta_hat: np.ndarray
    iterations: int
    final_difference: float
    hyper_trace: tuple[HyperEstimates, ...]
    variant: str | None


def _normalized_columns(phi: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Return (unit-column phi, column scales) — scales is None if already unit."""
    phi = np.asarray(phi, dtype=float)
    norms = np.linalg.norm(phi, axis=0)
    if (norms == 0.0).any():
        raise ValueError("phi contains a zero column; cannot normalize")
    if np.abs(norms - 1.0).max() <= _UNIT_COLUMN_TOL:
        return phi, None
    warnings.warn(
        "phi columns are not unit-norm; normalizing internally "
        "(the detection thresholds assume unit columns)",
        stacklevel=3,
    )
    return phi / norms, norms


def _min_norm_least_squares(y: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """``phi^T (phi phi^T)^-1 y``; errors out if the Gram matrix is singular."""
    gram = phi @ phi.T
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise InitializationError(f"phi phi^T is singular: {exc}") from exc
    return phi.T @ scipy.linalg.cho_solve(factor, y, check_finite=False)


def _initial_hyper(y: np.ndarray, n: int, m: int, config: SolverConfig) -> HyperEstimates:
    """Self-tuned starting point: only the inactive fraction is chosen.

    The chain's transition probabilities are not part of the stated
    initialisation, so they start at the memoryless tie (p10 = 1 - p,
    p01 = p); the first parameter update replaces them with learned
    transition counts.
    """
    p0 = clamp_probability(config.p_init)
    sigma_theta0 = learn.update_theta_sigma(y, n, m, p0)
    if sigma_theta0 == 0.0:
        raise InitializationError("y = 0 gives no amplitude scale to start from")
    return HyperEstimates(
        sigma_n=sigma_theta0 / 5.0,
        sigma_theta=sigma_theta0,
        p=p0,
        p10=clamp_probability(1.0 - p0),
        p01=clamp_probability(p0),
    )


@dataclass(frozen=True)
class _EstimatedChain:
    """Chain probabilities estimated independently of each other.

    Unlike MarkovChainParams this carries no steady-state balance
    invariant: transition counts and the zero fraction are separate
    estimators and need not agree mid-iteration.
    """

    p: float
    p10: float
    p01: float

    @property
    def p00(self) -> float:
        return 1.0 - self.p10

    @property
    def p11(self) -> float:
        return 1.0 - self.p01


@dataclass(frozen=True)
class _EstimatedModel:
    markov: _EstimatedChain
    sigma_theta: float
    sigma_n: float


def _hyper_model(hyper: HyperEstimates) -> _EstimatedModel:
    return _EstimatedModel(
        markov=_EstimatedChain(p=hyper.p, p10=hyper.p10, p01=hyper.p01),
        sigma_theta=hyper.sigma_theta,
        sigma_n=hyper.sigma_n,
    )


def _run_loop(
    y: np.ndarray,
    phi: np.ndarray,
    config: SolverConfig,
    iid_coupling: bool,
) -> SolverOutput:
    y = np.asarray(y, dtype=float)
    phi, column_scales = _normalized_columns(phi)
    n, m = phi.shape

    hyper = _initial_hyper(y, n, m, config)
    trace = [hyper]
    w_prev = _min_norm_least_squares(y, phi)
    s = np.zeros(m, dtype=np.int64)
    theta = np.zeros(m)
    w = w_prev
    difference = 1.0
    iterations = 0

    for _ in range(config.k_max):
        iterations += 1
        s = sweep_support(y, phi, w_prev, s, _hyper_model(hyper), config)
        theta, _ = lmmse_amplitudes(y, phi, s, hyper.sigma_n, hyper.sigma_theta)
        w = compose_signal(s, theta)

        if config.learn_params:
            p_hat, p10_hat, p01_hat = learn.update_markov(s, hyper.p10, hyper.p01)
            if iid_coupling:
                p10_hat = clamp_probability(1.0 - p_hat)
                p01_hat = clamp_probability(p_hat)
            sigma_theta_hat = learn.update_theta_sigma(y, n, m, p_hat)
            sigma_n_hat = learn.update_noise_sigma(y, phi, w, sigma_theta_hat)
            hyper = HyperEstimates(
                sigma_n=sigma_n_hat,
                sigma_theta=sigma_theta_hat,
                p=p_hat,
                p10=p10_hat,
                p01=p01_hat,
            )
        trace.append(hyper)

        w_norm = float(np.linalg.norm(w))
        if w_norm > 0.0:
            difference = float(np.linalg.norm(w - w_prev)) / w_norm
        elif float(np.linalg.norm(w_prev)) == 0.0:
            difference = 0.0  # two zero iterates in a row: trivially converged
        else:
            difference = 1.0
        w_prev = w
        if difference <= config.epsilon:
            break

    if column_scales is not None:
        w = w / column_scales
        theta = theta / column_scales
    return SolverOutput(
        w_hat=w,
        s_hat=s,
        theta_hat=theta,
        iterations=iterations,
        final_difference=difference,
        hyper_trace=tuple(trace),
        variant=config.rule_variant,
    )


def run_block_bhta(
    y: np.ndarray, phi: np.ndarray, config: SolverConfig | None = None
) -> SolverOutput:
    """Block-coupled recovery: hypothesis-test detection plus LMMSE amplitudes."""
    return _run_loop(y, phi, config or SolverConfig(), iid_coupling=False)


def run_bpa_baseline(
    y: np.ndarray, phi: np.ndarray, config: SolverConfig | None = None
) -> SolverOutput:
    """Memoryless (i.i.d. prior) degeneration of the same loop.

    The chain parameters are tied to the steady state (p10 = 1 - p,
    p01 = p) at initialisation and after every update, so consecutive
    samples carry no coupling and both tests reduce to one symmetric
    correlation threshold.
    """
    return _run_loop(y, phi, config or SolverConfig(), iid_coupling=True)


def run_oracle_support_lmmse(
    y: np.ndarray,
    phi: np.ndarray,
    s_true: np.ndarray,
    model: BghmmModel,
) -> SolverOutput:
    """One LMMSE pass on the true support (benchmark lower bound)."""
    y = np.asarray(y, dtype=float)
    phi, column_scales = _normalized_columns(phi)
    s_true = np.asarray(s_true).astype(np.int64)
    theta, _ = lmmse_amplitudes(y, phi, s_true, model.sigma_n, model.sigma_theta)
    w = compose_signal(s_true, theta)
    if column_scales is not None:
        w = w / column_scales
        theta = theta / column_scales
    hyper = HyperEstimates(
        sigma_n=model.sigma_n,
        sigma_theta=model.sigma_theta,
        p=clamp_probability(model.markov.p),
        p10=clamp_probability(model.markov.p10),
        p01=clamp_probability(model.markov.p01),
    )
    return SolverOutput(
        w_hat=w,
        s_hat=s_true,
        theta_hat=theta,
        iterations=1,
        final_difference=0.0,
        hyper_trace=(hyper,),
        variant=None,
    )
