"""Synthetic block-sparse instances: support chains, amplitudes, matrices, noise.

All draws are keyed by a :class:`TrialSeed` so that a benchmark trial is a
pure function of ``(base_seed, trial_index)``.  Each kind of draw (support,
amplitudes, matrix, noise) uses its own child stream, so the draws stay
independent and bit-reproducible no matter which of them a caller skips.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .model import BghmmModel, MarkovChainParams, MeasurementSystem, SparseSignal

logger = logging.getLogger(__name__)

# Child-stream roles under one trial seed.
_ROLE_SUPPORT = 0
_ROLE_AMPLITUDES = 1
_ROLE_MATRIX = 2
_ROLE_NOISE = 3


@dataclass(frozen=True)
class TrialSeed:
    """Deterministic key for one benchmark trial's random draws."""

    base_seed: int
    trial_index: int = 0

    def __post_init__(self) -> None:
        if not 0 <= int(self.base_seed) < 2**64:
            raise ValueError(f"base_seed must be an unsigned 64-bit integer, got {self.base_seed!r}")
        if int(self.trial_index) < 0:
            raise ValueError(f"trial_index must be >= 0, got {self.trial_index!r}")

    def rng(self, role: int) -> np.random.Generator:
        """Independent generator for one draw role of this trial."""
        seq = np.random.SeedSequence(
            entropy=(int(self.base_seed), int(self.trial_index)), spawn_key=(role,)
        )
        return np.random.default_rng(seq)


def _draw_support(markov: MarkovChainParams, m: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(m)
    s = np.zeros(m, dtype=np.int64)
    s[0] = 1 if u[0] >= markov.p else 0  # steady state: Pr{s=0} = p
    for i in range(1, m):
        if s[i - 1] == 0:
            s[i] = 1 if u[i] < markov.p10 else 0
        else:
            s[i] = 0 if u[i] < markov.p01 else 1
    return s


def sample_support(markov: MarkovChainParams, m: int, seed: TrialSeed) -> np.ndarray:
    """Draw a length-``m`` support chain started from the steady state."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m!r}")
    return _draw_support(markov, m, seed.rng(_ROLE_SUPPORT))


def sample_amplitudes(sigma_theta: float, m: int, seed: TrialSeed) -> np.ndarray:
    """Draw i.i.d. zero-mean Gaussian amplitudes with deviation ``sigma_theta``."""
    if not sigma_theta > 0.0:
        raise ValueError(f"sigma_theta must be > 0, got {sigma_theta!r}")
    return seed.rng(_ROLE_AMPLITUDES).normal(0.0, sigma_theta, size=m)


def sample_matrix(n: int, m: int, seed: TrialSeed) -> np.ndarray:
    """Draw an ``n x m`` matrix, entries uniform on [-1, 1], columns unit-norm."""
    if n < 1 or m < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {n!r} x {m!r}")
    rng = seed.rng(_ROLE_MATRIX)
    phi = rng.uniform(-1.0, 1.0, size=(n, m))
    norms = np.linalg.norm(phi, axis=0)
    while (norms == 0.0).any():  # probability zero, but keep the contract exact
        dead = norms == 0.0
        phi[:, dead] = rng.uniform(-1.0, 1.0, size=(n, int(dead.sum())))
        norms = np.linalg.norm(phi, axis=0)
    return phi / norms


def measure_with_snr(
    phi: np.ndarray,
    w_gen: np.ndarray,
    target_snr_db: float,
    seed: TrialSeed,
) -> tuple[np.ndarray, float]:
    """Observe ``phi @ w_gen`` plus noise scaled to hit the target SNR exactly.

    The noise direction is Gaussian; its length is rescaled so that
    ``20*log10(||phi w|| / ||n||)`` equals ``target_snr_db`` for the realized
    vector.  Returns the observation and the implied per-sample noise
    deviation ``||n|| / sqrt(N)``.
    """
    if not np.isfinite(target_snr_db):
        raise ValueError(f"target_snr_db must be finite, got {target_snr_db!r}")
    phi = np.asarray(phi, dtype=float)
    w_gen = np.asarray(w_gen, dtype=float)
    signal = phi @ w_gen
    signal_norm = float(np.linalg.norm(signal))
    if signal_norm == 0.0:
        raise ValueError("w_gen produces a zero observation; SNR is undefined")
    rng = seed.rng(_ROLE_NOISE)
    direction = rng.standard_normal(phi.shape[0])
    direction_norm = float(np.linalg.norm(direction))
    while direction_norm == 0.0:
        direction = rng.standard_normal(phi.shape[0])
        direction_norm = float(np.linalg.norm(direction))
    noise = direction * (signal_norm / direction_norm) * 10.0 ** (-target_snr_db / 20.0)
    sigma_n_true = float(np.linalg.norm(noise)) / np.sqrt(phi.shape[0])
    return signal + noise, sigma_n_true


def generate_trial(
    markov: MarkovChainParams,
    sigma_theta: float,
    n: int,
    m: int,
    target_snr_db: float,
    seed: TrialSeed,
) -> tuple[SparseSignal, MeasurementSystem, BghmmModel]:
    """Draw one complete benchmark instance.

    An all-zero support draw (possible under the chain prior, but useless
    for a recovery trial) is discarded and redrawn from the same support
    stream; the number of discards is logged.  The returned model carries
    the generator's chain and amplitude deviation together with the
    realized per-sample noise deviation.
    """
    if markov.p == 1.0 and markov.p10 == 0.0:
        raise ValueError("chain can never activate; no usable trial exists")
    rng_support = seed.rng(_ROLE_SUPPORT)
    s = _draw_support(markov, m, rng_support)
    resamples = 0
    while not s.any():
        s = _draw_support(markov, m, rng_support)
        resamples += 1
    if resamples:
        logger.info(
            "trial (%d, %d): discarded %d all-zero support draw(s)",
            seed.base_seed, seed.trial_index, resamples,
        )
    theta = sample_amplitudes(sigma_theta, m, seed)
    signal = SparseSignal.from_parts(s, theta)
    phi = sample_matrix(n, m, seed)
    y, sigma_n_true = measure_with_snr(phi, signal.w, target_snr_db, seed)
    system = MeasurementSystem(phi=phi, y=y)
    model = BghmmModel(markov=markov, sigma_theta=sigma_theta, sigma_n=sigma_n_true)
    return signal, system, model
