"""Shared domain types and the rank-one covariance identities.

Every quantity in this package lives in the linear observation model
``y = phi @ w + n`` with ``w = s * theta``: a binary support chain ``s``
drawn from a two-state Markov process, Gaussian amplitudes ``theta``,
and white Gaussian measurement noise. The types here carry the model
parameters; the two functions at the bottom implement the only pieces
of covariance algebra the detector needs, specialised to the rank-one
update ``sigma_n^2 I + sigma_theta^2 phi phi^T`` for a unit-norm column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Rule variants for the detection thresholds/tests.  "derived" follows the
# algebra of the hypothesis-test likelihoods; "paper_literal" keeps the
# printed closed forms (see detect module for the differences).
DERIVED = "derived"
PAPER_LITERAL = "paper_literal"
RULE_VARIANTS = (DERIVED, PAPER_LITERAL)

_CONSISTENCY_TOL = 1e-12


class SingularCovarianceError(ValueError):
    """Raised when a covariance operation needs sigma_n > 0 but got 0."""


def _check_probability(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MarkovChainParams:
    """Two-state support chain: steady state and transition probabilities.

    ``p`` is the long-run probability that a sample is inactive,
    ``p10`` the inactive-to-active and ``p01`` the active-to-inactive
    transition probability.  The three values must satisfy the
    steady-state balance ``p01 * (1 - p) == p * p10``.
    """

    p: float
    p10: float
    p01: float

    def __post_init__(self) -> None:
        for name in ("p", "p10", "p01"):
            object.__setattr__(self, name, _check_probability(name, getattr(self, name)))
        balance = abs(self.p01 * (1.0 - self.p) - self.p * self.p10)
        if balance > _CONSISTENCY_TOL:
            raise ValueError(
                "inconsistent chain parameters: "
                f"p01*(1-p)={self.p01 * (1.0 - self.p)!r} but p*p10={self.p * self.p10!r}"
            )

    @classmethod
    def from_p_p10(cls, p: float, p10: float) -> "MarkovChainParams":
        """Build from (steady state, activation probability); derives p01."""
        p = _check_probability("p", p)
        p10 = _check_probability("p10", p10)
        if p == 1.0:
            # 1 - p = 0: p01 is unconstrained; only p10 = 0 is consistent.
            if p10 != 0.0:
                raise ValueError("p = 1 requires p10 = 0 (absorbing inactive chain)")
            return cls(p=1.0, p10=0.0, p01=0.0)
        p01 = p * p10 / (1.0 - p)
        if p01 > 1.0:
            raise ValueError(f"derived p01 = {p01!r} exceeds 1; (p, p10) infeasible")
        return cls(p=p, p10=p10, p01=p01)

    @classmethod
    def from_p_p01(cls, p: float, p01: float) -> "MarkovChainParams":
        """Build from (steady state, deactivation probability); derives p10.

        ``p = 1`` is rejected: an all-inactive steady state leaves p01
        meaningless, and ``p = 0`` would divide by zero.
        """
        p = _check_probability("p", p)
        p01 = _check_probability("p01", p01)
        if p == 1.0:
            raise ValueError("p = 1 leaves p01 unconstrained; construct from (p, p10)")
        if p == 0.0:
            raise ValueError("p = 0 cannot determine p10; construct from (p, p10)")
        p10 = p01 * (1.0 - p) / p
        if p10 > 1.0:
            raise ValueError(f"derived p10 = {p10!r} exceeds 1; (p, p01) infeasible")
        return cls(p=p, p10=p10, p01=p01)

    @property
    def p00(self) -> float:
        return 1.0 - self.p10

    @property
    def p11(self) -> float:
        return 1.0 - self.p01


@dataclass(frozen=True)
class BghmmModel:
    """Bernoulli-Gaussian hidden Markov signal model parameters."""

    markov: MarkovChainParams
    sigma_theta: float
    sigma_n: float

    def __post_init__(self) -> None:
        if not self.sigma_theta > 0.0:
            raise ValueError(f"sigma_theta must be > 0, got {self.sigma_theta!r}")
        if not self.sigma_n >= 0.0:
            raise ValueError(f"sigma_n must be >= 0, got {self.sigma_n!r}")


@dataclass(frozen=True)
class SparseSignal:
    """Support, amplitudes, and their elementwise product."""

    s: np.ndarray
    theta: np.ndarray
    w: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        s = np.asarray(self.s)
        if not np.isin(s, (0, 1)).all():
            raise ValueError("support entries must be 0 or 1")
        theta = _readonly(self.theta)
        s = _readonly(s)
        if s.shape != theta.shape:
            raise ValueError("s and theta must have equal length")
        w = s * theta if self.w is None else _readonly(self.w)
        if not np.array_equal(w, s * theta):
            raise ValueError("w must equal s * theta elementwise")
        w.flags.writeable = False
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_parts(cls, s: np.ndarray, theta: np.ndarray) -> "SparseSignal":
        return cls(s=np.asarray(s), theta=np.asarray(theta))

    def __len__(self) -> int:
        return self.w.shape[0]


_UNIT_COLUMN_TOL = 1e-10


@dataclass(frozen=True)
class MeasurementSystem:
    """Unit-column measurement matrix and the observed vector."""

    phi: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        phi = _readonly(self.phi)
        y = _readonly(self.y)
        if phi.ndim != 2 or y.ndim != 1:
            raise ValueError("phi must be a matrix and y a vector")
        if phi.shape[0] != y.shape[0]:
            raise ValueError(f"phi has {phi.shape[0]} rows but y has length {y.shape[0]}")
        norms = np.linalg.norm(phi, axis=0)
        if np.abs(norms - 1.0).max() > _UNIT_COLUMN_TOL:
            worst = int(np.abs(norms - 1.0).argmax())
            raise ValueError(f"column {worst} has norm {norms[worst]!r}, expected 1")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "y", y)

    @property
    def shape(self) -> tuple[int, int]:
        return self.phi.shape  # type: ignore[return-value]


@dataclass(frozen=True)
class SolverConfig:
    """Outer-loop controls for the recovery solvers."""

    k_max: int = 50
    epsilon: float = 1e-4
    p_init: float = 0.9
    rule_variant: str = DERIVED
    learn_params: bool = True

    def __post_init__(self) -> None:
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max!r}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")
        if not 0.5 <= self.p_init <= 1.0:
            raise ValueError(f"p_init must lie in [0.5, 1], got {self.p_init!r}")
        if self.rule_variant not in RULE_VARIANTS:
            raise ValueError(f"rule_variant must be one of {RULE_VARIANTS}, got {self.rule_variant!r}")


def rank_one_inverse_apply(
    v: np.ndarray,
    phi_col: np.ndarray,
    sigma_n: float,
    sigma_theta: float,
) -> np.ndarray:
    """Apply the inverse of ``sigma_n^2 I + sigma_theta^2 phi phi^T`` to ``v``.

    Uses the Sherman-Morrison form for a unit-norm column, so the N x N
    matrix is never materialised:

        inv(Sigma) v = v / sigma_n^2
                       - phi (phi^T v) / (sigma_n^2 * (1 + sigma_n^2 / sigma_theta^2))
    """
    if sigma_n == 0.0:
        raise SingularCovarianceError("sigma_n = 0 makes the covariance singular")
    v = np.asarray(v, dtype=float)
    phi_col = np.asarray(phi_col, dtype=float)
    inv_var = 1.0 / (sigma_n * sigma_n)
    if sigma_theta == 0.0:
        return inv_var * v
    shrink = inv_var / (1.0 + (sigma_n / sigma_theta) ** 2)
    return inv_var * v - phi_col * (phi_col @ v) * shrink


def log_det_ratio(sigma_n: float, sigma_theta: float) -> float:
    """``ln(det(Sigma) / sigma_n^(2N))`` for the unit-column rank-one update.

    The matrix determinant lemma gives
    ``det(Sigma) = sigma_n^(2N) * (1 + sigma_theta^2 / sigma_n^2)``,
    so the ratio is independent of N.
    """
    if not sigma_n > 0.0:
        raise SingularCovarianceError(f"sigma_n must be > 0, got {sigma_n!r}")
    if sigma_theta < 0.0:
        raise ValueError(f"sigma_theta must be >= 0, got {sigma_theta!r}")
    return math.log1p((sigma_theta / sigma_n) ** 2)
