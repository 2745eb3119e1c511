"""Beam splitting with vacuum and homodyne conditioning.

A 50-50 beam splitter with vacuum on the idle port maps every component
|beta> of a single-mode superposition to the two-mode product
|beta/sqrt2> (x) |beta/sqrt2>; no arm picks up a sign (conventions differing
by output-arm sign flips relabel amplitudes deterministically and change no
density or fidelity).  Measuring X on the first output mode collapses the
second onto

    sum_n  c_n <X|beta_n/sqrt2>  |beta_n/sqrt2>     (renormalized),

and the outcome density p(X) = Tr[rho_1 |X><X|] is exactly the state's
pre-normalization squared norm, with the traced-out second mode contributing
one factor <beta_m/sqrt2|beta_n/sqrt2> per component pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .states import (
    CoherentSuperposition,
    DegenerateStateError,
    LogComplex,
    SQRT2,
    _LOG_DEGENERATE,
    _log_polar,
    _pair_sum_log,
    _x_amplitude_log_arrays,
    superposition,
)


@dataclass(frozen=True)
class HomodyneOutcome:
    """Measured X-quadrature value on the monitored output mode."""

    x: float

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise ValueError("measurement outcome must be finite")


@dataclass(frozen=True)
class TwoModeProductSuperposition:
    """sum_n c_n |b_n> (x) |b_n>: both outputs of a 50-50 split share b_n.

    Structural property of splitting a single-mode superposition with vacuum;
    ``amps`` holds the per-arm amplitudes b_n = beta_n / sqrt2.
    """

    coeffs: np.ndarray
    amps: np.ndarray
    is_normalized: bool = False

    def __len__(self) -> int:
        return len(self.coeffs)

    def squared_norm(self) -> float:
        """Two-mode norm: component overlaps enter squared, <b_m|b_n>^2."""
        lc, ac = _log_polar(self.coeffs)
        res = _pair_sum_log(lc, ac, self.amps, overlap_power=2)
        if res.log_magnitude == -math.inf:
            return 0.0
        if abs(res.phase) > 1e-12:
            raise ArithmeticError("two-mode squared norm has imaginary residue")
        return math.exp(res.log_magnitude)


def beamsplit_with_vacuum(psi: CoherentSuperposition) -> TwoModeProductSuperposition:
    """50-50 split against vacuum: (c_n, beta_n) -> (c_n, beta_n/sqrt2) per arm.

    Norm is preserved exactly: the squared two-mode overlaps
    <b_m|b_n>^2 reproduce the original Gram matrix <beta_m|beta_n>.
    """
    amps = (psi.amps / SQRT2).copy()
    amps.setflags(write=False)
    return TwoModeProductSuperposition(psi.coeffs, amps, psi.is_normalized)


def _as_outcome(outcome) -> float:
    if isinstance(outcome, HomodyneOutcome):
        return outcome.x
    x = float(outcome)
    if not math.isfinite(x):
        raise ValueError("measurement outcome must be finite")
    return x


def _conditioned_log_terms(two_mode: TwoModeProductSuperposition, x: float):
    """Log-polar coefficients c_n <X|b_n> of the collapsed (unnormalized) state."""
    lc, ac = _log_polar(two_mode.coeffs)
    wl, wp = _x_amplitude_log_arrays(x, two_mode.amps)
    return lc + wl, ac + wp


def _outcome_log_density(two_mode: TwoModeProductSuperposition, x: float) -> LogComplex:
    lq, aq = _conditioned_log_terms(two_mode, x)
    return _pair_sum_log(lq, aq, two_mode.amps)


def x_outcome_density(two_mode: TwoModeProductSuperposition, X: float) -> float:
    """Homodyne outcome density Tr[rho_1 |X><X|]; integrates to 1 over X."""
    res = _outcome_log_density(two_mode, float(X))
    if res.log_magnitude == -math.inf:
        return 0.0
    if abs(res.phase) > 1e-12:
        raise ArithmeticError("outcome density has imaginary residue")
    return math.exp(min(res.log_magnitude, 700.0))


def condition_on_x(two_mode: TwoModeProductSuperposition, outcome) -> CoherentSuperposition:
    """Collapse the unmonitored mode on homodyne outcome X (exact projection).

    Coefficients and the normalization are assembled in the log domain, so
    outcomes deep in the Gaussian tails normalize correctly until the state is
    numerically null.

    Raises
    ------
    DegenerateStateError
        If the pre-normalization squared norm falls below 1e-300.
    """
    x = _as_outcome(outcome)
    lq, aq = _conditioned_log_terms(two_mode, x)
    res = _pair_sum_log(lq, aq, two_mode.amps)
    if res.log_magnitude == -math.inf or res.log_magnitude < _LOG_DEGENERATE:
        raise DegenerateStateError(
            f"conditioning on X = {x:g} annihilates the state "
            f"(log density {res.log_magnitude:.1f})")
    coeffs = np.exp(lq - 0.5 * res.log_magnitude) * np.exp(1j * aq)
    return superposition(coeffs, two_mode.amps, normalized=True, merge=False)
