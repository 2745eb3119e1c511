"""Coherent-state algebra for finite superpositions of coherent states.

Quadrature convention (fixed throughout the package):

    X = (a + a^dag) / sqrt(2),     P = (a - a^dag) / (i sqrt(2)),     [X, P] = i

so every coherent-state quadrature density is a Gaussian of variance 1/2,
|<X|beta>|^2 peaking at X = sqrt(2) Re(beta) and |<P|beta>|^2 at
P = sqrt(2) Im(beta).

Amplitudes up to |beta| ~ 30 are supported: pairwise Gaussian overlaps reach
exp(-1800), far below double-precision underflow, so every sum over component
pairs is accumulated in log-complex form and converted to a plain float or
complex exactly once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

SQRT2 = math.sqrt(2.0)
LOG_PI_QUARTER = -0.25 * math.log(math.pi)   # log of pi**(-1/4)

#: Amplitudes closer than this are considered the same coherent component.
MERGE_TOLERANCE = 1e-12

#: Squared norms below this are numerically null; normalizing would be garbage.
DEGENERATE_NORM = 1e-300
_LOG_DEGENERATE = math.log(DEGENERATE_NORM)


class DegenerateStateError(ArithmeticError):
    """State is numerically null (e.g. conditioned on a wildly unlikely outcome)."""


def _wrap_phase(phi):
    """Wrap angles to (-pi, pi]."""
    w = -((-np.asarray(phi) + np.pi) % (2 * np.pi) - np.pi)
    return w


@dataclass(frozen=True)
class LogComplex:
    """A complex number z stored as (log|z|, arg z); never under- or overflows.

    ``log_magnitude == -inf`` represents exact zero.  Phases are kept in
    (-pi, pi].
    """

    log_magnitude: float
    phase: float

    @classmethod
    def zero(cls) -> "LogComplex":
        return cls(-math.inf, 0.0)

    @classmethod
    def from_complex(cls, z: complex) -> "LogComplex":
        z = complex(z)
        if z == 0:
            return cls.zero()
        return cls(math.log(abs(z)), float(_wrap_phase(np.angle(z))))

    def to_complex(self) -> complex:
        if self.log_magnitude == -math.inf:
            return 0.0 + 0.0j
        return math.exp(self.log_magnitude) * complex(math.cos(self.phase), math.sin(self.phase))

    def mul(self, other: "LogComplex") -> "LogComplex":
        if self.log_magnitude == -math.inf or other.log_magnitude == -math.inf:
            return LogComplex.zero()
        return LogComplex(self.log_magnitude + other.log_magnitude,
                          float(_wrap_phase(self.phase + other.phase)))

    def conj(self) -> "LogComplex":
        return LogComplex(self.log_magnitude, float(_wrap_phase(-self.phase)))


class CoherentComponent(NamedTuple):
    """One term c |beta> of a coherent superposition."""

    coeff: complex
    amp: complex


def _as_complex_array(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=np.complex128)).copy()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError(f"{name} must be finite")
    return arr


def _merge_duplicates(coeffs: np.ndarray, amps: np.ndarray):
    """Sum coefficients of components whose amplitudes coincide to MERGE_TOLERANCE."""
    n = len(amps)
    out_c = np.empty(n, dtype=np.complex128)
    out_a = np.empty(n, dtype=np.complex128)
    m = 0
    for i in range(n):
        if m:
            d = np.abs(out_a[:m] - amps[i])
            j = int(np.argmin(d))
            if d[j] < MERGE_TOLERANCE:
                out_c[j] += coeffs[i]
                continue
        out_c[m] = coeffs[i]
        out_a[m] = amps[i]
        m += 1
    return out_c[:m].copy(), out_a[:m].copy()


@dataclass(frozen=True)
class CoherentSuperposition:
    """Finite superposition sum_n c_n |beta_n> of coherent states.

    Immutable value object; the arrays are marked read-only.  Construct through
    :func:`superposition` (which validates and merges duplicate amplitudes) or
    the convenience constructors below.
    """

    coeffs: np.ndarray
    amps: np.ndarray
    is_normalized: bool = False

    def __len__(self) -> int:
        return len(self.coeffs)

    @property
    def components(self) -> tuple[CoherentComponent, ...]:
        return tuple(CoherentComponent(complex(c), complex(a))
                     for c, a in zip(self.coeffs, self.amps))

    def __iter__(self) -> Iterator[CoherentComponent]:
        return iter(self.components)

    def squared_norm(self) -> float:
        return squared_norm(self)

    def normalized(self) -> "CoherentSuperposition":
        """Return the unit-norm version of this state.

        Raises
        ------
        DegenerateStateError
            If the squared norm is below ``DEGENERATE_NORM``.
        """
        log_norm = _log_squared_norm(self.coeffs, self.amps)
        if log_norm < _LOG_DEGENERATE:
            raise DegenerateStateError("cannot normalize a numerically null state")
        lc, ac = _log_polar(self.coeffs)
        new = np.exp(lc - 0.5 * log_norm) * np.exp(1j * ac)
        return superposition(new, self.amps, normalized=True, merge=False)


def superposition(coeffs, amps, *, normalized: bool = False,
                  merge: bool = True) -> CoherentSuperposition:
    """Build a CoherentSuperposition from coefficient and amplitude sequences."""
    c = _as_complex_array(coeffs, "coeffs")
    a = _as_complex_array(amps, "amps")
    if len(c) != len(a):
        raise ValueError("coeffs and amps must have the same length")
    if len(c) == 0:
        raise ValueError("a physical state needs at least one component")
    if merge:
        c, a = _merge_duplicates(c, a)
    c.setflags(write=False)
    a.setflags(write=False)
    return CoherentSuperposition(c, a, normalized)


def vacuum_state() -> CoherentSuperposition:
    return superposition([1.0], [0.0], normalized=True, merge=False)


def coherent_state(beta: complex) -> CoherentSuperposition:
    return superposition([1.0], [beta], normalized=True, merge=False)


# --------------------------------------------------------------------------
# overlaps and quadrature wavefunctions
# --------------------------------------------------------------------------

def coherent_overlap(beta1: complex, beta2: complex) -> complex:
    """<beta1|beta2> = exp(-|beta1|^2/2 - |beta2|^2/2 + conj(beta1) beta2)."""
    return coherent_overlap_log(beta1, beta2).to_complex()


def coherent_overlap_log(beta1: complex, beta2: complex) -> LogComplex:
    """Underflow-free variant of :func:`coherent_overlap`."""
    b1 = complex(beta1)
    b2 = complex(beta2)
    cross = b1.conjugate() * b2
    logmag = cross.real - 0.5 * (abs(b1) ** 2 + abs(b2) ** 2)
    return LogComplex(logmag, float(_wrap_phase(cross.imag)))


def x_amplitude(X: float, beta: complex) -> complex:
    """Position-quadrature wavefunction <X|beta>.

    <X|beta> = pi^(-1/4) exp(-(X - sqrt2 Re b)^2 / 2
                             + i sqrt2 X Im b - i Re b Im b),
    the phase convention that agrees with the number-basis expansion
    sum_n b^n e^{-|b|^2/2}/sqrt(n!) psi_n(X) with real Hermite functions psi_n.
    """
    lg, ph = _x_amplitude_log_arrays(X, np.asarray([beta], dtype=complex))
    return complex(np.exp(lg[0]) * np.exp(1j * ph[0]))


def p_amplitude(P: float, beta: complex) -> complex:
    """Momentum-quadrature wavefunction <P|beta>; equals x_amplitude(P, -i beta)."""
    return x_amplitude(P, -1j * complex(beta))


def _x_amplitude_log_arrays(X, amps: np.ndarray):
    """(log-magnitude, phase) arrays of <X|amps> for a scalar X."""
    re = amps.real
    im = amps.imag
    logmag = LOG_PI_QUARTER - 0.5 * (X - SQRT2 * re) ** 2
    phase = SQRT2 * X * im - re * im
    return logmag, phase


def _p_amplitude_log_arrays(P, amps: np.ndarray):
    return _x_amplitude_log_arrays(P, -1j * amps)


# --------------------------------------------------------------------------
# log-domain pair sums
# --------------------------------------------------------------------------

_CHUNK = 512


def _log_polar(z: np.ndarray):
    """(log|z|, arg z) with log 0 = -inf and no warnings."""
    mag = np.abs(z)
    with np.errstate(divide="ignore"):
        lg = np.log(mag)
    return lg, np.angle(z)


def _overlap_log_blocks(a_rows: np.ndarray, a_cols: np.ndarray):
    """Log-magnitude and phase of <a_rows[m]|a_cols[n]> as 2-D arrays."""
    cross = np.conj(a_rows)[:, None] * a_cols[None, :]
    m2r = np.abs(a_rows) ** 2
    m2c = np.abs(a_cols) ** 2
    logmag = cross.real - 0.5 * (m2r[:, None] + m2c[None, :])
    return logmag, cross.imag


class _LogAccumulator:
    """Accumulates sum of exp(L) e^{i theta} terms across chunks, stably."""

    def __init__(self):
        self.m = -math.inf
        self.s = 0.0 + 0.0j

    def add(self, logmag: np.ndarray, phase: np.ndarray):
        if logmag.size == 0:
            return
        m2 = float(np.max(logmag))
        if m2 == -math.inf:
            return
        part = np.sum(np.exp(logmag - m2) * np.exp(1j * phase))
        if m2 <= self.m:
            self.s += part * math.exp(m2 - self.m)
        else:
            self.s = self.s * math.exp(self.m - m2) + part
            self.m = m2

    def result(self) -> LogComplex:
        a = abs(self.s)
        if a == 0.0 or self.m == -math.inf:
            return LogComplex.zero()
        return LogComplex(self.m + math.log(a), float(_wrap_phase(np.angle(self.s))))


def _pair_sum_log(log_c, arg_c, amps, *, overlap_power: int = 1) -> LogComplex:
    """sum_{m,n} conj(c_m) c_n <a_m|a_n>^overlap_power in log-complex form."""
    n = len(amps)
    acc = _LogAccumulator()
    for start in range(0, n, _CHUNK):
        rows = slice(start, min(start + _CHUNK, n))
        ov_l, ov_p = _overlap_log_blocks(amps[rows], amps)
        L = log_c[rows][:, None] + log_c[None, :] + overlap_power * ov_l
        T = -arg_c[rows][:, None] + arg_c[None, :] + overlap_power * ov_p
        acc.add(L, T)
    return acc.result()


def _cross_pair_sum_log(log_c1, arg_c1, amps1, log_c2, arg_c2, amps2) -> LogComplex:
    """sum_{m,n} conj(c1_m) c2_n <a1_m|a2_n> in log-complex form."""
    n = len(amps1)
    acc = _LogAccumulator()
    for start in range(0, n, _CHUNK):
        rows = slice(start, min(start + _CHUNK, n))
        ov_l, ov_p = _overlap_log_blocks(amps1[rows], amps2)
        L = log_c1[rows][:, None] + log_c2[None, :] + ov_l
        T = -arg_c1[rows][:, None] + arg_c2[None, :] + ov_p
        acc.add(L, T)
    return acc.result()


def _log_squared_norm(coeffs: np.ndarray, amps: np.ndarray, *,
                      overlap_power: int = 1) -> float:
    lc, ac = _log_polar(coeffs)
    res = _pair_sum_log(lc, ac, amps, overlap_power=overlap_power)
    if res.log_magnitude == -math.inf:
        return -math.inf
    if abs(res.phase) > 1e-12:
        raise ArithmeticError(
            f"squared norm has imaginary residue beyond tolerance (phase {res.phase:.3e})")
    return res.log_magnitude


# --------------------------------------------------------------------------
# norms, inner products, marginals
# --------------------------------------------------------------------------

def squared_norm(psi: CoherentSuperposition) -> float:
    """<psi|psi> = sum_{m,n} conj(c_m) c_n <beta_m|beta_n>.

    Raises
    ------
    DegenerateStateError
        If the result falls below ``DEGENERATE_NORM``; such a state must not
        be normalized.
    """
    log_norm = _log_squared_norm(psi.coeffs, psi.amps)
    if log_norm < _LOG_DEGENERATE:
        raise DegenerateStateError(
            f"state is numerically null (log squared norm {log_norm:.1f})")
    return math.exp(log_norm)


def inner_product(psi: CoherentSuperposition, chi: CoherentSuperposition) -> complex:
    """<psi|chi>; conjugate-symmetric in its arguments."""
    lc1, ac1 = _log_polar(psi.coeffs)
    lc2, ac2 = _log_polar(chi.coeffs)
    return _cross_pair_sum_log(lc1, ac1, psi.amps, lc2, ac2, chi.amps).to_complex()


def _marginal_density(psi: CoherentSuperposition, value: float, log_arrays) -> float:
    lc, ac = _log_polar(psi.coeffs)
    wl, wp = log_arrays(value, psi.amps)
    acc = _LogAccumulator()
    acc.add(lc + wl, ac + wp)
    res = acc.result()
    if res.log_magnitude == -math.inf:
        return 0.0
    return math.exp(min(2.0 * res.log_magnitude, 700.0))


def x_marginal_density(psi: CoherentSuperposition, X: float) -> float:
    """|<X|psi>|^2 for a pure state psi (expects psi normalized)."""
    return _marginal_density(psi, X, _x_amplitude_log_arrays)


def p_marginal_density(psi: CoherentSuperposition, P: float) -> float:
    """|<P|psi>|^2 for a pure state psi (expects psi normalized)."""
    return _marginal_density(psi, P, _p_amplitude_log_arrays)


# --------------------------------------------------------------------------
# JSON state schema
# --------------------------------------------------------------------------

def state_to_json_dict(psi: CoherentSuperposition, measurement_x: float | None = None) -> dict:
    """Serialize to the interchange schema.

    ``{"components": [{"coeff_re", "coeff_im", "amp_re", "amp_im"}, ...],
    "normalized": bool}`` with an optional ``"measurement"`` block for
    homodyne-conditioned states.
    """
    doc = {
        "components": [
            {
                "coeff_re": float(c.real),
                "coeff_im": float(c.imag),
                "amp_re": float(a.real),
                "amp_im": float(a.imag),
            }
            for c, a in zip(psi.coeffs, psi.amps)
        ],
        "normalized": bool(psi.is_normalized),
    }
    if measurement_x is not None:
        doc["measurement"] = {"quadrature": "X", "value": float(measurement_x)}
    return doc


def state_from_json_dict(doc: dict) -> tuple[CoherentSuperposition, float | None]:
    """Inverse of :func:`state_to_json_dict`; returns (state, measurement X or None)."""
    comps = doc["components"]
    coeffs = [complex(c["coeff_re"], c["coeff_im"]) for c in comps]
    amps = [complex(c["amp_re"], c["amp_im"]) for c in comps]
    psi = superposition(coeffs, amps, normalized=bool(doc.get("normalized", False)))
    meas = doc.get("measurement")
    mx = None
    if meas is not None:
        if meas.get("quadrature") != "X":
            raise ValueError(f"unsupported measurement quadrature {meas.get('quadrature')!r}")
        mx = float(meas["value"])
    return psi, mx


def dump_state(psi: CoherentSuperposition, path, measurement_x: float | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(state_to_json_dict(psi, measurement_x), fh, indent=2)
        fh.write("\n")


def load_state(path) -> tuple[CoherentSuperposition, float | None]:
    with open(path, "r", encoding="utf-8") as fh:
        return state_from_json_dict(json.load(fh))
