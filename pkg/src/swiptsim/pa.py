"""Memoryless power-amplifier models and Bussgang linearization.

AM/AM-only models (AM/PM conversion is neglected): the solid-state amplifier
with a smooth saturation knee, the hard-clipping soft limiter, and a fitted
polynomial transfer used by the predistorter module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import erfc

from .ofdm import ComplexSignal

MAX_CLASS_A_EFFICIENCY = 0.5

_PA_KINDS = ("sspa", "soft_limiter", "polynomial")


@dataclass(frozen=True)
class PaModel:
    """Amplifier transfer description.

    a_sat is the saturation output amplitude, smoothness the knee parameter p
    of the sspa model (large p approaches the soft limiter). For the
    polynomial kind, coeffs are ascending-power AM/AM coefficients.
    """

    kind: str
    a_sat: float = 1.0
    smoothness: float = 1.2
    coeffs: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind not in _PA_KINDS:
            raise ValueError(f"kind must be one of {_PA_KINDS}")
        if self.a_sat <= 0:
            raise ValueError("a_sat must be positive")
        if self.kind == "sspa" and self.smoothness <= 0:
            raise ValueError("smoothness must be positive")
        if self.kind == "polynomial" and not self.coeffs:
            raise ValueError("polynomial model needs coefficients")

    @classmethod
    def sspa(cls, a_sat: float = 1.0, smoothness: float = 1.2) -> "PaModel":
        return cls("sspa", a_sat=a_sat, smoothness=smoothness)

    @classmethod
    def soft_limiter_model(cls, a_sat: float = 1.0) -> "PaModel":
        return cls("soft_limiter", a_sat=a_sat)

    @classmethod
    def polynomial(cls, coeffs) -> "PaModel":
        return cls("polynomial", coeffs=tuple(float(c) for c in coeffs))

    def am_am(self, magnitude):
        """Output amplitude for a given input amplitude (unit linear gain)."""
        m = np.asarray(magnitude, dtype=float)
        if np.any(m < 0):
            raise ValueError("magnitude must be non-negative")
        if self.kind == "sspa":
            return sspa_am_am(m, self)
        if self.kind == "soft_limiter":
            return np.minimum(m, self.a_sat)
        return npoly.polyval(m, np.asarray(self.coeffs))


@dataclass(frozen=True)
class OperatingPoint:
    """PA drive level: input back-off in dB and the clipping level A_c.

    The back-off nu^2 = 10^(ibo_db/10) is applied to a unit-average-power
    input as the amplitude pre-gain 10^(-ibo_db/20). clipping_level defaults
    to 1, the a_sat / mean-input-power normalization for unit-power drive
    and unit saturation.
    """

    ibo_db: float
    clipping_level: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.ibo_db):
            raise ValueError("ibo_db must be finite")
        if self.clipping_level <= 0:
            raise ValueError("clipping_level must be positive")

    @property
    def nu(self) -> float:
        return 10.0 ** (self.ibo_db / 20.0)

    @property
    def input_gain(self) -> float:
        return 10.0 ** (-self.ibo_db / 20.0)


def sspa_am_am(magnitude, pa: PaModel):
    """Smooth saturation AM/AM: m / (1 + (m/A_s)^(2p))^(1/(2p))."""
    m = np.asarray(magnitude, dtype=float)
    if np.any(m < 0):
        raise ValueError("magnitude must be non-negative")
    two_p = 2.0 * pa.smoothness
    return m / (1.0 + (m / pa.a_sat) ** two_p) ** (1.0 / two_p)


def soft_limiter(samples, pa: PaModel, op: OperatingPoint):
    """Two-branch clipped amplifier acting on a unit-power input block.

    Below the clip threshold the magnitude is scaled by A_c/nu, above it the
    output is pinned at A_s; the phase is preserved. The back-off gain is part
    of the limiter here (for the pre-gain convention use apply_pa).
    """
    x = np.asarray(samples, dtype=np.complex128)
    nu = op.nu
    a_c = op.clipping_level
    mag = np.abs(x)
    threshold = nu * pa.a_sat / a_c
    out_mag = np.where(mag <= threshold, mag * (a_c / nu), pa.a_sat)
    ratio = np.divide(out_mag, mag, out=np.full_like(mag, a_c / nu), where=mag > 0)
    return x * ratio


def apply_pa(signal: ComplexSignal, pa: PaModel, op: OperatingPoint) -> ComplexSignal:
    """Drive the PA at the configured back-off.

    The input is expected at unit average power; the back-off enters as the
    explicit pre-gain 10^(-IBO/20) and the AM/AM characteristic is applied
    sample-wise with the phase left untouched.
    """
    u = signal.samples * op.input_gain
    mag = np.abs(u)
    out_mag = pa.am_am(mag)
    ratio = np.divide(out_mag, mag, out=np.ones_like(mag), where=mag > 0)
    return signal.with_samples(u * ratio)


def class_a_efficiency(papr_db: float) -> float:
    """Average class-A PA efficiency at a given PAPR: 0.5 / PAPR(linear)."""
    if papr_db < 0:
        raise ValueError("papr_db must be non-negative")
    return MAX_CLASS_A_EFFICIENCY / 10.0 ** (papr_db / 10.0)


def efficiency_at_backoff(ibo_db: float) -> float:
    """Average class-A efficiency at an operating input back-off.

    Backing the drive off by ibo_db leaves the amplitude headroom
    nu = 10^(ibo_db/20), and the average efficiency of the class-A stage
    operated at that headroom is eta_max / nu. This is the efficiency
    bookkeeping used for the technique comparison tables.
    """
    if ibo_db < 0:
        raise ValueError("ibo_db must be non-negative")
    return MAX_CLASS_A_EFFICIENCY * 10.0 ** (-ibo_db / 20.0)


@dataclass(frozen=True)
class BussgangParams:
    """Linearized-model parameters: gain k_l and distortion variance sigma_d2."""

    k_l: float
    sigma_d2: float


def _as_array(signal) -> np.ndarray:
    if isinstance(signal, ComplexSignal):
        return signal.samples
    return np.asarray(signal, dtype=np.complex128)


def bussgang_estimate(reference, output) -> BussgangParams:
    """Empirical Bussgang decomposition of output against reference.

    K_L = E{x* g[x]} / E{|x|^2} and sigma_d^2 = E{|g[x]|^2} - |K_L|^2 E{|x|^2}
    with sample-mean estimators; sigma_d^2 is clamped at zero since tiny
    negative values only arise from floating-point noise.
    """
    x = _as_array(reference)
    y = _as_array(output)
    if x.size != y.size:
        raise ValueError("reference and output lengths differ")
    p_in = float(np.mean(np.abs(x) ** 2))
    if p_in <= 0:
        raise ValueError("reference power is zero")
    k = np.vdot(x, y) / (x.size * p_in)
    sigma_d2 = float(np.mean(np.abs(y) ** 2)) - abs(k) ** 2 * p_in
    return BussgangParams(float(k.real), max(float(sigma_d2), 0.0))


def bussgang_analytic_sl(
    op: OperatingPoint, sigma_formula: str = "consistent"
) -> BussgangParams:
    """Closed-form Bussgang parameters of the clipped (soft-limiter) chain
    driven by a unit-power circular Gaussian input.

    K_L(nu) = (A_c/nu) (1 - exp(-nu^2) + (sqrt(pi) nu / 2) erfc(nu)).

    sigma_formula selects the distortion-power expression:

    * ``"as_printed"`` evaluates (A_c/nu)(1 - exp(-nu^2) - K_L^2) verbatim.
      Its prefactor enters unsquared against the power-like K_L^2 term, which
      is dimensionally inconsistent; kept for side-by-side reporting only.
    * ``"consistent"`` (default) matches the second moment of the clipped
      chain, (A_c/nu)^2 (1 - exp(-nu^2)) - K_L^2, and agrees with the
      empirical estimator.
    """
    nu = op.nu
    if nu <= 0:
        raise ValueError("nu must be positive")
    a_c = op.clipping_level
    bracket = 1.0 - np.exp(-(nu**2)) + (np.sqrt(np.pi) * nu / 2.0) * erfc(nu)
    k_l = (a_c / nu) * bracket
    if sigma_formula == "as_printed":
        sigma_d2 = (a_c / nu) * (1.0 - np.exp(-(nu**2)) - k_l**2)
    elif sigma_formula == "consistent":
        sigma_d2 = (a_c / nu) ** 2 * (1.0 - np.exp(-(nu**2))) - k_l**2
    else:
        raise ValueError("sigma_formula must be 'consistent' or 'as_printed'")
    return BussgangParams(float(k_l), max(float(sigma_d2), 0.0))
