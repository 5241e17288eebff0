"""Mu-law companding of OFDM envelopes and the companded-chain noise model.

Compression acts on the complex envelope: the magnitude is mapped through
the mu-law characteristic and the phase is kept.  A real-signal variant
using sgn() is provided for testing the scalar transfer curves directly.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .ofdm import ComplexSignal, OfdmConfig, papr_samples, papr_quantile_db
from .pa import BussgangParams, OperatingPoint, PaModel, bussgang_analytic_sl

log = logging.getLogger(__name__)


def ensemble_peak(exceedance: float = 1e-3) -> float:
    """Fixed peak amplitude A for unit-power OFDM envelopes.

    The envelope of a long unit-power OFDM waveform is Rayleigh to a very
    good approximation, so the amplitude exceeded by a fraction
    ``exceedance`` of samples is sqrt(-ln(exceedance)).  Using a fixed
    ensemble value instead of the per-symbol maximum means the receiver
    needs no side information to expand.
    """
    if not 0.0 < exceedance < 1.0:
        raise ValueError("exceedance must lie in (0, 1)")
    return math.sqrt(-math.log(exceedance))


@dataclass(frozen=True)
class CompanderParams:
    """Mu-law parameter set: compression strength mu and peak magnitude A."""

    mu: float
    peak: float

    def __post_init__(self) -> None:
        if not self.mu > 0.0:
            raise ValueError("mu must be positive")
        if not self.peak > 0.0:
            raise ValueError("peak must be positive")

    @classmethod
    def default(cls, mu: float = 1.25) -> "CompanderParams":
        return cls(mu=mu, peak=ensemble_peak())


def compress_magnitude(magnitude: np.ndarray, params: CompanderParams) -> np.ndarray:
    m = np.asarray(magnitude, dtype=float)
    return params.peak * np.log1p(params.mu * m / params.peak) / math.log1p(params.mu)


def expand_magnitude(magnitude: np.ndarray, params: CompanderParams) -> np.ndarray:
    m = np.asarray(magnitude, dtype=float)
    return (params.peak / params.mu) * np.expm1(m * math.log1p(params.mu) / params.peak)


def compress_real(samples: np.ndarray, params: CompanderParams) -> np.ndarray:
    """Scalar mu-law on a real vector, sign preserved."""
    s = np.asarray(samples, dtype=float)
    return np.sign(s) * compress_magnitude(np.abs(s), params)


def expand_real(samples: np.ndarray, params: CompanderParams) -> np.ndarray:
    s = np.asarray(samples, dtype=float)
    return np.sign(s) * expand_magnitude(np.abs(s), params)


def _remap(signal: ComplexSignal, new_mag: np.ndarray, old_mag: np.ndarray) -> ComplexSignal:
    ratio = np.divide(new_mag, old_mag, out=np.zeros_like(old_mag), where=old_mag > 0)
    return signal.with_samples(signal.samples * ratio)


def compress(signal: ComplexSignal, params: CompanderParams) -> ComplexSignal:
    m = np.abs(signal.samples)
    peak_seen = float(m.max(initial=0.0))
    if peak_seen > params.peak:
        warnings.warn(
            f"sample magnitude {peak_seen:.3f} exceeds configured peak "
            f"{params.peak:.3f}; compression continues past the knee",
            RuntimeWarning,
            stacklevel=2,
        )
    return _remap(signal, compress_magnitude(m, params), m)


def expand(signal: ComplexSignal, params: CompanderParams) -> ComplexSignal:
    m = np.abs(signal.samples)
    return _remap(signal, expand_magnitude(m, params), m)


def mu_law_noise_factor(params: CompanderParams) -> float:
    """Gain applied by the expander to additive noise and distortion.

    (ln(1+mu)/mu)^2 + (ln(1+mu)/A)^2, from a first-order expansion of the
    expander around the compressed signal.
    """
    t = math.log1p(params.mu)
    return (t / params.mu) ** 2 + (t / params.peak) ** 2


def noise_distortion_power(sigma2: float, params: CompanderParams) -> float:
    if sigma2 < 0.0:
        raise ValueError("variance must be non-negative")
    return sigma2 * mu_law_noise_factor(params)


def companded_snr(
    params: CompanderParams, n: int, sigma_a2: float, sigma_d_c2: float
) -> float:
    """Post-expansion subcarrier SNR: 1 / (N (sigma_a2 + sigma_dc2) factor)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if sigma_a2 < 0.0 or sigma_d_c2 < 0.0:
        raise ValueError("variances must be non-negative")
    denom = n * (sigma_a2 + sigma_d_c2) * mu_law_noise_factor(params)
    if denom == 0.0:
        warnings.warn("zero noise and distortion: SNR is unbounded", RuntimeWarning,
                      stacklevel=2)
        return math.inf
    return 1.0 / denom


def compressed_power_gain(params: CompanderParams) -> float:
    """Mean-power gain s^2 = E[F_C(m)^2] of compression on a unit-power envelope.

    Evaluated by quadrature over the Rayleigh envelope density 2 r exp(-r^2),
    so the result is deterministic.  Compression lifts the body of the
    envelope distribution toward the peak, raising average power while the
    peak stays put; this is what lets the amplifier run closer to
    saturation at an unchanged clipping level.
    """
    fc2 = lambda r: compress_magnitude(r, params) ** 2 * 2.0 * r * math.exp(-r * r)
    val, _ = quad(fc2, 0.0, 10.0)
    return val


def companding_ibo_reduction_db(params: CompanderParams) -> float:
    """Effective input back-off reduction bought by compression, in dB.

    At a fixed clipping level the amplifier sees the compressed signal's
    average power, which is s^2 times the uncompressed one, so the
    operating back-off shrinks by 10 log10(s^2).
    """
    return 10.0 * math.log10(compressed_power_gain(params))


@dataclass(frozen=True)
class PaprReduction:
    mu: float
    papr_before_db: float
    papr_after_db: float

    @property
    def reduction_db(self) -> float:
        return self.papr_before_db - self.papr_after_db


def companded_papr_reduction(
    cfg: OfdmConfig,
    params: CompanderParams,
    n_trials: int = 20000,
    seed: int = 0,
    exceedance: float = 1e-3,
) -> PaprReduction:
    """PAPR at the given CCDF exceedance before and after compression."""
    before = papr_samples(cfg, n_trials, seed)
    after = papr_samples(
        cfg, n_trials, seed, transform=lambda w: compress_waveform(w, params)
    )
    return PaprReduction(
        mu=params.mu,
        papr_before_db=papr_quantile_db(before, exceedance),
        papr_after_db=papr_quantile_db(after, exceedance),
    )


def compress_waveform(waveform: np.ndarray, params: CompanderParams) -> np.ndarray:
    """Array-level compression used inside Monte Carlo loops."""
    m = np.abs(waveform)
    cm = compress_magnitude(m, params)
    ratio = np.divide(cm, m, out=np.zeros_like(m), where=m > 0)
    return waveform * ratio


def expand_waveform(waveform: np.ndarray, params: CompanderParams) -> np.ndarray:
    m = np.abs(waveform)
    em = expand_magnitude(m, params)
    ratio = np.divide(em, m, out=np.zeros_like(m), where=m > 0)
    return waveform * ratio


def _ofdm_block(cfg: OfdmConfig, n_symbols: int, seed: int) -> np.ndarray:
    from .ofdm import random_qpsk_grid, synthesize_waveforms

    rng = np.random.default_rng(seed)
    grids = np.stack([random_qpsk_grid(cfg, rng) for _ in range(n_symbols)])
    x = synthesize_waveforms(grids, cfg).ravel()
    return x / np.sqrt(np.mean(np.abs(x) ** 2))


def companded_bussgang(
    cfg: OfdmConfig,
    params: CompanderParams,
    ibo_db: float,
    pa_model: PaModel,
    seed: int = 0,
    n_symbols: int = 64,
) -> BussgangParams:
    """Empirical Bussgang parameters of the compress -> back-off -> PA cascade.

    The reference is the uncompressed unit-power waveform; the back-off gain
    is divided out of the output so k_l reports the cascade's bulk scaling
    relative to a transparent linear chain.  The compressed signal drives
    the amplifier at its natural power (compression raises it above unity),
    which is the whole operating-point story for companding.
    """
    x = _ofdm_block(cfg, n_symbols, seed)
    xc = compress_waveform(x, params)
    g = 10.0 ** (-ibo_db / 20.0)
    u = xc * g
    m = np.abs(u)
    out = pa_model.am_am(m)
    y = u * np.divide(out, m, out=np.ones_like(m), where=m > 0) / g
    k = np.vdot(x, y) / np.vdot(x, x)
    k_l = float(k.real)
    sigma_d2 = float(np.mean(np.abs(y) ** 2) - abs(k) ** 2 * np.mean(np.abs(x) ** 2))
    return BussgangParams(k_l=k_l, sigma_d2=max(sigma_d2, 0.0))


def analytic_companded_bussgang(params: CompanderParams, ibo_db: float) -> BussgangParams:
    """Linear gain and clipping distortion of the companded drive, from the
    soft-limiter closed form.

    The compressed signal runs s^2 hotter than the nominal back-off assumes,
    so the limiter formulas are evaluated at the shifted operating point.
    """
    eff_ibo = ibo_db - companding_ibo_reduction_db(params)
    return bussgang_analytic_sl(OperatingPoint(ibo_db=eff_ibo))


def _analytic_sigma_dc2(params: CompanderParams, ibo_db: float) -> float:
    return analytic_companded_bussgang(params, ibo_db).sigma_d2


@dataclass(frozen=True)
class MuDesign:
    mu_star: float
    ibo_db: float
    snr: float
    peak: float
    sigma_a2: float
    method: str
    unimodal: bool


def optimize_mu(
    cfg: OfdmConfig,
    pa_model: PaModel,
    ibo_grid_db: tuple[float, ...] = (8.0,),
    mu_grid: tuple[float, ...] = tuple(float(m) for m in np.arange(0.25, 4.01, 0.25)),
    sigma_a2: float = 1e-3,
    peak: float | None = None,
    seed: int = 0,
    distortion: str = "analytic",
    tol: float = 1e-3,
) -> MuDesign:
    """Pick mu maximizing the post-expansion SNR over a (mu, IBO) grid.

    Grid search brackets the maximum, golden-section refines it to ``tol``.
    The default "analytic" distortion model evaluates the soft-limiter
    closed form at the companded operating point and is fully
    deterministic; "empirical" re-estimates the cascade distortion by
    Monte Carlo per candidate with common random numbers.
    """
    if not ibo_grid_db or not mu_grid:
        raise ValueError("ibo and mu grids must be non-empty")
    if distortion not in ("analytic", "empirical"):
        raise ValueError(f"unknown distortion model {distortion!r}")
    a = ensemble_peak() if peak is None else peak

    def snr_at(mu: float, ibo_db: float) -> float:
        p = CompanderParams(mu=mu, peak=a)
        if distortion == "analytic":
            sd2 = _analytic_sigma_dc2(p, ibo_db)
        else:
            sd2 = companded_bussgang(cfg, p, ibo_db, pa_model, seed=seed).sigma_d2
        return companded_snr(p, cfg.n_subcarriers, sigma_a2, sd2)

    best_mu, best_ibo, best_snr = mu_grid[0], ibo_grid_db[0], -math.inf
    unimodal = True
    for ibo in ibo_grid_db:
        vals = [snr_at(mu, ibo) for mu in mu_grid]
        rises = np.diff(vals) > 0
        if rises.size > 1 and np.any(np.diff(rises.astype(int)) > 0):
            unimodal = False
            log.warning("SNR(mu) not unimodal on the search grid at IBO=%.2f dB", ibo)
        i = int(np.argmax(vals))
        if vals[i] > best_snr:
            best_mu, best_ibo, best_snr = mu_grid[i], ibo, vals[i]

    if len(mu_grid) > 1:
        i = mu_grid.index(best_mu)
        lo = mu_grid[max(i - 1, 0)]
        hi = mu_grid[min(i + 1, len(mu_grid) - 1)]
        if hi > lo:
            invphi = (math.sqrt(5.0) - 1.0) / 2.0
            c = hi - invphi * (hi - lo)
            d = lo + invphi * (hi - lo)
            fc, fd = snr_at(c, best_ibo), snr_at(d, best_ibo)
            while hi - lo > tol:
                if fc > fd:
                    hi, d, fd = d, c, fc
                    c = hi - invphi * (hi - lo)
                    fc = snr_at(c, best_ibo)
                else:
                    lo, c, fc = c, d, fd
                    d = lo + invphi * (hi - lo)
                    fd = snr_at(d, best_ibo)
            best_mu = 0.5 * (lo + hi)
            best_snr = snr_at(best_mu, best_ibo)

    return MuDesign(
        mu_star=float(best_mu),
        ibo_db=float(best_ibo),
        snr=float(best_snr),
        peak=a,
        sigma_a2=sigma_a2,
        method=distortion,
        unimodal=unimodal,
    )
