"""Power-splitting receiver and the rate / harvested-energy metrics.

The receiver taps the incoming waveform into an energy-harvesting branch
(fraction rho of the power) and an information branch (fraction 1 - rho).
Antenna noise is picked up before the splitter and therefore appears,
scaled, in both branches; processing noise is injected per branch.

The closed-form metrics model every transmit nonlinearity through its
linear (Bussgang) gain K_L and additive distortion power sigma_d^2.
Companded variants swap in the expanded-noise and expanded-distortion
powers of the mu-law receiver.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, subcarrier_gains
from .companding import CompanderParams, expand_waveform, mu_law_noise_factor
from .harvester import EhModel, eta3, watts_to_dbm
from .ofdm import ComplexSignal, OfdmConfig, demap_symbols, ofdm_demodulate


@dataclass(frozen=True)
class SplitConfig:
    """Power-splitting ratio and receiver noise variances.

    rho is the share of received power routed to the energy harvester;
    the information branch gets the remaining 1 - rho.  The default keeps
    one part per million for the information receiver, which is enough
    given the roughly 60 dB sensitivity gap between the two circuits.
    """

    rho: float = 1.0 - 1e-6
    sigma_a2: float = 1e-3
    sigma_p2: float = 1e-3

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.sigma_a2 < 0.0 or self.sigma_p2 < 0.0:
            raise ValueError("noise variances must be non-negative")

    def gamma_eh(self, p_rf_tx: float) -> float:
        return self.rho * p_rf_tx

    def gamma_info(self, p_rf_tx: float) -> float:
        return (1.0 - self.rho) * p_rf_tx


@dataclass(frozen=True)
class LinkMetrics:
    rate_bps_hz: float
    harvested_norm: float
    ber: float
    eta1: float
    eta3: float
    eta_e2e: float

    def __post_init__(self) -> None:
        if self.rate_bps_hz < 0.0:
            raise ValueError("rate must be non-negative")
        for name in ("ber", "eta1", "eta3", "eta_e2e"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


def _cn(rng: np.random.Generator, size: int, variance: float) -> np.ndarray:
    if variance == 0.0:
        return np.zeros(size, dtype=np.complex128)
    s = np.sqrt(variance / 2.0)
    return s * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def power_split(
    signal: ComplexSignal, split: SplitConfig, rng: np.random.Generator
) -> tuple[ComplexSignal, ComplexSignal]:
    """Split a received waveform into (EH branch, information branch).

    One antenna-noise realization rides the signal into the splitter, so
    both branches see it scaled by their amplitude share; each branch then
    adds its own processing noise.
    """
    y = signal.samples
    w_a = _cn(rng, y.size, split.sigma_a2)
    noisy = y + w_a
    eh = np.sqrt(split.rho) * noisy + _cn(rng, y.size, split.sigma_p2)
    info = np.sqrt(1.0 - split.rho) * noisy + _cn(rng, y.size, split.sigma_p2)
    return signal.with_samples(eh), signal.with_samples(info)


def sinr(
    split: SplitConfig,
    k_l: float,
    sigma_d2: float,
    h_gain2: float = 1.0,
    p_rf_tx: float = 1.0,
) -> float:
    """Post-split SINR of the information branch, distortion counted as noise."""
    gamma_i = split.gamma_info(p_rf_tx)
    num = h_gain2 * gamma_i * k_l**2
    den = h_gain2 * gamma_i * sigma_d2 + (1.0 - split.rho) * split.sigma_a2 + split.sigma_p2
    if den == 0.0:
        warnings.warn("noise-free and distortion-free link, SINR diverges",
                      RuntimeWarning, stacklevel=2)
        return np.inf if num > 0 else 0.0
    return num / den


def companded_sinr(
    split: SplitConfig,
    params: CompanderParams,
    k_l_c: float,
    sigma_d_c2: float,
    h_gain2: float = 1.0,
    p_rf_tx: float = 1.0,
) -> float:
    """SINR after mu-law expansion at the receiver.

    Expansion multiplies both the antenna noise and the residual clipping
    distortion by the small-signal factor of the expander, so the plain
    expression is reused with inflated variances.
    """
    factor = mu_law_noise_factor(params)
    inflated = SplitConfig(
        rho=split.rho,
        sigma_a2=split.sigma_a2 * factor,
        sigma_p2=split.sigma_p2,
    )
    return sinr(inflated, k_l_c, sigma_d_c2 * factor, h_gain2, p_rf_tx)


def achievable_rate(sinr_value: float) -> float:
    """Shannon rate in bits/s/Hz for the given SINR."""
    if sinr_value < 0.0:
        raise ValueError("SINR must be non-negative")
    return float(np.log2(1.0 + sinr_value))


@dataclass(frozen=True)
class HarvestedEnergy:
    h_e: float
    h_p: float
    h_p_norm: float


def _eh_input_power(
    split: SplitConfig,
    k_l: float,
    sigma_d2: float,
    h_gain2: float,
    p_rf_tx: float,
    sigma_a2: float,
) -> float:
    gamma_e = split.gamma_eh(p_rf_tx)
    return (
        h_gain2 * gamma_e * (k_l**2 + sigma_d2)
        + split.rho * sigma_a2
        + split.sigma_p2
    )


def _convert(eh: EhModel, p_in: float, t: float, p_max: float) -> HarvestedEnergy:
    eff = float(eta3(eh, watts_to_dbm(p_in)))
    h_e = eff * p_in * t
    return HarvestedEnergy(h_e=h_e, h_p=h_e / t, h_p_norm=h_e / t / p_max)


def harvested(
    split: SplitConfig,
    k_l: float,
    sigma_d2: float,
    h_gain2: float = 1.0,
    p_rf_tx: float = 1.0,
    eh: EhModel | None = None,
    t: float = 1.0,
    p_max: float | None = None,
) -> HarvestedEnergy:
    """Energy collected by the EH branch over one symbol of duration t.

    Signal, distortion, and noise all carry power into the rectifier, so
    every term contributes.  h_p_norm divides by the maximum transmit
    power (default: p_rf_tx itself) to give the dimensionless H_P/E.

    In curve mode the conversion efficiency is read at the total branch
    power, taken in watts; closed-form sweeps normally use linear mode.
    """
    eh = eh if eh is not None else EhModel.linear()
    p_in = _eh_input_power(split, k_l, sigma_d2, h_gain2, p_rf_tx, split.sigma_a2)
    return _convert(eh, p_in, t, p_max if p_max is not None else p_rf_tx)


def companded_harvested(
    split: SplitConfig,
    params: CompanderParams,
    k_l_c: float,
    sigma_d_c2: float,
    h_gain2: float = 1.0,
    p_rf_tx: float = 1.0,
    eh: EhModel | None = None,
    t: float = 1.0,
    p_max: float | None = None,
) -> HarvestedEnergy:
    """Harvested energy with the companded transmit chain (expanded-noise
    and expanded-distortion powers in place of the plain ones)."""
    eh = eh if eh is not None else EhModel.linear()
    factor = mu_law_noise_factor(params)
    p_in = _eh_input_power(
        split, k_l_c, sigma_d_c2 * factor, h_gain2, p_rf_tx, split.sigma_a2 * factor
    )
    return _convert(eh, p_in, t, p_max if p_max is not None else p_rf_tx)


def demodulate_and_ber(
    info_branch: ComplexSignal,
    realization: ChannelRealization,
    cfg: OfdmConfig,
    truth_bits: np.ndarray,
    expander: CompanderParams | None = None,
    expander_scale: float | None = None,
) -> float:
    """Demodulate the information branch and count bit errors.

    Optional mu-law expansion runs first; ``expander_scale`` is the known
    amplitude gain between the transmitted compressed waveform and this
    branch, so the expander operates in the domain it was designed for.
    Then per symbol: CP removal, DFT, single-tap zero-forcing with the
    true subcarrier gains, and a hard QPSK decision.
    """
    y = info_branch.samples
    if expander is not None:
        scale = 1.0 if expander_scale is None else expander_scale
        if scale <= 0.0:
            raise ValueError("expander_scale must be positive")
        yn = y / scale
        # noise can push samples far past the compressor's output range,
        # where the expander grows exponentially; saturate well above the
        # legitimate domain so such samples stay finite
        m = np.abs(yn)
        cap = 64.0 * expander.peak
        if np.any(m > cap):
            yn = yn * np.minimum(m, cap) / np.where(m > 0, m, 1.0)
        y = expand_waveform(yn, expander) * scale
    sym_len = cfg.n_samples + cfg.cp_length
    if y.size % sym_len:
        raise ValueError(
            f"branch length {y.size} is not a whole number of "
            f"{sym_len}-sample symbols"
        )
    grid_hat = ofdm_demodulate(y.reshape(-1, sym_len), cfg)
    h_k = subcarrier_gains(realization, cfg)
    if np.any(np.abs(h_k) == 0.0):
        raise ValueError("channel nulls a subcarrier, zero-forcing undefined")
    bits_hat = demap_symbols((grid_hat / h_k).ravel())
    truth = np.asarray(truth_bits).ravel()
    if truth.size != bits_hat.size:
        raise ValueError("truth bit count does not match the demodulated grid")
    return float(np.mean(bits_hat != truth))
