import dataclasses

import numpy as np
import pytest

from swiptsim.channel import ChannelRealization, ChannelSpec, apply_channel, sample_channel
from swiptsim.companding import CompanderParams
from swiptsim.harvester import EhModel
from swiptsim.link import (
    LinkMetrics,
    SplitConfig,
    achievable_rate,
    companded_harvested,
    companded_sinr,
    demodulate_and_ber,
    harvested,
    power_split,
    sinr,
)
from swiptsim.ofdm import ComplexSignal, OfdmConfig, map_bits, synthesize_waveforms


def test_split_config_validation():
    with pytest.raises(ValueError):
        SplitConfig(rho=1.5)
    with pytest.raises(ValueError):
        SplitConfig(rho=-0.1)
    with pytest.raises(ValueError):
        SplitConfig(sigma_a2=-1e-3)
    cfg = SplitConfig(rho=0.25)
    assert cfg.gamma_eh(2.0) == 0.5
    assert cfg.gamma_info(2.0) == 1.5
    assert SplitConfig().rho == pytest.approx(1.0 - 1e-6)


def test_link_metrics_validation():
    with pytest.raises(ValueError):
        LinkMetrics(rate_bps_hz=-1.0, harvested_norm=0.0, ber=0.0,
                    eta1=0.5, eta3=0.5, eta_e2e=0.25)
    with pytest.raises(ValueError):
        LinkMetrics(rate_bps_hz=1.0, harvested_norm=0.0, ber=1.5,
                    eta1=0.5, eta3=0.5, eta_e2e=0.25)
    with pytest.raises(ValueError):
        LinkMetrics(rate_bps_hz=1.0, harvested_norm=0.0, ber=0.0,
                    eta1=-0.1, eta3=0.5, eta_e2e=0.25)


def test_power_split_bookkeeping():
    # unit-power signal, shared antenna noise, per-branch processing noise
    rng = np.random.default_rng(3)
    n = 200_000
    x = np.exp(2j * np.pi * rng.random(n))
    split = SplitConfig(rho=0.6, sigma_a2=0.02, sigma_p2=0.01)
    eh, info = power_split(ComplexSignal(x, 1.0), split, rng)
    assert eh.mean_power == pytest.approx(0.6 * 1.02 + 0.01, rel=0.01)
    assert info.mean_power == pytest.approx(0.4 * 1.02 + 0.01, rel=0.01)
    # the antenna-noise realization is common to both branches
    res_eh = eh.samples - np.sqrt(0.6) * x
    res_info = info.samples - np.sqrt(0.4) * x
    cov = np.mean(res_eh * np.conj(res_info)).real
    assert cov == pytest.approx(np.sqrt(0.6 * 0.4) * 0.02, rel=0.05)


def test_power_split_extreme_ratios():
    rng = np.random.default_rng(5)
    x = np.ones(50_000, dtype=complex)
    split = SplitConfig(rho=0.0, sigma_a2=0.0, sigma_p2=0.04)
    eh, info = power_split(ComplexSignal(x, 1.0), split, rng)
    assert eh.mean_power == pytest.approx(0.04, rel=0.02)  # noise only
    assert info.mean_power == pytest.approx(1.04, rel=0.02)


def test_sinr_goldens():
    split = SplitConfig(rho=0.5, sigma_a2=1e-3, sigma_p2=0.0)
    s = sinr(split, k_l=1.0, sigma_d2=0.0)
    assert s == pytest.approx(1000.0, rel=1e-12)
    assert achievable_rate(s) == pytest.approx(9.967226258835993, abs=1e-12)

    split2 = SplitConfig(rho=0.5, sigma_a2=1e-3, sigma_p2=1e-3)
    s2 = sinr(split2, k_l=1.0, sigma_d2=0.0)
    assert s2 == pytest.approx(1000.0 / 3.0, rel=1e-12)
    assert achievable_rate(s2) == pytest.approx(8.385143389891024, abs=1e-12)


def test_sinr_degenerate_cases():
    clean = SplitConfig(rho=0.5, sigma_a2=0.0, sigma_p2=0.0)
    with pytest.warns(RuntimeWarning, match="diverges"):
        assert sinr(clean, k_l=1.0, sigma_d2=0.0) == np.inf
    with pytest.warns(RuntimeWarning):
        assert sinr(clean, k_l=0.0, sigma_d2=0.0) == 0.0
    # distortion alone keeps the ratio finite
    assert np.isfinite(sinr(clean, k_l=1.0, sigma_d2=0.01))


def test_companded_sinr_golden_and_noise_inflation():
    split = SplitConfig(rho=0.5, sigma_a2=1e-3, sigma_p2=1e-3)
    params = CompanderParams.default()
    s = companded_sinr(split, params, k_l_c=1.0, sigma_d_c2=0.0)
    assert s == pytest.approx(397.44561957530163, rel=1e-12)
    # expansion scales antenna noise and distortion but not the
    # post-expander processing noise
    from swiptsim.companding import mu_law_noise_factor

    f = mu_law_noise_factor(params)
    manual = 0.5 / (0.5 * 1e-3 * f + 1e-3)
    assert s == pytest.approx(manual, rel=1e-12)


def test_achievable_rate_basics():
    assert achievable_rate(0.0) == 0.0
    assert achievable_rate(1.0) == 1.0
    assert achievable_rate(3.0) == 2.0
    with pytest.raises(ValueError):
        achievable_rate(-0.5)


def test_harvested_additivity():
    split = SplitConfig(rho=0.7, sigma_a2=2e-3, sigma_p2=5e-4)
    kwargs = dict(h_gain2=1.3, p_rf_tx=2.0, eh=EhModel.linear(0.5))
    full = harvested(split, k_l=0.8, sigma_d2=0.05, **kwargs)
    quiet = dataclasses.replace(split, sigma_a2=0.0, sigma_p2=0.0)
    sig_only = harvested(quiet, k_l=0.8, sigma_d2=0.0, **kwargs)
    dist_only = harvested(quiet, k_l=0.0, sigma_d2=0.05, **kwargs)
    noise_only = harvested(split, k_l=0.0, sigma_d2=0.0, **kwargs)
    total = sig_only.h_p + dist_only.h_p + noise_only.h_p
    assert full.h_p == pytest.approx(total, rel=1e-12)


def test_harvested_goldens_and_limits():
    split = SplitConfig(rho=0.5, sigma_a2=1e-3, sigma_p2=1e-3)
    plain = harvested(split, k_l=1.0, sigma_d2=0.0)
    assert plain.h_p_norm == pytest.approx(0.25075, rel=1e-12)
    comp = companded_harvested(split, CompanderParams.default(), k_l_c=1.0, sigma_d_c2=0.0)
    assert comp.h_p_norm == pytest.approx(0.25062901687095496, rel=1e-12)

    ideal = harvested(SplitConfig(rho=1.0, sigma_a2=0.0, sigma_p2=0.0),
                      k_l=1.0, sigma_d2=0.0)
    assert ideal.h_p_norm == pytest.approx(0.5, rel=1e-12)
    assert ideal.h_e == ideal.h_p  # t defaults to one second


def test_harvested_never_exceeds_input():
    split = SplitConfig(rho=0.9, sigma_a2=1e-3, sigma_p2=1e-3)
    for eh in (EhModel.linear(0.5), EhModel.default()):
        he = harvested(split, k_l=1.0, sigma_d2=0.02, p_rf_tx=1e-3, eh=eh)
        p_in = 0.9 * 1e-3 * 1.02 + 0.9 * 1e-3 + 1e-3
        assert he.h_p <= p_in


def test_rate_energy_tradeoff_monotone_in_rho():
    rhos = np.linspace(0.0, 1.0, 21)
    split0 = SplitConfig(rho=0.5, sigma_a2=1e-3, sigma_p2=1e-3)
    rates, energies = [], []
    for rho in rhos:
        split = dataclasses.replace(split0, rho=float(rho))
        rates.append(achievable_rate(sinr(split, 1.0, 0.0)))
        energies.append(harvested(split, 1.0, 0.0).h_p_norm)
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    assert all(a <= b for a, b in zip(energies, energies[1:]))
    assert rates[-1] == 0.0  # everything to the harvester


def _build_frame(cfg, rng, n_symbols):
    bits = rng.integers(0, 2, size=2 * cfg.n_subcarriers * n_symbols)
    grid = map_bits(bits).reshape(n_symbols, cfg.n_subcarriers)
    x = synthesize_waveforms(grid, cfg).ravel()
    return bits, ComplexSignal(x, cfg.sample_rate_hz)


def test_noiseless_ber_is_zero_through_fading():
    cfg = OfdmConfig(n_subcarriers=64, oversampling_factor=2, cp_length=8)
    rng = np.random.default_rng(11)
    bits, sig = _build_frame(cfg, rng, 4)
    real = sample_channel(ChannelSpec(kind="rayleigh_multitap"), rng)
    real = ChannelRealization(taps=real.taps, path_loss_db=0.0)
    rx = apply_channel(sig, real, 0.0, rng, cp_length=cfg.cp_length)
    assert demodulate_and_ber(rx, real, cfg, bits) == 0.0


def test_tiny_mu_expander_matches_plain_receiver():
    # with mu -> 0 the expander is the identity, so a noisy branch must
    # produce the same (non-zero) error rate either way
    cfg = OfdmConfig(n_subcarriers=64, oversampling_factor=2)
    rng = np.random.default_rng(13)
    bits, sig = _build_frame(cfg, rng, 4)
    real = ChannelRealization(taps=(1.0 + 0j,), path_loss_db=0.0)
    rx = apply_channel(sig, real, 0.5, rng)
    plain = demodulate_and_ber(rx, real, cfg, bits)
    tiny = CompanderParams.default(mu=1e-9)
    expanded = demodulate_and_ber(rx, real, cfg, bits, expander=tiny,
                                  expander_scale=1.0)
    assert plain > 0.0
    assert expanded == plain


def test_demodulate_rejections():
    cfg = OfdmConfig(n_subcarriers=64, oversampling_factor=2)
    rng = np.random.default_rng(17)
    bits, sig = _build_frame(cfg, rng, 2)
    real = ChannelRealization(taps=(1.0 + 0j,), path_loss_db=0.0)

    with pytest.raises(ValueError, match="nulls"):
        demodulate_and_ber(sig, ChannelRealization(taps=(0.0 + 0j,),
                                                   path_loss_db=0.0), cfg, bits)
    short = ComplexSignal(sig.samples[:-1], cfg.sample_rate_hz)
    with pytest.raises(ValueError, match="whole number"):
        demodulate_and_ber(short, real, cfg, bits)
    with pytest.raises(ValueError, match="truth bit count"):
        demodulate_and_ber(sig, real, cfg, bits[:-2])
    with pytest.raises(ValueError, match="positive"):
        demodulate_and_ber(sig, real, cfg, bits, expander=CompanderParams.default(),
                           expander_scale=0.0)
