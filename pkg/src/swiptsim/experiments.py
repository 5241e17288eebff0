"""Scenario definitions, the Monte Carlo runner, and sweep pipelines.

A Scenario bundles the full transmit/channel/receive configuration for
one technique; run_scenario turns it into link metrics with batch-means
confidence intervals.  sweep() repeats a scenario along one axis and
table_pipeline() produces the four-technique efficiency comparison.

Measurement conventions, used consistently everywhere:

* PA efficiency eta1 is evaluated at the back-off the technique actually
  needs: the nominal IBO minus the technique's IBO reduction.
* Rectifier efficiency eta3 is measured on the waveform entering the EH
  branch, with the ensemble mean power pinned to 0 dBm so the working
  point matches the rectenna calibration anchor.
* BER is measured at equal average transmit power (PA output normalized
  over the run) through a unit-path-loss channel, so the noise variance
  alone sets the operating SNR.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats

from .channel import ChannelRealization, ChannelSpec, apply_channel, sample_channel
from .companding import (
    CompanderParams,
    companding_ibo_reduction_db,
    compress_waveform,
)
from .dpd import DpdDesign, _amplitude_chain, design_from_scratch
from .harvester import EhModel, eta3 as eh_curve_eta3, watts_to_dbm
from .link import (
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
from .ofdm import ComplexSignal, OfdmConfig, map_bits, synthesize_waveforms
from .pa import OperatingPoint, PaModel, bussgang_analytic_sl, efficiency_at_backoff

TECHNIQUES = ("linear", "baseline", "dpd", "companding", "dpd_companding")
N_CI_BATCHES = 20


@dataclass(frozen=True)
class Scenario:
    """One point of the technique x channel experiment grid."""

    name: str = "default"
    ofdm: OfdmConfig = OfdmConfig()
    pa: PaModel = PaModel.sspa(smoothness=1.2)
    op: OperatingPoint = OperatingPoint(ibo_db=8.0)
    technique: str = "baseline"
    channel: ChannelSpec = ChannelSpec()
    split: SplitConfig = SplitConfig()
    eh: EhModel | None = None
    trials: int = 50
    seed: int = 0
    mu: float = 1.25
    p_rf_tx_dbm: float = 30.0
    ibo_reduction_db: float | None = None
    frame_symbols: int = 4

    def __post_init__(self) -> None:
        if self.technique not in TECHNIQUES:
            raise ValueError(f"technique must be one of {TECHNIQUES}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.frame_symbols < 1:
            raise ValueError("frame_symbols must be at least 1")
        if self.eh is None:
            object.__setattr__(self, "eh", EhModel.default())

    @property
    def p_rf_tx(self) -> float:
        """Transmit power normalized so that 30 dBm maps to 1.0."""
        return 10.0 ** ((self.p_rf_tx_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class PointResult:
    axis_value: object
    metrics: LinkMetrics
    ci_half: tuple[tuple[str, float], ...]
    ibo_reduction_db: float

    def ci(self, name: str) -> float:
        return dict(self.ci_half)[name]


@dataclass(frozen=True)
class SweepResult:
    axis: str
    values: tuple
    rows: tuple[PointResult, ...]
    seed: int
    config_hash: str


def config_hash(scenario: Scenario) -> str:
    blob = json.dumps(asdict(scenario), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _uses_dpd(technique: str) -> bool:
    return technique in ("dpd", "dpd_companding")


def _uses_companding(technique: str) -> bool:
    return technique in ("companding", "dpd_companding")


def _saturating(pa: PaModel) -> bool:
    return pa.kind in ("sspa", "soft_limiter")


@lru_cache(maxsize=8)
def _cached_dpd(pa: PaModel, cfg: OfdmConfig, ibo_db: float) -> DpdDesign:
    return design_from_scratch(pa, cfg, baseline_ibo_db=ibo_db)


def technique_reductions(s: Scenario) -> tuple[float, float, DpdDesign | None]:
    """(DPD reduction, companding reduction) in dB for the scenario.

    An explicit ibo_reduction_db override replaces the derived total
    (attributed to the DPD part for chain purposes).  A non-saturating
    amplifier has nothing to back off from, so reductions are zero there;
    a degenerate DPD design likewise contributes zero.
    """
    design = None
    if _uses_dpd(s.technique):
        design = _cached_dpd(s.pa, s.ofdm, s.op.ibo_db)
    if s.ibo_reduction_db is not None:
        return s.ibo_reduction_db, 0.0, design
    r_dpd = 0.0
    r_comp = 0.0
    if not _saturating(s.pa):
        return 0.0, 0.0, design
    if design is not None and not design.degenerate:
        r_dpd = design.ibo_reduction_db
    if _uses_companding(s.technique):
        r_comp = companding_ibo_reduction_db(CompanderParams.default(mu=s.mu))
    return r_dpd, r_comp, design


def _transmit(
    grids: np.ndarray, s: Scenario, r_dpd: float, design: DpdDesign | None
) -> np.ndarray:
    """Per-frame transmit waveforms for the scenario's technique.

    The companded chain drives the amplifier with the compressed signal at
    its natural (hotter) level: the compression power gain is exactly the
    back-off reduction the technique claims.
    """
    x = synthesize_waveforms(grids, s.ofdm)
    if s.technique == "linear":
        return x
    if _uses_companding(s.technique):
        x = compress_waveform(x, CompanderParams.default(mu=s.mu))
    ibo = s.op.ibo_db - r_dpd
    fit = design.inverse_fit if (design is not None and not design.degenerate) else None
    shape = x.shape
    flat = x.ravel()
    m = np.abs(flat)
    g = 10.0 ** (-ibo / 20.0)
    if fit is None:
        out = s.pa.am_am(m * g) / g
    else:
        y = _amplitude_chain(flat, s.pa, ibo, fit)
        return y.reshape(shape)
    ratio = np.divide(out, m, out=np.zeros_like(m), where=m > 0)
    return (flat * ratio).reshape(shape)


def _closed_form(s: Scenario, r_dpd: float, r_comp: float):
    """Analytic (K_L, sigma_d^2) plus rate and harvested metrics."""
    p = s.p_rf_tx
    if s.technique == "linear" or not _saturating(s.pa):
        k_l, sd2 = 1.0, 0.0
    else:
        bp = bussgang_analytic_sl(OperatingPoint(ibo_db=s.op.ibo_db - r_dpd - r_comp))
        k_l, sd2 = bp.k_l, bp.sigma_d2
    if _uses_companding(s.technique) and _saturating(s.pa):
        params = CompanderParams.default(mu=s.mu)
        snr_v = companded_sinr(s.split, params, k_l, sd2, 1.0, p)
        he = companded_harvested(s.split, params, k_l, sd2, 1.0, p, EhModel.linear(), 1.0, p)
    else:
        snr_v = sinr(s.split, k_l, sd2, 1.0, p)
        he = harvested(s.split, k_l, sd2, 1.0, p, EhModel.linear(), 1.0, p)
    return achievable_rate(snr_v), he.h_p_norm


def _batch_ci(samples: np.ndarray) -> float:
    """95% half-width via batch means."""
    n = samples.size
    b = min(N_CI_BATCHES, n)
    if b < 2:
        return float("nan")
    means = np.array([chunk.mean() for chunk in np.array_split(samples, b)])
    return float(stats.t.ppf(0.975, b - 1) * means.std(ddof=1) / np.sqrt(b))


def run_scenario(s: Scenario) -> SweepResult:
    """Monte Carlo evaluation of one scenario.

    Deterministic for a fixed seed.  The rectifier works on the EH branch
    with its ensemble mean pinned to 0 dBm; the demodulator works on the
    information branch at equal average transmit power through the faded
    channel with unit path loss.
    """
    r_dpd, r_comp, design = technique_reductions(s)
    ibo_eff = s.op.ibo_db - r_dpd - r_comp
    eta1 = efficiency_at_backoff(ibo_eff) if _saturating(s.pa) else 0.5
    rate, h_p_norm = _closed_form(s, r_dpd, r_comp)

    rng = np.random.default_rng(s.seed)
    cfg = s.ofdm
    n_bits_frame = 2 * cfg.n_subcarriers * s.frame_symbols
    params = CompanderParams.default(mu=s.mu) if _uses_companding(s.technique) else None

    needs_ref = s.technique not in ("linear", "baseline")
    base_s = replace(s, technique="baseline") if needs_ref else s
    frames = []
    ref_power = 0.0
    for _ in range(s.trials):
        bits = rng.integers(0, 2, size=n_bits_frame)
        grids = map_bits(bits).reshape(s.frame_symbols, cfg.n_subcarriers)
        tx = _transmit(grids, s, r_dpd, design)
        ref = _transmit(grids, base_s, 0.0, None) if needs_ref else tx
        ref_power += float(np.mean(np.abs(ref) ** 2))
        real = sample_channel(s.channel, rng)
        real = ChannelRealization(taps=real.taps, path_loss_db=0.0)
        clean = apply_channel(
            ComplexSignal(tx.ravel(), cfg.sample_rate_hz), real, 0.0, rng,
            cp_length=cfg.cp_length,
        )
        frames.append((bits, grids, clean, real))
    ref_power /= s.trials

    rx_power = float(np.mean([f[2].mean_power for f in frames]))
    # two measurement scales, both deterministic given the seed: the
    # demodulator lives in a world normalized by the nominal (baseline)
    # amplifier output power, so a technique that reclaims back-off
    # radiates its extra power rather than having it scaled away; the
    # rectifier sees its branch pinned to 1 mW ensemble mean, where the
    # thermal noise floor is irrelevant and therefore omitted
    norm = np.sqrt(1.0 / ref_power)
    rho = s.split.rho
    eh_pin = np.sqrt(1e-3 / (rx_power * max(rho, 1e-12)))

    eta3_num = np.zeros(s.trials)
    eta3_den = np.full(s.trials, np.nan)
    ber = np.empty(s.trials)
    for i, (bits, grids, clean, real) in enumerate(frames):
        if rho > 0.0:
            p_w = np.abs(clean.samples * (np.sqrt(rho) * eh_pin)) ** 2
            eff = eh_curve_eta3(s.eh, watts_to_dbm(p_w))
            eta3_num[i] = float(np.sum(eff * p_w))
            eta3_den[i] = float(np.sum(p_w))
        normalized = clean.with_samples(clean.samples * norm)
        _, info_branch = power_split(normalized, s.split, rng)
        scale = None
        if params is not None:
            # known amplitude bookkeeping from the compressed transmit
            # waveform to the (noiseless) information-branch signal, so
            # the expander operates in its design domain
            ref = compress_waveform(synthesize_waveforms(grids, cfg), params)
            rms_ref = np.sqrt(np.mean(np.abs(ref) ** 2))
            rms_rx = np.sqrt((1.0 - rho) * normalized.mean_power)
            scale = rms_rx / rms_ref if min(rms_ref, rms_rx) > 0 else 1.0
        ber[i] = demodulate_and_ber(info_branch, real, cfg, bits, params, scale)

    if rho > 0.0:
        eta3_mc = float(eta3_num.sum() / eta3_den.sum())
        eta3_frames = eta3_num / eta3_den
    else:
        eta3_mc = 0.0
        eta3_frames = eta3_num
    metrics = LinkMetrics(
        rate_bps_hz=rate,
        harvested_norm=h_p_norm,
        ber=float(ber.mean()),
        eta1=eta1,
        eta3=eta3_mc,
        eta_e2e=eta1 * eta3_mc,
    )
    ci = (
        ("eta3", _batch_ci(eta3_frames)),
        ("ber", _batch_ci(ber)),
    )
    row = PointResult(
        axis_value=s.name, metrics=metrics, ci_half=ci,
        ibo_reduction_db=r_dpd + r_comp,
    )
    return SweepResult(
        axis="scenario", values=(s.name,), rows=(row,),
        seed=s.seed, config_hash=config_hash(s),
    )


def table_pipeline(
    base: Scenario | None = None, seed: int = 0, trials: int = 50
) -> tuple[SweepResult, ...]:
    """Four-technique comparison under AWGN (the efficiency table).

    Returns one single-row SweepResult per technique, in the canonical
    order baseline, DPD, companding, DPD+companding.
    """
    base = base if base is not None else Scenario()
    order = ("baseline", "dpd", "companding", "dpd_companding")
    out = []
    for tech in order:
        s = replace(base, name=tech, technique=tech, trials=trials, seed=seed)
        out.append(run_scenario(s))
    return tuple(out)


_AXES = ("rho", "mu", "ibo_reduction", "p_rf_tx", "snr")


def _noise_for_ebn0(ebn0_db: float, cfg: OfdmConfig) -> float:
    """Antenna-noise variance giving the target Eb/N0 for a unit-power
    QPSK transmit waveform (oversampling discards out-of-band noise)."""
    return cfg.oversampling_factor / (2.0 * 10.0 ** (ebn0_db / 10.0))


def _point_scenario(axis: str, value: float, base: Scenario) -> Scenario:
    if axis == "rho":
        return replace(base, split=replace(base.split, rho=float(value)))
    if axis == "mu":
        return replace(base, mu=float(value))
    if axis == "ibo_reduction":
        return replace(base, ibo_reduction_db=float(value))
    if axis == "p_rf_tx":
        return replace(base, p_rf_tx_dbm=float(value))
    if axis == "snr":
        return replace(
            base, split=replace(base.split, sigma_a2=_noise_for_ebn0(value, base.ofdm))
        )
    raise ValueError(f"axis must be one of {_AXES}")


def sweep(axis: str, values, base: Scenario, threads: int = 1) -> SweepResult:
    """Run the base scenario along one axis; deterministic in (base, seed).

    Points get independent child seeds and may run in a thread pool;
    results are merged in axis order regardless of completion order.
    """
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {_AXES}")
    values = tuple(values)
    if not values:
        raise ValueError("sweep needs at least one axis value")
    children = np.random.SeedSequence(base.seed).spawn(len(values))
    points = [
        replace(
            _point_scenario(axis, v, base),
            seed=int(children[i].generate_state(1)[0]),
            name=f"{base.name}[{axis}={v:g}]",
        )
        for i, v in enumerate(values)
    ]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_scenario, points))
    else:
        results = [run_scenario(p) for p in points]
    rows = tuple(
        replace(res.rows[0], axis_value=v) for v, res in zip(values, results)
    )
    return SweepResult(
        axis=axis, values=values, rows=rows,
        seed=base.seed, config_hash=config_hash(base),
    )


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def write_csv(
    path, columns, rows, cfg_hash: str, seed: int, comments=()
) -> None:
    """CSV with a provenance header; byte-identical for identical inputs."""
    lines = [f"# config_hash={cfg_hash} seed={seed}"]
    lines += [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def sweep_to_csv(result: SweepResult, path, comments=()) -> None:
    cols = (
        result.axis, "rate_bps_hz", "h_p_norm", "ber", "eta1", "eta3",
        "eta_e2e", "ibo_reduction_db", "eta3_ci", "ber_ci",
    )
    rows = [
        (
            r.axis_value, r.metrics.rate_bps_hz, r.metrics.harvested_norm,
            r.metrics.ber, r.metrics.eta1, r.metrics.eta3, r.metrics.eta_e2e,
            r.ibo_reduction_db, r.ci("eta3"), r.ci("ber"),
        )
        for r in result.rows
    ]
    write_csv(path, cols, rows, result.config_hash, result.seed, comments)


def append_manifest(path, result: SweepResult, scenario: Scenario) -> None:
    """One JSON line per run: enough provenance to reproduce the file."""
    import numpy

    from . import __version__

    entry = {
        "config_hash": result.config_hash,
        "seed": result.seed,
        "axis": result.axis,
        "n_points": len(result.values),
        "trials": scenario.trials,
        "technique": scenario.technique,
        "channel": scenario.channel.kind,
        "versions": {"swiptsim": __version__, "numpy": numpy.__version__},
    }
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")
