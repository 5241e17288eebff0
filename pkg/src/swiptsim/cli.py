"""Batch command-line front end.

Subcommands
-----------
papr         PAPR CCDF curves for a grid of compression strengths.
dpd-design   Predistorter design: fit file plus an EVM/efficiency table.
mu-sweep     Post-expansion SNR, PAPR reduction, and cascade gain vs mu.
e2e          Four-technique efficiency table plus per-channel metrics.
ber          BER vs Eb/N0 per technique and channel.
rate-energy  Closed-form rate and harvested power vs splitting ratio.

Configuration is a JSON object; every key is optional and unknown keys
are rejected with their location.  Schema (defaults in parentheses):

  ofdm:        n_subcarriers (512), subcarrier_spacing_hz (15e3),
               oversampling_factor (4), cp_length (0)
  pa:          kind ("sspa" | "soft_limiter" | "polynomial"), a_sat (1.0),
               smoothness (1.2), coeffs (null), ibo_db (8.0)
  split:       rho (1 - 1e-6), sigma_a2 (1e-3), sigma_p2 (1e-3)
  channel:     kind ("awgn"), rice_k_db (20), pdp_db ([0,-10,-20]),
               carrier_hz (915e6), distance_m (1.0)
  scenario:    technique ("baseline"), mu (1.25), p_rf_tx_dbm (30),
               trials (50), frame_symbols (4), ibo_reduction_db (null)
  eh:          kind ("curve" | "linear"), eta3_linear (0.5),
               calibration (path to CSV, default: packaged rectenna)
  papr:        mu_grid ([0, 1.25, 255]), n_trials (20000),
               thresholds_db ([-1, 14, 0.05] as min/max/step)
  dpd:         pa_order (4), inverse_order (7),
               reduction_grid_db ([0, 4, 0.25] as min/max/step)
  mu_sweep:    mu_grid ([0.25 .. 4.0 step 0.25]), papr_trials (4000)
  ber:         ebn0_db ([0, 4, 8]), techniques (["baseline","companding"]),
               channels (all four)
  rate_energy: rho_grid (0..0.9 plus 1-10^-k tail), techniques
               (["baseline","companding"])
  seed:        integer (0); --seed wins over the file
  svg:         false — also emit minimal SVG line charts

Exit codes: 0 success, 2 configuration error, 3 runtime or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import CHANNEL_KINDS, ChannelSpec
from .companding import (
    CompanderParams,
    analytic_companded_bussgang,
    companded_papr_reduction,
    companded_snr,
    compress_waveform,
    optimize_mu,
)
from .dpd import chain_constellation_evm, design_from_scratch, save_design
from .experiments import (
    Scenario,
    run_scenario,
    sweep,
    table_pipeline,
    write_csv,
)
from .harvester import EhModel, load_calibration
from .link import (
    SplitConfig,
    achievable_rate,
    companded_harvested,
    companded_sinr,
    harvested,
    sinr,
)
from .ofdm import OfdmConfig, ccdf_from_samples, papr_samples
from .pa import OperatingPoint, PaModel, bussgang_analytic_sl, efficiency_at_backoff

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    """Configuration problem; reported with its location, exits with 2."""


_SCHEMA: dict[str, set[str] | type] = {
    "ofdm": {"n_subcarriers", "subcarrier_spacing_hz", "oversampling_factor", "cp_length"},
    "pa": {"kind", "a_sat", "smoothness", "coeffs", "ibo_db"},
    "split": {"rho", "sigma_a2", "sigma_p2"},
    "channel": {"kind", "rice_k_db", "pdp_db", "carrier_hz", "distance_m"},
    "scenario": {"technique", "mu", "p_rf_tx_dbm", "trials", "frame_symbols", "ibo_reduction_db"},
    "eh": {"kind", "eta3_linear", "calibration"},
    "papr": {"mu_grid", "n_trials", "thresholds_db"},
    "dpd": {"pa_order", "inverse_order", "reduction_grid_db"},
    "mu_sweep": {"mu_grid", "papr_trials"},
    "ber": {"ebn0_db", "techniques", "channels"},
    "rate_energy": {"rho_grid", "techniques"},
    "seed": int,
    "svg": bool,
}


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    if not text.strip():
        raise ConfigError(f"{path}: config file is empty")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    validate_config(cfg, where=path)
    return cfg


def validate_config(cfg: object, where: str = "config") -> None:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{where}: top level must be a JSON object")
    for key, val in cfg.items():
        if key not in _SCHEMA:
            raise ConfigError(f"{where}: unknown key '{key}'")
        allowed = _SCHEMA[key]
        if isinstance(allowed, set):
            if not isinstance(val, dict):
                raise ConfigError(f"{where}: '{key}' must be an object")
            for sub in val:
                if sub not in allowed:
                    raise ConfigError(f"{where}: unknown key '{key}.{sub}'")
        elif allowed is bool and not isinstance(val, bool):
            raise ConfigError(f"{where}: '{key}' must be a boolean")
        elif allowed is int and not isinstance(val, int):
            raise ConfigError(f"{where}: '{key}' must be an integer")


def _build(factory, section: str, kwargs: dict):
    try:
        return factory(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config section '{section}': {exc}") from exc


def build_ofdm(cfg: dict) -> OfdmConfig:
    return _build(OfdmConfig, "ofdm", cfg.get("ofdm", {}))


def build_pa(cfg: dict) -> tuple[PaModel, OperatingPoint]:
    section = dict(cfg.get("pa", {}))
    ibo = section.pop("ibo_db", 8.0)
    section.setdefault("kind", "sspa")
    if section.get("coeffs") is not None:
        section["coeffs"] = tuple(section["coeffs"])
    else:
        section.pop("coeffs", None)
    pa = _build(PaModel, "pa", section)
    op = _build(OperatingPoint, "pa.ibo_db", {"ibo_db": ibo})
    return pa, op


def build_split(cfg: dict) -> SplitConfig:
    return _build(SplitConfig, "split", cfg.get("split", {}))


def build_channel(cfg: dict) -> ChannelSpec:
    section = dict(cfg.get("channel", {}))
    if "pdp_db" in section:
        section["pdp_db"] = tuple(section["pdp_db"])
    return _build(ChannelSpec, "channel", section)


def build_eh(cfg: dict) -> EhModel:
    section = dict(cfg.get("eh", {}))
    kind = section.get("kind", "curve")
    if kind == "linear":
        return _build(EhModel.linear, "eh", {"eta3": section.get("eta3_linear", 0.5)})
    if kind != "curve":
        raise ConfigError(f"config section 'eh': unknown kind '{kind}'")
    path = section.get("calibration")
    if path is None:
        return EhModel.default()
    try:
        return EhModel(kind="curve", curve=load_calibration(path))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"config section 'eh.calibration': {exc}") from exc


def build_scenario(cfg: dict, seed: int, trials: int | None) -> Scenario:
    section = dict(cfg.get("scenario", {}))
    if trials is not None:
        section["trials"] = trials
    pa, op = build_pa(cfg)
    return _build(
        Scenario,
        "scenario",
        dict(
            ofdm=build_ofdm(cfg),
            pa=pa,
            op=op,
            channel=build_channel(cfg),
            split=build_split(cfg),
            eh=build_eh(cfg),
            seed=seed,
            **section,
        ),
    )


def _grid(spec, default: tuple[float, float, float]) -> np.ndarray:
    """Interpret [min, max, step] triple; other list lengths are literal grids."""
    if spec is None:
        spec = list(default)
    if len(spec) == 3 and spec[2] < spec[1]:
        lo, hi, step = (float(v) for v in spec)
        return np.arange(lo, hi + step / 2, step)
    return np.asarray([float(v) for v in spec])


def _svg_chart(path: Path, series: dict[str, list[tuple[float, float]]],
               x_label: str, y_label: str, log_y: bool = False) -> None:
    """Minimal multi-series SVG line chart, no third-party plotting."""
    w, h, pad = 640, 420, 50
    pts = [p for s in series.values() for p in s if np.isfinite(p[1])]
    if log_y:
        pts = [(x, y) for x, y in pts if y > 0]
    if not pts:
        return
    xs = [p[0] for p in pts]
    ys = [np.log10(p[1]) if log_y else p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    sx = lambda x: pad + (x - x0) / (x1 - x0) * (w - 2 * pad)
    sy = lambda y: h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad)
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<line x1="{pad}" y1="{h-pad}" x2="{w-pad}" y2="{h-pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h-pad}" stroke="black"/>',
        f'<text x="{w//2}" y="{h-10}" text-anchor="middle" font-size="13">{x_label}</text>',
        f'<text x="14" y="{h//2}" font-size="13" transform="rotate(-90 14 {h//2})" '
        f'text-anchor="middle">{y_label}{" (log10)" if log_y else ""}</text>',
    ]
    for i, (name, data) in enumerate(series.items()):
        data = [(x, np.log10(y) if log_y else y) for x, y in data
                if np.isfinite(y) and (not log_y or y > 0)]
        if not data:
            continue
        path_d = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in data)
        color = colors[i % len(colors)]
        parts.append(f'<polyline points="{path_d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{w-pad+4}" y="{pad+14*i}" font-size="11" fill="{color}">{name}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts), encoding="utf-8")


def _hash(cfg: dict, seed: int) -> str:
    import hashlib

    blob = json.dumps(cfg, sort_keys=True, default=str) + f"|seed={seed}"
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def cmd_papr(cfg: dict, seed: int, out: Path, trials: int | None, threads: int, svg: bool) -> int:
    section = cfg.get("papr", {})
    mu_grid = [float(m) for m in section.get("mu_grid", (0.0, 1.25, 255.0))]
    n_trials = trials if trials is not None else int(section.get("n_trials", 20000))
    thresholds = _grid(section.get("thresholds_db"), (-1.0, 14.0, 0.05))
    ofdm = build_ofdm(cfg)
    rows = []
    series: dict[str, list[tuple[float, float]]] = {}
    for mu in mu_grid:
        transform = None
        if mu > 0:
            params = CompanderParams.default(mu=mu)
            transform = lambda w, p=params: compress_waveform(w, p)
        samples = papr_samples(ofdm, n_trials, seed, transform=transform)
        ccdf = ccdf_from_samples(samples, thresholds)
        rows += [(mu, t, c) for t, c in zip(thresholds, ccdf)]
        series[f"mu={mu:g}"] = list(zip(thresholds, ccdf))
    h = _hash(cfg, seed)
    write_csv(out / "papr_ccdf.csv", ("mu", "threshold_db", "ccdf"), rows, h, seed,
              comments=(f"n_trials={n_trials} n={ofdm.n_subcarriers} l={ofdm.oversampling_factor}",))
    if svg:
        _svg_chart(out / "papr_ccdf.svg", series, "PAPR threshold (dB)", "CCDF", log_y=True)
    print(f"papr: wrote {out / 'papr_ccdf.csv'} ({len(mu_grid)} curves)")
    return EXIT_OK


def cmd_dpd_design(cfg: dict, seed: int, out: Path, trials: int | None, threads: int, svg: bool) -> int:
    section = cfg.get("dpd", {})
    ofdm = build_ofdm(cfg)
    pa, op = build_pa(cfg)
    design = design_from_scratch(
        pa, ofdm, baseline_ibo_db=op.ibo_db,
        pa_order=int(section.get("pa_order", 4)),
        inverse_order=int(section.get("inverse_order", 7)),
        seed=seed,
    )
    h = _hash(cfg, seed)
    save_design(design, str(out / "dpd_design.txt"),
                header=(f"config_hash={h} seed={seed}",))
    grid = _grid(section.get("reduction_grid_db"), (0.0, 4.0, 0.25))
    rows = []
    series = {"evm": [], "eta1": []}
    for r in grid:
        e = chain_constellation_evm(pa, ofdm, op.ibo_db - r, design.inverse_fit, seed=seed + 1)
        eta1 = efficiency_at_backoff(op.ibo_db - r)
        rows.append((float(r), e, eta1, 100.0 * (eta1 - efficiency_at_backoff(op.ibo_db))))
        series["evm"].append((float(r), e))
        series["eta1"].append((float(r), eta1))
    write_csv(out / "dpd_evm.csv",
              ("ibo_reduction_db", "evm", "eta1", "eta1_gain_pts"), rows, h, seed)
    if svg:
        _svg_chart(out / "dpd_evm.svg", series, "IBO reduction (dB)", "EVM / eta1")
    flag = " (degenerate)" if design.degenerate else ""
    print(f"dpd-design: reduction {design.ibo_reduction_db:.3f} dB{flag}, "
          f"EVM {design.evm_baseline:.4f} -> {design.evm_with_dpd:.4f}")
    print(f"dpd-design: wrote {out / 'dpd_design.txt'} and {out / 'dpd_evm.csv'}")
    return EXIT_OK


def cmd_mu_sweep(cfg: dict, seed: int, out: Path, trials: int | None, threads: int, svg: bool) -> int:
    section = cfg.get("mu_sweep", {})
    mu_grid = [float(m) for m in section.get("mu_grid", np.arange(0.25, 4.01, 0.25))]
    papr_trials = trials if trials is not None else int(section.get("papr_trials", 4000))
    ofdm = build_ofdm(cfg)
    pa, op = build_pa(cfg)
    split = build_split(cfg)
    rows = []
    series = {"snr_db": []}
    for mu in mu_grid:
        params = CompanderParams.default(mu=mu)
        bp = analytic_companded_bussgang(params, op.ibo_db)
        snr = companded_snr(params, ofdm.n_subcarriers, split.sigma_a2, bp.sigma_d2)
        red = companded_papr_reduction(ofdm, params, n_trials=papr_trials, seed=seed)
        snr_db = 10.0 * np.log10(snr)
        rows.append((mu, snr_db, red.reduction_db, bp.k_l, bp.sigma_d2))
        series["snr_db"].append((mu, snr_db))
    design = optimize_mu(ofdm, pa, ibo_grid_db=(op.ibo_db,), sigma_a2=split.sigma_a2, seed=seed)
    h = _hash(cfg, seed)
    write_csv(out / "mu_sweep.csv",
              ("mu", "snr_db", "papr_reduction_db", "k_l_c", "sigma_d_c2"),
              rows, h, seed,
              comments=(f"mu_star={design.mu_star:.4f} at ibo_db={design.ibo_db:g} "
                        f"(unimodal={int(design.unimodal)})",))
    if svg:
        _svg_chart(out / "mu_sweep.svg", series, "mu", "post-expansion SNR (dB)")
    print(f"mu-sweep: mu* = {design.mu_star:.4f}, wrote {out / 'mu_sweep.csv'}")
    return EXIT_OK


def cmd_e2e(cfg: dict, seed: int, out: Path, trials: int | None, threads: int, svg: bool) -> int:
    base = build_scenario(cfg, seed, trials)
    h = _hash(cfg, seed)
    results = table_pipeline(base, seed=seed, trials=base.trials)
    rows = []
    for res in results:
        r = res.rows[0]
        m = r.metrics
        rows.append((r.axis_value, m.eta1, m.eta3, m.eta_e2e, r.ibo_reduction_db,
                     m.rate_bps_hz, m.harvested_norm, m.ber))
    write_csv(out / "technique_table.csv",
              ("technique", "eta1", "eta3", "eta1_eta3", "ibo_reduction_db",
               "rate_bps_hz", "h_p_norm", "ber"),
              rows, h, seed)

    chan_rows = []
    for kind in CHANNEL_KINDS:
        spec = replace(build_channel(cfg), kind=kind)
        ofdm = base.ofdm
        if kind == "rayleigh_multitap" and ofdm.cp_length < spec.n_taps - 1:
            ofdm = replace(ofdm, cp_length=2 ** int(np.ceil(np.log2(spec.n_taps))))
        for tech in ("baseline", "dpd", "companding", "dpd_companding"):
            s = replace(base, name=f"{kind}/{tech}", technique=tech,
                        channel=spec, ofdm=ofdm, seed=seed)
            r = run_scenario(s).rows[0]
            m = r.metrics
            chan_rows.append((kind, tech, m.eta1, m.eta3, m.eta_e2e,
                              r.ci("eta3"), m.ber))
    write_csv(out / "channel_metrics.csv",
              ("channel", "technique", "eta1", "eta3", "eta1_eta3", "eta3_ci", "ber"),
              chan_rows, h, seed)
    print(f"e2e: wrote {out / 'technique_table.csv'} and {out / 'channel_metrics.csv'}")
    return EXIT_OK


def cmd_ber(cfg: dict, seed: int, out: Path, trials: int | None, threads: int, svg: bool) -> int:
    section = cfg.get("ber", {})
    ebn0 = [float(v) for v in section.get("ebn0_db", (0.0, 4.0, 8.0))]
    techniques = tuple(section.get("techniques", ("baseline", "companding")))
    channels = tuple(section.get("channels", CHANNEL_KINDS))
    for t in techniques:
        if t not in ("linear", "baseline", "dpd", "companding", "dpd_companding"):
            raise ConfigError(f"config section 'ber.techniques': unknown technique '{t}'")
    for c in channels:
        if c not in CHANNEL_KINDS:
            raise ConfigError(f"config section 'ber.channels': unknown channel '{c}'")
    base = build_scenario(cfg, seed, trials)
    h = _hash(cfg, seed)
    rows = []
    series: dict[str, list[tuple[float, float]]] = {}
    for kind in channels:
        spec = replace(base.channel, kind=kind)
        ofdm = base.ofdm
        if kind == "rayleigh_multitap" and ofdm.cp_length < spec.n_taps - 1:
            ofdm = replace(ofdm, cp_length=2 ** int(np.ceil(np.log2(spec.n_taps))))
        for tech in techniques:
            s = replace(
                base, technique=tech, channel=spec, ofdm=ofdm,
                split=replace(base.split, rho=0.0, sigma_p2=0.0),
                name=f"{kind}/{tech}",
            )
            res = sweep("snr", ebn0, s, threads=threads)
            for point in res.rows:
                n_bits = 2 * ofdm.n_subcarriers * s.frame_symbols * s.trials
                rows.append((kind, tech, point.axis_value, point.metrics.ber,
                             point.ci("ber"), n_bits))
            series[f"{kind}/{tech}"] = [(p.axis_value, p.metrics.ber) for p in res.rows]
    write_csv(out / "ber_curves.csv",
              ("channel", "technique", "ebn0_db", "ber", "ber_ci", "n_bits"),
              rows, h, seed)
    if svg:
        _svg_chart(out / "ber_curves.svg", series, "Eb/N0 (dB)", "BER", log_y=True)
    print(f"ber: wrote {out / 'ber_curves.csv'} ({len(rows)} points)")
    return EXIT_OK


def cmd_rate_energy(cfg: dict, seed: int, out: Path, trials: int | None, threads: int, svg: bool) -> int:
    section = cfg.get("rate_energy", {})
    default_grid = list(np.linspace(0.0, 0.9, 10)) + [1 - 10.0 ** (-k) for k in range(2, 7)]
    rho_grid = [float(v) for v in section.get("rho_grid", default_grid)]
    techniques = tuple(section.get("techniques", ("baseline", "companding")))
    base = build_scenario(cfg, seed, trials)
    pa_sat = base.pa.kind in ("sspa", "soft_limiter")
    h = _hash(cfg, seed)
    rows = []
    series: dict[str, list[tuple[float, float]]] = {}
    for tech in techniques:
        if tech not in ("linear", "baseline", "companding"):
            raise ConfigError(
                "config section 'rate_energy.techniques': only closed-form "
                f"techniques allowed, got '{tech}'")
        params = CompanderParams.default(mu=base.mu)
        if tech == "linear" or not pa_sat:
            k_l, sd2 = 1.0, 0.0
        elif tech == "companding":
            bp = analytic_companded_bussgang(params, base.op.ibo_db)
            k_l, sd2 = bp.k_l, bp.sigma_d2
        else:
            bp = bussgang_analytic_sl(OperatingPoint(ibo_db=base.op.ibo_db))
            k_l, sd2 = bp.k_l, bp.sigma_d2
        p = base.p_rf_tx
        curve_r, curve_h = [], []
        for rho in rho_grid:
            split = replace(base.split, rho=float(rho))
            if tech == "companding":
                snr_v = companded_sinr(split, params, k_l, sd2, 1.0, p)
                he = companded_harvested(split, params, k_l, sd2, 1.0, p,
                                         EhModel.linear(), 1.0, p)
            else:
                snr_v = sinr(split, k_l, sd2, 1.0, p)
                he = harvested(split, k_l, sd2, 1.0, p, EhModel.linear(), 1.0, p)
            rate = achievable_rate(snr_v)
            rows.append((float(rho), tech, rate, he.h_p_norm))
            curve_r.append((float(rho), rate))
            curve_h.append((float(rho), he.h_p_norm))
        series[f"rate/{tech}"] = curve_r
        series[f"h_p/{tech}"] = curve_h
    write_csv(out / "rate_energy.csv",
              ("rho", "technique", "rate_bps_hz", "h_p_norm"), rows, h, seed)
    if svg:
        _svg_chart(out / "rate_energy.svg", series, "rho", "rate / harvested")
    print(f"rate-energy: wrote {out / 'rate_energy.csv'}")
    return EXIT_OK


_COMMANDS = {
    "papr": cmd_papr,
    "dpd-design": cmd_dpd_design,
    "mu-sweep": cmd_mu_sweep,
    "e2e": cmd_e2e,
    "ber": cmd_ber,
    "rate-energy": cmd_rate_energy,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="swiptsim",
        description="Link-level simulator for simultaneous wireless information "
                    "and power transfer with PA back-off reduction techniques.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--trials", type=int, default=None,
                        help="override Monte Carlo trial count")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweep points")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        if seed < 0:
            raise ConfigError("seed must be non-negative")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        svg = bool(cfg.get("svg", False))
        return _COMMANDS[args.command](cfg, seed, out, args.trials, args.threads, svg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, OSError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
