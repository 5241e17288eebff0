"""Polynomial predistortion: amplifier identification, inverse fitting,
and the back-off reduction design loop.

Everything works on AM/AM curves (real amplitude polynomials).  The design
loop finds the largest input back-off reduction whose error vector
magnitude, with predistortion, still matches the uncorrected chain at the
original operating point.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .ofdm import ComplexSignal, OfdmConfig, normalize_power, random_qpsk_grid, synthesize_waveforms
from .pa import PaModel

log = logging.getLogger(__name__)

EVM_MATCH_TOLERANCE = 0.01


@dataclass(frozen=True)
class PolyFit:
    """Least-squares amplitude polynomial, valid on [0, domain_max]."""

    order: int
    coeffs: tuple[float, ...]
    domain_max: float
    residual_rms: float

    def __post_init__(self) -> None:
        if len(self.coeffs) != self.order + 1:
            raise ValueError("coefficient count must equal order + 1")

    def __call__(self, amplitude: np.ndarray) -> np.ndarray:
        return npoly.polyval(np.asarray(amplitude, dtype=float), np.asarray(self.coeffs))


def _ls_poly(x: np.ndarray, y: np.ndarray, order: int) -> PolyFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("training vectors must be equal-length 1-D arrays")
    if np.unique(np.round(x, 12)).size <= order:
        raise ValueError(
            f"need more than {order} distinct amplitudes to fit order {order}"
        )
    vand = np.vander(x, order + 1, increasing=True)
    coeffs, *_ = np.linalg.lstsq(vand, y, rcond=None)
    resid = float(np.sqrt(np.mean((vand @ coeffs - y) ** 2)))
    return PolyFit(
        order=order,
        coeffs=tuple(float(c) for c in coeffs),
        domain_max=float(x.max()),
        residual_rms=resid,
    )


def fit_pa_polynomial(train_in: np.ndarray, train_out: np.ndarray, order: int = 4) -> PolyFit:
    """Fit the amplifier's AM/AM curve, output as a polynomial of the input."""
    return _ls_poly(train_in, train_out, order)


def fit_inverse_polynomial(train_out: np.ndarray, train_in: np.ndarray, order: int = 7) -> PolyFit:
    """Fit the pre-inverse: required drive amplitude as a polynomial of the
    wanted output amplitude.  Fitted directly on the swapped data rather
    than by composing coefficient vectors."""
    return _ls_poly(train_out, train_in, order)


def make_training_set(
    pa_model: PaModel,
    cfg: OfdmConfig | None = None,
    seed: int = 0,
    ramp_points: int = 4096,
    overdrive: float = 1.2,
) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude training data: a deterministic ramp plus one modulated frame.

    The ramp spans [0, overdrive * a_sat] so the fit sees the full
    compression knee.  The modulated frame is kept at its natural
    unit-power scale; its peaks push the observed output range up to the
    saturation ceiling, which sets how far the inverse fit can reach.
    """
    ramp = np.linspace(0.0, overdrive * pa_model.a_sat, ramp_points)
    amp_in = ramp
    if cfg is not None:
        rng = np.random.default_rng(seed)
        frame = synthesize_waveforms(random_qpsk_grid(cfg, rng), cfg)
        amp_in = np.concatenate([ramp, np.abs(normalize_power(frame))])
    return amp_in, pa_model.am_am(amp_in)


def predistort(signal: ComplexSignal, inverse_fit: PolyFit) -> ComplexSignal:
    """Map sample magnitudes through the inverse polynomial, keeping phase.

    Magnitudes beyond the fit's domain are clamped to domain_max first;
    that is reported with a warning rather than an error since it simply
    pins those samples at the amplifier's reachable ceiling.
    """
    m = np.abs(signal.samples)
    clipped = m > inverse_fit.domain_max
    if np.any(clipped):
        warnings.warn(
            f"{int(clipped.sum())} of {m.size} samples beyond the inverse-fit "
            f"domain ({inverse_fit.domain_max:.4f}); clamped",
            RuntimeWarning,
            stacklevel=2,
        )
    target = np.minimum(m, inverse_fit.domain_max)
    drive = np.clip(inverse_fit(target), 0.0, None)
    ratio = np.divide(drive, m, out=np.zeros_like(m), where=m > 0)
    return signal.with_samples(signal.samples * ratio)


def evm(reference: np.ndarray, measured: np.ndarray) -> float:
    """RMS error after removing the least-squares complex bulk gain."""
    ref = np.asarray(reference).ravel()
    mea = np.asarray(measured).ravel()
    if ref.shape != mea.shape:
        raise ValueError("reference and measured lengths differ")
    ref_power = np.vdot(ref, ref).real
    if ref_power <= 0.0:
        raise ValueError("reference power must be positive")
    alpha = np.vdot(ref, mea) / ref_power
    err = mea - alpha * ref
    return float(np.sqrt(np.vdot(err, err).real / ref_power))


@dataclass(frozen=True)
class DpdDesign:
    pa_fit: PolyFit
    inverse_fit: PolyFit
    ibo_reduction_db: float
    evm_baseline: float
    evm_with_dpd: float
    baseline_ibo_db: float
    degenerate: bool = False
    notes: tuple[str, ...] = field(default=())


def _amplitude_chain(
    x: np.ndarray,
    pa_model: PaModel,
    ibo_db: float,
    inverse_fit: PolyFit | None,
) -> np.ndarray:
    """Back-off, optional predistortion, amplifier, then gain removal."""
    g = 10.0 ** (-ibo_db / 20.0)
    u = x * g
    if inverse_fit is not None:
        m = np.abs(u)
        target = np.minimum(m, inverse_fit.domain_max)
        drive = np.clip(inverse_fit(target), 0.0, None)
        u = u * np.divide(drive, m, out=np.zeros_like(m), where=m > 0)
    m = np.abs(u)
    out = pa_model.am_am(m)
    y = u * np.divide(out, m, out=np.ones_like(m), where=m > 0)
    return y / g


def design_ibo_reduction(
    pa_model: PaModel,
    pa_fit: PolyFit,
    inverse_fit: PolyFit,
    baseline_ibo_db: float,
    cfg: OfdmConfig,
    seed: int = 0,
    n_symbols: int = 64,
    step_db: float = 0.1,
    max_reduction_db: float = 8.0,
    tolerance: float = EVM_MATCH_TOLERANCE,
) -> DpdDesign:
    """Largest back-off reduction whose predistorted EVM still matches the
    uncorrected chain at the baseline operating point.

    EVM is measured on demodulated constellation points, so distortion
    that lands out of band does not count against either chain.  Grid
    search in step_db increments brackets the crossing; bisection refines
    it to a millidB.  The same waveform block is reused for every
    candidate so the comparison is noise-free.
    """
    from .ofdm import ofdm_demodulate

    rng = np.random.default_rng(seed)
    grids = np.stack([random_qpsk_grid(cfg, rng) for _ in range(n_symbols)])
    waveforms = synthesize_waveforms(grids, cfg)
    x = waveforms.ravel()
    x = x / np.sqrt(np.mean(np.abs(x) ** 2))

    def chain_evm(ibo_db: float, fit: PolyFit | None) -> float:
        y = _amplitude_chain(x, pa_model, ibo_db, fit)
        rx = ofdm_demodulate(y.reshape(n_symbols, -1), cfg)
        return evm(grids.ravel(), rx.ravel())

    evm_base = chain_evm(baseline_ibo_db, None)
    target = evm_base * (1.0 + tolerance)
    notes: list[str] = []

    evm_dpd = lambda r: chain_evm(baseline_ibo_db - r, inverse_fit)

    reductions = np.arange(0.0, max_reduction_db + 1e-9, step_db)
    evms = np.array([evm_dpd(r) for r in reductions])

    if np.all(evms < 1e-9):
        notes.append("distortion-free chain: search hit its upper bound")
        log.info("degenerate design: EVM is zero over the whole search range")
        return DpdDesign(
            pa_fit=pa_fit,
            inverse_fit=inverse_fit,
            ibo_reduction_db=float(max_reduction_db),
            evm_baseline=evm_base,
            evm_with_dpd=float(evms[-1]),
            baseline_ibo_db=baseline_ibo_db,
            degenerate=True,
            notes=tuple(notes),
        )

    non_monotone = np.flatnonzero(np.diff(evms) < -1e-12)
    if non_monotone.size:
        msg = (f"EVM not monotone in reduction near "
               f"{reductions[non_monotone[0]]:.1f} dB")
        notes.append(msg)
        log.warning(msg)

    feasible = evms <= target
    if not feasible[0]:
        notes.append(
            f"no feasible reduction: EVM with predistortion at the baseline "
            f"({evms[0]:.4f}) already exceeds {target:.4f}"
        )
        log.warning(notes[-1])
        return DpdDesign(
            pa_fit=pa_fit,
            inverse_fit=inverse_fit,
            ibo_reduction_db=0.0,
            evm_baseline=evm_base,
            evm_with_dpd=float(evms[0]),
            baseline_ibo_db=baseline_ibo_db,
            degenerate=False,
            notes=tuple(notes),
        )

    last = int(np.flatnonzero(feasible).max())
    lo = float(reductions[last])
    if last == len(reductions) - 1:
        notes.append("search hit its upper bound; reduction may extend further")
        return DpdDesign(
            pa_fit=pa_fit,
            inverse_fit=inverse_fit,
            ibo_reduction_db=lo,
            evm_baseline=evm_base,
            evm_with_dpd=float(evms[last]),
            baseline_ibo_db=baseline_ibo_db,
            degenerate=False,
            notes=tuple(notes),
        )

    hi = float(reductions[last + 1])
    for _ in range(24):
        mid = 0.5 * (lo + hi)
        if evm_dpd(mid) <= target:
            lo = mid
        else:
            hi = mid
    return DpdDesign(
        pa_fit=pa_fit,
        inverse_fit=inverse_fit,
        ibo_reduction_db=lo,
        evm_baseline=evm_base,
        evm_with_dpd=float(evm_dpd(lo)),
        baseline_ibo_db=baseline_ibo_db,
        degenerate=False,
        notes=tuple(notes),
    )


def design_from_scratch(
    pa_model: PaModel,
    cfg: OfdmConfig,
    baseline_ibo_db: float = 8.0,
    pa_order: int = 4,
    inverse_order: int = 7,
    seed: int = 0,
) -> DpdDesign:
    """Convenience wrapper: build training data, fit both polynomials, run
    the reduction search."""
    amp_in, amp_out = make_training_set(pa_model, cfg, seed=seed)
    pa_fit = fit_pa_polynomial(amp_in, amp_out, pa_order)
    inverse_fit = fit_inverse_polynomial(amp_out, amp_in, inverse_order)
    return design_ibo_reduction(
        pa_model, pa_fit, inverse_fit, baseline_ibo_db, cfg, seed=seed + 1
    )


def chain_constellation_evm(
    pa_model: PaModel,
    cfg: OfdmConfig,
    ibo_db: float,
    inverse_fit: PolyFit | None = None,
    seed: int = 0,
    n_symbols: int = 64,
) -> float:
    """EVM of the demodulated constellation through back-off, optional
    predistortion, and the amplifier, on a noise-free random frame."""
    from .ofdm import ofdm_demodulate

    rng = np.random.default_rng(seed)
    grids = np.stack([random_qpsk_grid(cfg, rng) for _ in range(n_symbols)])
    x = synthesize_waveforms(grids, cfg).ravel()
    x = x / np.sqrt(np.mean(np.abs(x) ** 2))
    y = _amplitude_chain(x, pa_model, ibo_db, inverse_fit)
    rx = ofdm_demodulate(y.reshape(n_symbols, -1), cfg)
    return evm(grids.ravel(), rx.ravel())


def save_design(design: DpdDesign, path: str, header: tuple[str, ...] = ()) -> None:
    """Plain-text key=value serialization, one key per line; ``header``
    lines are written as leading comments."""
    lines = [f"# {h}" for h in header]
    lines += [
        f"baseline_ibo_db={design.baseline_ibo_db!r}",
        f"ibo_reduction_db={design.ibo_reduction_db!r}",
        f"evm_baseline={design.evm_baseline!r}",
        f"evm_with_dpd={design.evm_with_dpd!r}",
        f"degenerate={int(design.degenerate)}",
        f"pa_order={design.pa_fit.order}",
        "pa_coeffs=" + ",".join(repr(c) for c in design.pa_fit.coeffs),
        f"pa_domain_max={design.pa_fit.domain_max!r}",
        f"pa_residual_rms={design.pa_fit.residual_rms!r}",
        f"inverse_order={design.inverse_fit.order}",
        "inverse_coeffs=" + ",".join(repr(c) for c in design.inverse_fit.coeffs),
        f"inverse_domain_max={design.inverse_fit.domain_max!r}",
        f"inverse_residual_rms={design.inverse_fit.residual_rms!r}",
    ]
    for note in design.notes:
        lines.append(f"note={note}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_design(path: str) -> DpdDesign:
    kv: dict[str, str] = {}
    notes: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            if key == "note":
                notes.append(value)
            else:
                kv[key] = value
    pa_fit = PolyFit(
        order=int(kv["pa_order"]),
        coeffs=tuple(float(c) for c in kv["pa_coeffs"].split(",")),
        domain_max=float(kv["pa_domain_max"]),
        residual_rms=float(kv["pa_residual_rms"]),
    )
    inverse_fit = PolyFit(
        order=int(kv["inverse_order"]),
        coeffs=tuple(float(c) for c in kv["inverse_coeffs"].split(",")),
        domain_max=float(kv["inverse_domain_max"]),
        residual_rms=float(kv["inverse_residual_rms"]),
    )
    return DpdDesign(
        pa_fit=pa_fit,
        inverse_fit=inverse_fit,
        ibo_reduction_db=float(kv["ibo_reduction_db"]),
        evm_baseline=float(kv["evm_baseline"]),
        evm_with_dpd=float(kv["evm_with_dpd"]),
        baseline_ibo_db=float(kv["baseline_ibo_db"]),
        degenerate=bool(int(kv.get("degenerate", "0"))),
        notes=tuple(notes),
    )
