"""OFDM baseband synthesis, demodulation and PAPR statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

_QPSK_SCALE = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class ComplexSignal:
    """A block of complex-baseband samples tagged with its sampling rate.

    The sample array is the common currency between the transmit, channel and
    receive blocks; it is validated (finite, one-dimensional) on construction
    and treated as immutable afterwards.
    """

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1:
            raise ValueError("samples must be a one-dimensional array")
        if not np.all(np.isfinite(samples.real)) or not np.all(np.isfinite(samples.imag)):
            raise ValueError("samples must be finite")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    def with_samples(self, samples: np.ndarray) -> "ComplexSignal":
        """New signal at the same rate with replaced samples."""
        return ComplexSignal(samples, self.sample_rate_hz)

    @property
    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))

    @property
    def peak_power(self) -> float:
        return float(np.max(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM numerology.

    Defaults (N=512 QPSK subcarriers at 15 kHz spacing, 4x oversampling)
    match the link evaluation setup used throughout the package.
    """

    n_subcarriers: int = 512
    subcarrier_spacing_hz: float = 15e3
    oversampling_factor: int = 4
    cp_length: int = 0

    def __post_init__(self):
        n = self.n_subcarriers
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError("n_subcarriers must be a power of two >= 2")
        if self.subcarrier_spacing_hz <= 0:
            raise ValueError("subcarrier_spacing_hz must be positive")
        if self.oversampling_factor < 1:
            raise ValueError("oversampling_factor must be >= 1")
        if not 0 <= self.cp_length < n * self.oversampling_factor:
            raise ValueError("cp_length must lie in [0, N*L)")

    @property
    def n_samples(self) -> int:
        """Samples per symbol body (CP excluded)."""
        return self.n_subcarriers * self.oversampling_factor

    @property
    def sample_rate_hz(self) -> float:
        return self.n_samples * self.subcarrier_spacing_hz


def map_bits(bits: np.ndarray) -> np.ndarray:
    """Gray-map a 0/1 vector onto unit-energy QPSK symbols.

    The first bit of each pair selects the sign of the real part, the second
    the sign of the imaginary part, 0 mapping to +: 00 -> (1+1j)/sqrt(2).
    """
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.size % 2 != 0:
        raise ValueError("bit vector must be one-dimensional with even length")
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError("bits must be 0 or 1")
    pairs = bits.reshape(-1, 2).astype(np.float64)
    return _QPSK_SCALE * ((1.0 - 2.0 * pairs[:, 0]) + 1j * (1.0 - 2.0 * pairs[:, 1]))


def demap_symbols(symbols: np.ndarray) -> np.ndarray:
    """Hard-decision inverse of :func:`map_bits`."""
    symbols = np.asarray(symbols)
    bits = np.empty((symbols.size, 2), dtype=np.int64)
    bits[:, 0] = symbols.real < 0
    bits[:, 1] = symbols.imag < 0
    return bits.reshape(-1)


def random_qpsk_grid(cfg: OfdmConfig, rng: np.random.Generator) -> np.ndarray:
    """One random QPSK subcarrier grid for cfg."""
    return map_bits(rng.integers(0, 2, size=2 * cfg.n_subcarriers))


def _pack_spectrum(grids: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    # Oversampling by zero-padding the spectrum centre: the first N/2 grid
    # entries are the non-negative tones, the last N/2 the negative ones.
    n, l = cfg.n_subcarriers, cfg.oversampling_factor
    padded = np.zeros(grids.shape[:-1] + (n * l,), dtype=np.complex128)
    padded[..., : n // 2] = grids[..., : n // 2]
    padded[..., n * l - n // 2:] = grids[..., n // 2:]
    return padded


def synthesize_waveforms(grids: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """IDFT synthesis of one grid (1-D) or a batch of grids (2-D).

    Scaled so that x(n) = (1/sqrt(N)) sum_k X_k exp(j 2 pi k n / (N L)):
    a unit-mean-power grid yields a unit-mean-power waveform for any L.
    """
    grids = np.asarray(grids, dtype=np.complex128)
    if grids.shape[-1] != cfg.n_subcarriers:
        raise ValueError("grid length must equal n_subcarriers")
    padded = _pack_spectrum(grids, cfg)
    x = np.sqrt(cfg.oversampling_factor) * np.fft.ifft(padded, norm="ortho")
    if cfg.cp_length:
        x = np.concatenate([x[..., -cfg.cp_length:], x], axis=-1)
    return x


def ofdm_modulate(grid: np.ndarray, cfg: OfdmConfig) -> ComplexSignal:
    """Modulate one subcarrier grid into a time-domain symbol (CP included)."""
    grid = np.asarray(grid, dtype=np.complex128)
    if grid.shape != (cfg.n_subcarriers,):
        raise ValueError(f"grid must have shape ({cfg.n_subcarriers},)")
    return ComplexSignal(synthesize_waveforms(grid, cfg), cfg.sample_rate_hz)


def ofdm_demodulate(signal, cfg: OfdmConfig) -> np.ndarray:
    """Recover the subcarrier grid from a time-domain symbol; inverse of
    :func:`ofdm_modulate` up to numerical precision."""
    x = signal.samples if isinstance(signal, ComplexSignal) else np.asarray(signal)
    if cfg.cp_length:
        x = x[..., cfg.cp_length:]
    if x.shape[-1] != cfg.n_samples:
        raise ValueError("sample count does not match the configuration")
    spectrum = np.fft.fft(x, norm="ortho") / np.sqrt(cfg.oversampling_factor)
    n, l = cfg.n_subcarriers, cfg.oversampling_factor
    return np.concatenate(
        [spectrum[..., : n // 2], spectrum[..., n * l - n // 2:]], axis=-1
    )


def papr_db(signal) -> float:
    """Peak-to-average power ratio, 10*log10(max|x|^2 / mean|x|^2)."""
    x = signal.samples if isinstance(signal, ComplexSignal) else np.asarray(signal)
    p = np.abs(x) ** 2
    mean = p.mean()
    if mean <= 0:
        raise ValueError("signal power is zero")
    return float(10.0 * np.log10(p.max() / mean))


def papr_samples(
    cfg: OfdmConfig,
    n_trials: int,
    seed: int,
    transform: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    chunk: int = 512,
) -> np.ndarray:
    """Per-symbol PAPR (dB) of random QPSK OFDM symbols.

    ``transform``, if given, is applied to the batch of time-domain waveforms
    before the PAPR is measured (e.g. a compressor).
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = np.random.default_rng(seed)
    out = np.empty(n_trials)
    done = 0
    while done < n_trials:
        m = min(chunk, n_trials - done)
        bits = rng.integers(0, 2, size=(m, 2 * cfg.n_subcarriers))
        grids = _QPSK_SCALE * (
            (1.0 - 2.0 * bits[:, 0::2]) + 1j * (1.0 - 2.0 * bits[:, 1::2])
        )
        x = synthesize_waveforms(grids, cfg)
        if transform is not None:
            x = transform(x)
        p = np.abs(x) ** 2
        out[done:done + m] = 10.0 * np.log10(p.max(axis=-1) / p.mean(axis=-1))
        done += m
    return out


def ccdf_from_samples(
    papr_db_samples: np.ndarray, thresholds_db: np.ndarray
) -> np.ndarray:
    """Empirical P(PAPR > threshold) for each threshold."""
    ordered = np.sort(np.asarray(papr_db_samples))
    above = ordered.size - np.searchsorted(ordered, thresholds_db, side="right")
    return above / ordered.size


def papr_ccdf(
    cfg: OfdmConfig,
    n_trials: int,
    seed: int,
    thresholds_db: Optional[np.ndarray] = None,
    transform: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Monte Carlo PAPR CCDF on a threshold grid (default -1..14 dB)."""
    if thresholds_db is None:
        thresholds_db = np.arange(-1.0, 14.0 + 1e-9, 0.05)
    thresholds_db = np.asarray(thresholds_db, dtype=float)
    samples = papr_samples(cfg, n_trials, seed, transform=transform)
    return thresholds_db, ccdf_from_samples(samples, thresholds_db)


def papr_quantile_db(papr_db_samples: np.ndarray, exceedance: float) -> float:
    """PAPR level exceeded with the given probability (CCDF quantile)."""
    if not 0.0 < exceedance < 1.0:
        raise ValueError("exceedance must lie in (0, 1)")
    return float(np.quantile(np.asarray(papr_db_samples), 1.0 - exceedance))


def normalize_power(samples: np.ndarray) -> np.ndarray:
    """Scale a sample block to unit average power."""
    samples = np.asarray(samples, dtype=np.complex128)
    p = np.mean(np.abs(samples) ** 2)
    if p <= 0:
        raise ValueError("cannot normalize a zero-power block")
    return samples / np.sqrt(p)
