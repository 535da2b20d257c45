"""MFCC extraction, the observation function of the statistical warden.

Per 30 ms frame (10 ms step): pre-emphasis, Hamming window, zero-padding to
a 256-point FFT, power spectrum, triangular mel filterbank, natural log
with a floor, orthonormal DCT-II.  No deltas and no cepstral mean
normalisation: channel colouration is exactly what the detector looks for.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from .audio import SAMPLE_RATE, PcmSignal, frame_signal

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class MfccConfig:
    window_ms: float = 30.0
    step_ms: float = 10.0
    num_filters: int = 26
    num_coeffs: int = 19
    pre_emphasis: float = 0.97
    include_c0: bool = False
    fft_size: int = 256

    def __post_init__(self):
        if not 1 <= self.num_coeffs <= self.num_filters - (0 if self.include_c0 else 1):
            raise ValueError(f"num_coeffs={self.num_coeffs} incompatible with {self.num_filters} filters")
        if self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two")
        if round(self.window_ms * SAMPLE_RATE / 1000) > self.fft_size:
            raise ValueError("analysis window longer than the FFT")


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    rows: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ValueError("feature matrix must be 2-D (frames x coefficients)")
        if not np.all(np.isfinite(rows)):
            raise ValueError("non-finite feature values")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def num_coeffs(self) -> int:
        return self.rows.shape[1]

    def __len__(self):
        return self.rows.shape[0]

    def head(self, n_coeffs: int) -> "FeatureMatrix":
        """Keep only the first ``n_coeffs`` coefficients of every row."""
        return FeatureMatrix(self.rows[:, :n_coeffs], self.source_id)

    @staticmethod
    def stack(mats) -> "FeatureMatrix":
        mats = list(mats)
        return FeatureMatrix(np.vstack([m.rows for m in mats]), "+".join(m.source_id for m in mats))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


def filter_edges(num_filters: int, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """``num_filters + 2`` edge frequencies (Hz) equally spaced in mel over 0..fs/2."""
    mels = np.linspace(0.0, hz_to_mel(sample_rate / 2), num_filters + 2)
    return mel_to_hz(mels)


def mel_filterbank(num_filters: int = 26, fft_size: int = 256, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Triangular filter weights, shape ``(num_filters, fft_size // 2 + 1)``.

    Filter ``j`` rises from edge ``j`` to its peak at edge ``j+1`` and falls
    to zero at edge ``j+2``; weights are evaluated at the FFT bin centres.
    """
    if num_filters < 1:
        raise ValueError("need at least one filter")
    if fft_size < 2 or fft_size & (fft_size - 1):
        raise ValueError("fft_size must be a power of two")
    edges = filter_edges(num_filters, sample_rate)
    freqs = np.arange(fft_size // 2 + 1) * sample_rate / fft_size
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    return np.maximum(0.0, np.minimum(rising, falling))


def _frames(signal, cfg: MfccConfig) -> np.ndarray:
    x = signal.samples if isinstance(signal, PcmSignal) else np.asarray(signal)
    frames = frame_signal(x.astype(np.float64), cfg.window_ms, cfg.step_ms)
    emph = frames.copy()
    emph[:, 1:] -= cfg.pre_emphasis * frames[:, :-1]
    return emph * np.hamming(frames.shape[1])


def log_mel_energies(signal, cfg: MfccConfig = MfccConfig()) -> np.ndarray:
    frames = _frames(signal, cfg)
    spec = np.fft.rfft(frames, n=cfg.fft_size, axis=1)
    power = spec.real**2 + spec.imag**2
    energies = power @ mel_filterbank(cfg.num_filters, cfg.fft_size).T
    return np.log(np.maximum(energies, LOG_FLOOR))


def extract_mfcc(signal, cfg: MfccConfig = MfccConfig()) -> FeatureMatrix:
    ceps = dct(log_mel_energies(signal, cfg), type=2, norm="ortho", axis=1)
    first = 0 if cfg.include_c0 else 1
    rows = ceps[:, first:first + cfg.num_coeffs]
    return FeatureMatrix(rows, getattr(signal, "source_id", ""))


def write_features_csv(features: FeatureMatrix, path, include_c0: bool = False) -> None:
    first = 0 if include_c0 else 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"c{first + i}" for i in range(features.num_coeffs)])
        for row in features.rows:
            w.writerow([repr(float(v)) for v in row])
