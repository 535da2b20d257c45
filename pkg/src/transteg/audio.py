"""PCM audio I/O, framing, corpus ingestion and synthetic speech generation.

All audio in the toolkit is narrowband telephony speech: mono, 16-bit,
8000 Hz.  Other formats are rejected at ingestion rather than resampled.
"""

from __future__ import annotations

import os
import re
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import EmptyCorpus, NotWav, SignalTooShort, SingleSpeaker, UnsupportedFormat

SAMPLE_RATE = 8000
FULL_SCALE = 32768.0


@dataclass(frozen=True, eq=False)
class PcmSignal:
    """Mono 16-bit PCM at 8 kHz."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    source_id: str = ""

    def __post_init__(self):
        if self.sample_rate != SAMPLE_RATE:
            raise UnsupportedFormat(f"sample rate {self.sample_rate} Hz, expected {SAMPLE_RATE}")
        arr = np.asarray(self.samples)
        if arr.ndim != 1:
            raise UnsupportedFormat("PCM signal must be one-dimensional (mono)")
        if arr.size and (arr.min() < -32768 or arr.max() > 32767):
            raise ValueError("sample outside the 16-bit range")
        arr = arr.astype(np.int16)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def trim(self, n_samples: int) -> "PcmSignal":
        return PcmSignal(self.samples[:n_samples], self.sample_rate, self.source_id)

    def frame_aligned(self, frame: int = 160) -> "PcmSignal":
        """Drop trailing samples so the length is a multiple of ``frame``."""
        return self.trim(len(self) - len(self) % frame)


def read_wav(path) -> PcmSignal:
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            channels, width, rate = wf.getnchannels(), wf.getsampwidth(), wf.getframerate()
            comptype = wf.getcomptype()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise NotWav(f"{path}: {exc}") from exc
    if comptype != "NONE" or width != 2 or channels != 1 or rate != SAMPLE_RATE:
        raise UnsupportedFormat(
            f"{path}: {channels} ch, {8 * width}-bit, {rate} Hz "
            f"(need mono 16-bit {SAMPLE_RATE} Hz PCM; resample externally)"
        )
    samples = np.frombuffer(raw, dtype="<i2")
    return PcmSignal(samples, SAMPLE_RATE, path.stem)


def write_wav(signal: PcmSignal, path) -> None:
    """Write a canonical 44-byte-header PCM WAV file."""
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(signal.sample_rate)
        wf.writeframes(signal.samples.astype("<i2").tobytes())


def frame_signal(signal, window_ms: float = 30.0, step_ms: float = 10.0) -> np.ndarray:
    """Split a signal into overlapping windows, dropping any partial tail.

    Returns a read-only ``(n_frames, window)`` view; frame ``i`` covers
    samples ``[i*step, i*step + window)``.
    """
    if not (window_ms >= step_ms > 0):
        raise ValueError("need window_ms >= step_ms > 0")
    x = signal.samples if isinstance(signal, PcmSignal) else np.asarray(signal)
    window = int(round(window_ms * SAMPLE_RATE / 1000))
    step = int(round(step_ms * SAMPLE_RATE / 1000))
    if x.shape[0] < window:
        raise SignalTooShort(f"{x.shape[0]} samples, need at least {window}")
    n = (x.shape[0] - window) // step + 1
    frames = np.lib.stride_tricks.as_strided(
        x, shape=(n, window), strides=(x.strides[0] * step, x.strides[0]), writeable=False
    )
    return frames


def energy_dbfs(samples) -> float:
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        return -np.inf
    ms = np.mean(x * x)
    return 10 * np.log10(ms / FULL_SCALE**2) if ms > 0 else -np.inf


def peak_normalize(signal: PcmSignal, peak_dbfs: float = -1.0) -> PcmSignal:
    """Scale so the absolute peak sits at ``peak_dbfs``; silent input is returned unchanged."""
    x = signal.samples.astype(np.float64)
    peak = np.max(np.abs(x)) if x.size else 0.0
    if peak == 0:
        return signal
    target = FULL_SCALE * 10 ** (peak_dbfs / 20)
    y = np.clip(np.round(x * target / peak), -32768, 32767)
    return PcmSignal(y.astype(np.int16), signal.sample_rate, signal.source_id)


# ---------------------------------------------------------------------------
# synthetic speech


@dataclass(frozen=True)
class SpeakerProfile:
    """Voice parameters shared by all utterances of one synthetic speaker."""

    pitch_hz: float = 130.0
    pitch_range: float = 0.25
    formant_scale: float = 1.0
    tilt: float = 0.9
    level_dbfs: float = -22.0
    noise_dbfs: float = -62.0

    @classmethod
    def random(cls, seed: int) -> "SpeakerProfile":
        rng = np.random.default_rng([seed, 0x5EA4E2])
        return cls(
            pitch_hz=float(rng.uniform(90, 220)),
            pitch_range=float(rng.uniform(0.1, 0.3)),
            formant_scale=float(rng.uniform(0.88, 1.12)),
            tilt=float(rng.uniform(0.8, 0.95)),
            level_dbfs=float(rng.uniform(-28, -18)),
            noise_dbfs=float(rng.uniform(-66, -56)),
        )


# nominal formant centres / bandwidths (Hz) of the four resonances
_FORMANT_LO = np.array([250.0, 800.0, 1800.0, 3000.0])
_FORMANT_HI = np.array([900.0, 2300.0, 3000.0, 3700.0])


def _resonator_poly(freqs, bws):
    a = np.array([1.0])
    for f, b in zip(freqs, bws):
        r = np.exp(-np.pi * b / SAMPLE_RATE)
        theta = 2 * np.pi * f / SAMPLE_RATE
        a = np.convolve(a, [1.0, -2 * r * np.cos(theta), r * r])
    return a


def synth_speech(duration: float, seed: int, speaker: SpeakerProfile | None = None) -> PcmSignal:
    """Deterministic speech-like signal built from random synthetic phones.

    Each 100-300 ms phone is an order-8 all-pole filter (four random
    formant-like resonances) driven by a glottal pulse train (voiced,
    80-250 Hz pitch) or white noise (unvoiced), shaped by an energy
    envelope.  About 10% of phones are silence gaps.  A faint background
    noise floor is added everywhere, as in any recorded corpus.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng([seed, 0x5EEC4])
    if speaker is None:
        speaker = SpeakerProfile.random(seed)
    n_total = int(round(duration * SAMPLE_RATE))
    out = np.zeros(n_total + 2400)
    pos = 0
    while pos < n_total:
        n = int(rng.integers(800, 2401))
        kind = rng.random()
        if kind < 0.10:
            pos += n
            continue
        voiced = kind < 0.72
        freqs = rng.uniform(_FORMANT_LO, _FORMANT_HI) * speaker.formant_scale
        freqs = np.minimum(freqs, 3850.0)
        bws = rng.uniform(60, 220, size=4)
        a = _resonator_poly(freqs, bws)
        if voiced:
            f0_start = speaker.pitch_hz * (1 + speaker.pitch_range * rng.uniform(-1, 1))
            f0_end = f0_start * (1 + 0.15 * rng.uniform(-1, 1))
            f0 = np.clip(np.linspace(f0_start, f0_end, n), 80, 250)
            phase = np.cumsum(f0 / SAMPLE_RATE) + rng.random()
            exc = np.diff(np.floor(phase), prepend=np.floor(phase[0])).astype(np.float64)
            exc = lfilter([1.0], [1.0, -speaker.tilt], exc)
            exc += 0.02 * rng.standard_normal(n)
            gain_db = rng.uniform(-6, 0)
        else:
            exc = rng.standard_normal(n)
            gain_db = rng.uniform(-16, -8)
        y = lfilter([1.0], a, exc)
        env = np.ones(n)
        ramp = int(rng.integers(80, 200))
        win = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
        env[:ramp] = win
        env[-ramp:] = win[::-1]
        env *= np.linspace(1.0, 10 ** (rng.uniform(-6, 3) / 20), n)
        y *= env
        rms = np.sqrt(np.mean(y * y))
        if rms > 0:
            y *= 10 ** (gain_db / 20) / rms
        out[pos:pos + n] += y
        pos += n
    out = out[:n_total]
    active = out[np.abs(out) > 0]
    ms = np.mean(active**2) if active.size else 0.0
    if ms > 0:
        out *= FULL_SCALE * 10 ** (speaker.level_dbfs / 20) / np.sqrt(ms)
    out += FULL_SCALE * 10 ** (speaker.noise_dbfs / 20) * rng.standard_normal(n_total)
    samples = np.clip(np.round(out), -32768, 32767).astype(np.int16)
    return PcmSignal(samples, SAMPLE_RATE, f"synth-{seed}")


# ---------------------------------------------------------------------------
# corpora


@dataclass(frozen=True)
class CorpusEntry:
    path: str
    speaker_id: str
    split: str  # "train" | "test"


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[CorpusEntry, ...]
    total_duration: dict = field(default_factory=dict)

    def speakers(self, split: str) -> list[str]:
        return sorted({e.speaker_id for e in self.entries if e.split == split})

    def split(self, split: str) -> list[CorpusEntry]:
        return [e for e in self.entries if e.split == split]

    def assert_disjoint(self) -> None:
        overlap = set(self.speakers("train")) & set(self.speakers("test"))
        if overlap:
            raise ValueError(f"speakers in both splits: {sorted(overlap)}")


_SPEAKER_PREFIX = re.compile(r"^([^_\-.]+)[_\-]")


def _wav_duration(path) -> float:
    try:
        with wave.open(str(path), "rb") as wf:
            return wf.getnframes() / wf.getframerate()
    except (wave.Error, EOFError) as exc:
        raise NotWav(f"{path}: {exc}") from exc


def ingest_corpus(directory, train_fraction: float = 0.8, seed: int = 0) -> CorpusManifest:
    """Build a speaker-disjoint train/test manifest from a WAV directory.

    Speakers are either subdirectories (``dir/<speaker>/*.wav``) or filename
    prefixes (``dir/<speaker>_<utt>.wav``).
    """
    root = Path(directory)
    by_speaker: dict[str, list[str]] = {}
    for path in sorted(root.rglob("*.wav")):
        rel = path.relative_to(root)
        if len(rel.parts) > 1:
            spk = rel.parts[0]
        else:
            m = _SPEAKER_PREFIX.match(path.name)
            spk = m.group(1) if m else path.stem
        by_speaker.setdefault(spk, []).append(str(path))
    if not by_speaker:
        raise EmptyCorpus(f"no .wav files under {root}")
    if len(by_speaker) < 2:
        raise SingleSpeaker("a speaker-disjoint split needs at least two speakers")
    speakers = sorted(by_speaker)
    order = np.random.default_rng(seed).permutation(len(speakers))
    n_train = int(round(train_fraction * len(speakers)))
    n_train = min(max(n_train, 1), len(speakers) - 1)
    train = {speakers[i] for i in order[:n_train]}
    entries = []
    totals = {"train": 0.0, "test": 0.0}
    for spk in speakers:
        split = "train" if spk in train else "test"
        for p in by_speaker[spk]:
            entries.append(CorpusEntry(p, spk, split))
            totals[split] += _wav_duration(p)
    return CorpusManifest(tuple(entries), totals)


def write_synthetic_corpus(directory, n_speakers: int, utterances: int, duration: float,
                           seed: int = 0) -> list[Path]:
    """Render a synthetic corpus as ``<dir>/<speaker>/<utt>.wav`` files."""
    root = Path(directory)
    paths = []
    for s in range(n_speakers):
        spk_seed = seed * 100003 + s
        profile = SpeakerProfile.random(spk_seed)
        spk_dir = root / f"spk{s:03d}"
        os.makedirs(spk_dir, exist_ok=True)
        for u in range(utterances):
            sig = synth_speech(duration, spk_seed * 1000 + u, profile)
            p = spk_dir / f"utt{u:02d}.wav"
            write_wav(sig, p)
            paths.append(p)
    return paths
