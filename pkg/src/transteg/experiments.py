"""Desk-scale evaluation of the statistical warden.

For an overt/covert pair, two GMMs are trained on MFCCs of training speech
rendered under NORMAL transmission (overt codec only) and ABNORMAL
transmission (the S4 chain observed at W3).  Held-out speakers are then
classified at a given test duration.  All randomness derives from a single
top-level seed, and aggregation always follows sorted source ids.
"""

from __future__ import annotations

import enum
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .audio import PcmSignal, CorpusManifest, SpeakerProfile, read_wav, synth_speech
from .codecs import CodecId, FRAME_SAMPLES, decode_payloads, encode_signal
from .errors import EmptyCorpus
from .features import FeatureMatrix, MfccConfig, extract_mfcc
from .gmm import EmSettings, GmmModel, train_em
from .rtp import depacketize
from .stego import Location, Scenario, StegoConfig, run_scenario, stego_capacity
from .warden import Verdict, score_signal

MAX_MFCC = 19
DURATION_RANGE = (0.26, 10.0)


class Condition(str, enum.Enum):
    NORMAL = "normal"
    ABNORMAL = "abnormal"


def default_mfcc_count(pair: StegoConfig) -> int:
    """12 coefficients for G.711 carrying a G.726 covert stream, 19 otherwise."""
    g711 = pair.overt in (CodecId.G711_ULAW, CodecId.G711_ALAW)
    g726 = pair.covert.value.startswith("g726")
    return 12 if g711 and g726 else MAX_MFCC


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _stable_id(text: str) -> int:
    return zlib.crc32(text.encode())


# ---------------------------------------------------------------------------
# corpora


@dataclass(frozen=True)
class Utterance:
    speaker_id: str
    source_id: str
    signal: PcmSignal


@dataclass(frozen=True)
class SyntheticCorpus:
    """Parameters of an in-memory synthetic corpus (speaker-disjoint by construction)."""

    train_speakers: int = 10
    test_speakers: int = 5
    train_utterances: int = 6
    test_utterances: int = 10
    utterance_s: float = 10.0

    @property
    def label(self) -> str:
        return "synthetic"

    def utterances(self, split: str, seed: int) -> list[Utterance]:
        if split == "train":
            speakers, per = range(self.train_speakers), self.train_utterances
        else:
            speakers = range(self.train_speakers, self.train_speakers + self.test_speakers)
            per = self.test_utterances
        out = []
        for s in speakers:
            profile = SpeakerProfile.random(_derive_seed(seed, 1, s))
            for u in range(per):
                sig = synth_speech(self.utterance_s, _derive_seed(seed, 2, s, u), profile)
                sid = f"spk{s:03d}/utt{u:02d}"
                out.append(Utterance(f"spk{s:03d}", sid, PcmSignal(sig.samples, source_id=sid)))
        return out


def corpus_utterances(corpus, split: str, seed: int = 0) -> list[Utterance]:
    """Utterances of one split, sorted by source id."""
    if isinstance(corpus, SyntheticCorpus):
        utts = corpus.utterances(split, seed)
    else:
        utts = []
        for e in corpus.split(split):
            sig = read_wav(e.path)
            sid = f"{e.speaker_id}/{Path(e.path).stem}"
            utts.append(Utterance(e.speaker_id, sid, PcmSignal(sig.samples, sig.sample_rate, sid)))
    return sorted(utts, key=lambda u: u.source_id)


def _assert_disjoint(train: list[Utterance], test: list[Utterance]) -> None:
    overlap = {u.speaker_id for u in train} & {u.speaker_id for u in test}
    if overlap:
        raise ValueError(f"speakers in both train and test: {sorted(overlap)}")


def _concatenate_per_speaker(utts: list[Utterance]) -> list[Utterance]:
    by_spk: dict[str, list[Utterance]] = {}
    for u in utts:
        by_spk.setdefault(u.speaker_id, []).append(u)
    out = []
    for spk in sorted(by_spk):
        x = np.concatenate([u.signal.samples for u in by_spk[spk]])
        out.append(Utterance(spk, spk, PcmSignal(x, source_id=spk)))
    return out


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    pair: StegoConfig
    corpus: object = field(default_factory=SyntheticCorpus)
    test_duration_s: float = 7.0
    mfcc_count: int | None = None
    K: int = 16
    em: EmSettings = EmSettings()
    seed: int = 0
    concatenate: bool = False

    def __post_init__(self):
        if self.mfcc_count is None:
            object.__setattr__(self, "mfcc_count", default_mfcc_count(self.pair))
        if not 1 <= self.mfcc_count <= MAX_MFCC:
            raise ValueError(f"mfcc_count must be in 1..{MAX_MFCC}")
        if not isinstance(self.corpus, (SyntheticCorpus, CorpusManifest)):
            raise TypeError("corpus must be a SyntheticCorpus or CorpusManifest")

    @property
    def corpus_label(self) -> str:
        return self.corpus.label if isinstance(self.corpus, SyntheticCorpus) else "corpus"

    def mfcc(self, count: int | None = None) -> MfccConfig:
        return MfccConfig(num_coeffs=count or self.mfcc_count)

    def em_settings(self) -> EmSettings:
        # the experiment seed drives model initialisation too
        return replace(self.em, seed=self.seed)


@dataclass(frozen=True)
class AccuracyReport:
    pair: StegoConfig
    condition_set: str
    duration_s: float
    mfcc_count: int
    confusion: dict  # (condition label, verdict) -> count
    skipped: int = 0

    @property
    def trials(self) -> int:
        return sum(self.confusion.values())

    @property
    def correct(self) -> int:
        return (self.confusion.get((Condition.NORMAL.value, Verdict.NO_EVIDENCE.value), 0)
                + self.confusion.get((Condition.ABNORMAL.value, Verdict.TRANSTEG_DETECTED.value), 0))

    @property
    def accuracy(self) -> float:
        return 100.0 * self.correct / self.trials if self.trials else float("nan")


# ---------------------------------------------------------------------------
# rendering


def build_condition_audio(signal: PcmSignal, pair: StegoConfig, condition, seed: int = 0) -> PcmSignal:
    """Audio the W3 warden would decode under NORMAL or ABNORMAL transmission."""
    condition = Condition(condition)
    if len(signal) % FRAME_SAMPLES:
        raise ValueError(f"signal of {len(signal)} samples is not frame-aligned")
    if condition is Condition.NORMAL:
        out = decode_payloads(pair.overt, encode_signal(pair.overt, signal.samples))
        return PcmSignal(out, signal.sample_rate, signal.source_id)
    n_packets = len(signal) // FRAME_SAMPLES
    rng = np.random.default_rng([seed, _stable_id(signal.source_id)])
    steganogram = rng.bytes(stego_capacity(pair) * n_packets)
    (tap,) = run_scenario(Scenario.S4, pair, signal, steganogram, taps=(Location.W3,), seed=seed)
    return depacketize(tap.stream, source_id=signal.source_id)


class Experiment:
    """One configured experiment with cached renderings and features."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.train = corpus_utterances(cfg.corpus, "train", cfg.seed)
        self.test = corpus_utterances(cfg.corpus, "test", cfg.seed)
        _assert_disjoint(self.train, self.test)
        if cfg.concatenate:
            self.test = _concatenate_per_speaker(self.test)
        self._features: dict = {}
        self._test_audio: dict = {}

    def _render(self, utt: Utterance, condition: Condition) -> PcmSignal:
        return build_condition_audio(utt.signal.frame_aligned(), self.cfg.pair, condition, self.cfg.seed)

    def train_feature_list(self, condition: Condition) -> list[FeatureMatrix]:
        """19-coefficient MFCCs of every training utterance under ``condition``."""
        condition = Condition(condition)
        if condition not in self._features:
            if not self.train:
                raise EmptyCorpus("train split is empty")
            self._features[condition] = [
                extract_mfcc(self._render(u, condition), MfccConfig(num_coeffs=MAX_MFCC)) for u in self.train
            ]
        return self._features[condition]

    def train_features(self, condition: Condition) -> FeatureMatrix:
        return FeatureMatrix.stack(self.train_feature_list(condition))

    def train_models(self, mfcc_count: int | None = None) -> tuple[GmmModel, GmmModel]:
        n = mfcc_count or self.cfg.mfcc_count
        settings = self.cfg.em_settings()
        return tuple(train_em(self.train_features(c).head(n), settings, self.cfg.K)
                     for c in (Condition.NORMAL, Condition.ABNORMAL))

    def test_audio(self, utt: Utterance, condition: Condition) -> np.ndarray:
        key = (utt.source_id, condition)
        if key not in self._test_audio:
            self._test_audio[key] = self._render(utt, condition).samples
        return self._test_audio[key]

    def evaluate(self, models, duration_s: float | None = None, mfcc_count: int | None = None,
                 conditions=(Condition.NORMAL, Condition.ABNORMAL),
                 condition_set: str | None = None) -> AccuracyReport:
        """Classify every test utterance, trimmed to ``duration_s``, under each condition.

        ``conditions`` pairs a trial label with the rendering used: by default
        each label renders its own condition.  A mapping label -> rendering
        allows control experiments such as normal-vs-normal.
        """
        duration = self.cfg.test_duration_s if duration_s is None else duration_s
        n_coeffs = mfcc_count or self.cfg.mfcc_count
        render = dict(conditions) if isinstance(conditions, dict) else {c: c for c in conditions}
        n_samples = int(round(duration * 8000)) // FRAME_SAMPLES * FRAME_SAMPLES
        mfcc = MfccConfig(num_coeffs=n_coeffs)
        confusion: dict = {}
        skipped = 0
        for utt in self.test:
            if len(utt.signal) < n_samples:
                skipped += 1
                continue
            for label, cond in render.items():
                x = self.test_audio(utt, Condition(cond))[:n_samples]
                v = score_signal(x, models[0], models[1], mfcc)
                key = (Condition(label).value, v.verdict.value)
                confusion[key] = confusion.get(key, 0) + 1
        label = condition_set or f"{self.cfg.corpus_label}:normal-vs-abnormal"
        return AccuracyReport(self.cfg.pair, label, duration, n_coeffs, confusion, skipped)


# ---------------------------------------------------------------------------
# public protocol


def train_pair_models(cfg: ExperimentConfig) -> tuple[GmmModel, GmmModel]:
    return Experiment(cfg).train_models()


def evaluate_accuracy(cfg: ExperimentConfig, models) -> AccuracyReport:
    return Experiment(cfg).evaluate(models)


def run_accuracy(cfg: ExperimentConfig) -> AccuracyReport:
    """Train both models and evaluate them at the configured duration."""
    exp = Experiment(cfg)
    return exp.evaluate(exp.train_models())


def _check_durations(durations) -> None:
    lo, hi = DURATION_RANGE
    for d in durations:
        if not lo <= d <= hi:
            raise ValueError(f"duration {d} s outside [{lo}, {hi}]")


def sweep_duration(cfg: ExperimentConfig, durations) -> list[AccuracyReport]:
    """Same models, same test utterances, trimmed to each duration."""
    _check_durations(durations)
    exp = Experiment(cfg)
    models = exp.train_models()
    return [exp.evaluate(models, duration_s=d) for d in durations]


def sweep_mfcc(cfg: ExperimentConfig, counts) -> list[AccuracyReport]:
    """Models retrained for every MFCC count."""
    counts = list(counts)
    if any(not 1 <= c <= MAX_MFCC for c in counts):
        raise ValueError(f"MFCC counts must lie in 1..{MAX_MFCC}")
    exp = Experiment(cfg)
    return [exp.evaluate(exp.train_models(c), mfcc_count=c) for c in counts]


def best_mfcc_count(reports: list[AccuracyReport]) -> int:
    """MFCC count of the most accurate report (smallest count on ties)."""
    best = max(reports, key=lambda r: (r.accuracy, -r.mfcc_count))
    return best.mfcc_count


def chance_level(cfg: ExperimentConfig) -> AccuracyReport:
    """Normal-vs-normal control.

    Both models are trained on NORMAL audio, from two disjoint halves of the
    training speakers, and every test trial (whatever its label) carries
    NORMAL audio.  Without a label leak the accuracy sits at chance.
    """
    exp = Experiment(cfg)
    speakers = sorted({u.speaker_id for u in exp.train})
    if len(speakers) < 2:
        raise EmptyCorpus("chance-level control needs at least two training speakers")
    half = set(speakers[: len(speakers) // 2])
    feats = exp.train_feature_list(Condition.NORMAL)
    mats_a = [f.rows for u, f in zip(exp.train, feats) if u.speaker_id in half]
    mats_b = [f.rows for u, f in zip(exp.train, feats) if u.speaker_id not in half]
    settings = cfg.em_settings()
    n = cfg.mfcc_count
    models = tuple(train_em(np.vstack(m)[:, :n], settings, cfg.K) for m in (mats_a, mats_b))
    return exp.evaluate(models, conditions={Condition.NORMAL: Condition.NORMAL,
                                            Condition.ABNORMAL: Condition.NORMAL},
                        condition_set=f"{cfg.corpus_label}:normal-vs-normal")


# ---------------------------------------------------------------------------
# reporting and configuration files

TABLE_HEADER = "overt,covert,condition_set,duration_s,mfcc_count,trials,accuracy_percent"


def emit_table(reports) -> str:
    lines = [TABLE_HEADER]
    for r in reports:
        lines.append(f"{r.pair.overt.value},{r.pair.covert.value},{r.condition_set},"
                     f"{r.duration_s:.2f},{r.mfcc_count},{r.trials},{r.accuracy:.2f}")
    return "\n".join(lines) + "\n"


_BOOL = {"1": True, "true": True, "yes": True, "0": False, "false": False, "no": False}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def config_from_mapping(values: dict, seed: int | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig from string values (config file or CLI)."""
    v = dict(values)
    pair = StegoConfig(v.pop("overt", "g711u"), v.pop("covert", "g726-32"))
    corpus_dir = v.pop("corpus", "synthetic")
    syn_keys = {"train_speakers": int, "test_speakers": int, "train_utterances": int,
                "test_utterances": int, "utterance_s": float}
    syn = {k: t(v.pop(k)) for k, t in syn_keys.items() if k in v}
    if corpus_dir == "synthetic":
        corpus = SyntheticCorpus(**syn)
    else:
        from .audio import ingest_corpus

        corpus = ingest_corpus(corpus_dir, float(v.pop("train_fraction", 0.8)), int(v.get("seed", 0)))
        v.pop("train_fraction", None)
    em = EmSettings(
        max_iters=int(v.pop("max_iters", 100)),
        rel_tol=float(v.pop("rel_tol", 1e-5)),
        variance_floor_factor=float(v.pop("variance_floor_factor", 1e-3)),
    )
    file_seed = int(v.pop("seed", 0))
    cfg = ExperimentConfig(
        pair=pair,
        corpus=corpus,
        test_duration_s=float(v.pop("test_duration_s", 7.0)),
        mfcc_count=int(v.pop("mfcc_count")) if "mfcc_count" in v else None,
        K=int(v.pop("K", v.pop("k", 16))),
        em=em,
        seed=file_seed if seed is None else seed,
        concatenate=_BOOL[str(v.pop("concatenate", "false")).lower()],
    )
    if v:
        raise ValueError(f"unknown config keys: {sorted(v)}")
    return cfg
