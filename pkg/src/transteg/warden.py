"""Warden-side detectors and the case dispatcher.

Four methods are available: payload comparison between two taps, a codec
validity test on payload structure, voice activity detection on the stream
decoded under its declared codec, and the MFCC+GMM statistical detector for
the single-tap re-transcoded case.  Detectors only return verdicts and
scores; decoded audio never leaves this module.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .codecs import FRAME_SAMPLES, CodecId, codec_spec, decode_payloads
from .codecs.lpcvoc import sync_ok
from .errors import TapsMismatch, TooShort, UnalignedStreams, UnknownPayloadType
from .features import MfccConfig, extract_mfcc
from .gmm import GmmModel, avg_log_likelihood
from .rtp import RtpPacket, RtpStream, depacketize, sequence_order
from .stego import SCENARIO_CODING, Coding, Location, Scenario, ScenarioTap

MIN_STATISTICAL_SECONDS = 0.26

# VAD calibration constants, fixed from synthetic speech versus TranSteg
# streams decoded as G.711 (see demos/vad_calibration.py)
VAD_MIN_DBFS = -55.0
VAD_MAX_DBFS = -6.0
VAD_MAX_FLATNESS = 0.45
VAD_MAX_ZCR = 0.9
VAD_SPEECH_RATIO = 0.4

# a structure-free overt stream whose every payload opens with LPCVOC sync
# bits is treated as carrying covert LPCVOC frames
SIGNATURE_MIN_PACKETS = 16


class Method(str, enum.Enum):
    PAYLOAD_COMPARE = "payload-compare"
    VALIDITY_TEST = "validity-test"
    VAD_CHECK = "vad-check"
    STATISTICAL = "statistical"


class Verdict(str, enum.Enum):
    TRANSTEG_DETECTED = "transteg-detected"
    NO_EVIDENCE = "no-evidence"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DetectionVerdict:
    method: Method
    verdict: Verdict
    score: float = 0.0
    detail: str = ""

    @property
    def detected(self) -> bool:
        return self.verdict is Verdict.TRANSTEG_DETECTED


class Case(str, enum.Enum):
    DWC1 = "DWC1"
    DWC2 = "DWC2"
    DWC3 = "DWC3"
    SLWC1 = "SLWC1"
    SLWC2 = "SLWC2"
    SLWC3 = "SLWC3"


@dataclass(frozen=True)
class WardenCase:
    case: Case
    taps: int
    codings: frozenset
    method: Method | None
    description: str


# one row per warden case: tap count, codings seen at the taps, method
WARDEN_CASES = {
    Case.DWC1: WardenCase(Case.DWC1, 2, frozenset({Coding.OVERT, Coding.COVERT_HIDDEN}),
                          Method.PAYLOAD_COMPARE, "overt vs covert taps"),
    Case.DWC2: WardenCase(Case.DWC2, 2, frozenset({Coding.COVERT_HIDDEN}),
                          Method.VALIDITY_TEST, "covert at both taps"),
    Case.DWC3: WardenCase(Case.DWC3, 2, frozenset({Coding.OVERT, Coding.OVERT_RETRANSCODED}),
                          Method.PAYLOAD_COMPARE, "overt at transmitter and re-transcoded"),
    Case.SLWC1: WardenCase(Case.SLWC1, 1, frozenset({Coding.OVERT}),
                           None, "overt codec at transmitter"),
    Case.SLWC2: WardenCase(Case.SLWC2, 1, frozenset({Coding.COVERT_HIDDEN}),
                           Method.VALIDITY_TEST, "covert codec"),
    Case.SLWC3: WardenCase(Case.SLWC3, 1, frozenset({Coding.OVERT_RETRANSCODED}),
                           Method.STATISTICAL, "overt codec, re-transcoded"),
}

# covert vs re-transcoded taps (e.g. S2 W2&W3) also differ by transcoding
_EXTRA_PAIRS = {frozenset({Coding.COVERT_HIDDEN, Coding.OVERT_RETRANSCODED}): Case.DWC1}


def classify_case(scenario, locations) -> Case:
    """Warden case for taps at ``locations`` under ``scenario``."""
    coding = SCENARIO_CODING[Scenario(scenario)]
    locs = sorted({Location(loc) for loc in locations}, key=lambda l: l.value)
    seen = frozenset(coding[loc] for loc in locs)
    if len(locs) not in (1, 2):
        raise TapsMismatch(f"a warden case covers one or two taps, got {len(locs)}")
    if seen in _EXTRA_PAIRS and len(locs) == 2:
        return _EXTRA_PAIRS[seen]
    for wc in WARDEN_CASES.values():
        if wc.taps == len(locs) and wc.codings == seen:
            return wc.case
    raise TapsMismatch(f"no warden case for {scenario} at {[l.value for l in locs]}")


# ---------------------------------------------------------------------------
# payload comparison


def compare_payloads(a: RtpStream, b: RtpStream) -> DetectionVerdict:
    if len(a) != len(b):
        raise UnalignedStreams(f"stream lengths differ: {len(a)} vs {len(b)}")
    differing = 0
    for i, j in zip(sequence_order(a), sequence_order(b)):
        ha, hb = a.packets[i].header, b.packets[j].header
        if (ha.sequence_number, ha.timestamp, ha.payload_type) != (hb.sequence_number, hb.timestamp, hb.payload_type):
            raise UnalignedStreams(f"packets {i}/{j} carry different headers")
        differing += a.packets[i].payload != b.packets[j].payload
    score = differing / len(a) if len(a) else 0.0
    if differing:
        return DetectionVerdict(Method.PAYLOAD_COMPARE, Verdict.TRANSTEG_DETECTED, score,
                                f"{differing}/{len(a)} payloads differ under identical headers")
    return DetectionVerdict(Method.PAYLOAD_COMPARE, Verdict.NO_EVIDENCE, 0.0, "payloads identical")


# ---------------------------------------------------------------------------
# codec validity


def _declared(pt: int, pt_map: dict) -> CodecId:
    if pt not in pt_map:
        raise UnknownPayloadType(f"payload type {pt} not in the codec map")
    return CodecId(pt_map[pt])


def validity_test(packet: RtpPacket, pt_map: dict) -> DetectionVerdict:
    """Structural check of one payload against its declared codec."""
    codec = _declared(packet.header.payload_type, pt_map)
    expected = codec_spec(codec).payload_bytes_per_frame
    if len(packet.payload) != expected:
        return DetectionVerdict(Method.VALIDITY_TEST, Verdict.TRANSTEG_DETECTED, 1.0,
                                f"{codec} payload of {len(packet.payload)} bytes, expected {expected}")
    if codec is CodecId.LPCVOC:
        frames = [packet.payload[i:i + 8] for i in range(0, expected, 8)]
        bad = sum(not sync_ok(f) for f in frames)
        if bad:
            return DetectionVerdict(Method.VALIDITY_TEST, Verdict.TRANSTEG_DETECTED, bad / len(frames),
                                    f"{bad} LPCVOC frames with invalid sync bits")
        return DetectionVerdict(Method.VALIDITY_TEST, Verdict.NO_EVIDENCE, 0.0, "LPCVOC structure valid")
    return DetectionVerdict(Method.VALIDITY_TEST, Verdict.INCONCLUSIVE, 0.0,
                            f"{codec} has no checkable structure beyond length")


def validity_scan(stream: RtpStream, pt_map: dict | None = None) -> DetectionVerdict:
    """Stream-level validity test.

    Any per-packet violation is conclusive.  For structure-free declared
    codecs the stream is additionally searched for a covert-codec signature:
    LPCVOC sync bits at the start of every payload.
    """
    pt_map = stream.codec_pt_map if pt_map is None else pt_map
    verdicts = [validity_test(p, pt_map) for p in stream.packets]
    for v in verdicts:
        if v.detected:
            return v
    if verdicts and all(v.verdict is Verdict.NO_EVIDENCE for v in verdicts):
        return DetectionVerdict(Method.VALIDITY_TEST, Verdict.NO_EVIDENCE, 0.0, "all frames valid")
    n = len(stream)
    signed = sum(len(p.payload) > 0 and sync_ok(p.payload) for p in stream.packets)
    if n >= SIGNATURE_MIN_PACKETS and signed == n:
        return DetectionVerdict(Method.VALIDITY_TEST, Verdict.TRANSTEG_DETECTED, 1.0,
                                "every payload opens with LPCVOC sync bits")
    return DetectionVerdict(Method.VALIDITY_TEST, Verdict.INCONCLUSIVE, signed / n if n else 0.0,
                            "no structural evidence")


# ---------------------------------------------------------------------------
# voice activity


def vad_frame_flags(samples: np.ndarray) -> np.ndarray:
    """Speech-like flag per 20 ms frame from energy, zero-crossing rate and spectral flatness."""
    n = len(samples) // FRAME_SAMPLES
    f = np.asarray(samples[:n * FRAME_SAMPLES], dtype=np.float64).reshape(n, FRAME_SAMPLES)
    level = 10 * np.log10(np.mean(f * f, axis=1) / 32768.0**2 + 1e-12)
    sign = np.signbit(f)
    zcr = np.mean(sign[:, 1:] != sign[:, :-1], axis=1)
    power = np.abs(np.fft.rfft(f * np.hamming(FRAME_SAMPLES), 256, axis=1)) ** 2 + 1e-10
    flatness = np.exp(np.mean(np.log(power), axis=1)) / np.mean(power, axis=1)
    return ((level > VAD_MIN_DBFS) & (level < VAD_MAX_DBFS)
            & (flatness < VAD_MAX_FLATNESS) & (zcr < VAD_MAX_ZCR))


def vad_check(stream: RtpStream, pt_map: dict | None = None) -> DetectionVerdict:
    pt_map = stream.codec_pt_map if pt_map is None else pt_map
    codec = _declared(stream.payload_type, pt_map)
    payloads = [stream.packets[i].payload for i in sequence_order(stream)]
    samples = decode_payloads(codec, payloads)
    ratio = float(np.mean(vad_frame_flags(samples))) if len(samples) >= FRAME_SAMPLES else 0.0
    if ratio >= VAD_SPEECH_RATIO:
        return DetectionVerdict(Method.VAD_CHECK, Verdict.NO_EVIDENCE, ratio,
                                f"speech-like in {ratio:.0%} of frames under {codec}")
    return DetectionVerdict(Method.VAD_CHECK, Verdict.TRANSTEG_DETECTED, ratio,
                            f"only {ratio:.0%} speech-like frames under {codec}")


# ---------------------------------------------------------------------------
# statistical detector


def score_signal(samples, normal: GmmModel, abnormal: GmmModel, cfg: MfccConfig) -> DetectionVerdict:
    """MFCC+GMM decision on decoded overt audio; ties go to NO_EVIDENCE."""
    if len(samples) < MIN_STATISTICAL_SECONDS * 8000:
        raise TooShort(f"{len(samples) / 8000:.3f} s of audio, need {MIN_STATISTICAL_SECONDS} s")
    feats = extract_mfcc(samples, cfg)
    score = avg_log_likelihood(normal, feats) - avg_log_likelihood(abnormal, feats)
    verdict = Verdict.NO_EVIDENCE if score >= 0 else Verdict.TRANSTEG_DETECTED
    return DetectionVerdict(Method.STATISTICAL, verdict, score, f"{len(feats)} frames")


def statistical_detect(stream: RtpStream, normal: GmmModel, abnormal: GmmModel,
                       cfg: MfccConfig) -> DetectionVerdict:
    return score_signal(depacketize(stream).samples, normal, abnormal, cfg)


# ---------------------------------------------------------------------------
# dispatcher


def _check_taps(case: Case, taps: list[ScenarioTap]) -> None:
    spec = WARDEN_CASES[case]
    seen = frozenset(t.coding for t in taps)
    ok = len(taps) == spec.taps and (seen == spec.codings or (case is Case.DWC1 and seen in _EXTRA_PAIRS))
    if not ok:
        raise TapsMismatch(f"{case.value} needs {spec.taps} tap(s) seeing {sorted(c.value for c in spec.codings)}, "
                           f"got {[t.coding.value for t in taps]}")


def dispatch(case, taps, models: tuple | None = None, pt_map: dict | None = None,
             mfcc: MfccConfig | None = None) -> DetectionVerdict:
    """Run the detection method that applies to ``case`` on the given taps."""
    case = Case(case)
    taps = list(taps)
    _check_taps(case, taps)
    if case in (Case.DWC1, Case.DWC3):
        return compare_payloads(taps[0].stream, taps[1].stream)
    if case is Case.SLWC1:
        return DetectionVerdict(Method.PAYLOAD_COMPARE, Verdict.NO_EVIDENCE, 0.0,
                                "only untouched overt traffic is visible: detection impossible")
    if case in (Case.DWC2, Case.SLWC2):
        last = None
        for method in (validity_scan, vad_check):
            for tap in taps:
                last = method(tap.stream, pt_map)
                if last.verdict is not Verdict.INCONCLUSIVE:
                    return last
        return last
    if models is None:
        raise TapsMismatch("SLWC3 needs (normal, abnormal) models")
    normal, abnormal = models
    cfg = mfcc or MfccConfig(num_coeffs=normal.dim)
    return statistical_detect(taps[0].stream, normal, abnormal, cfg)


VERDICT_CSV_HEADER = "case,method,verdict,score,detail"


def verdict_csv_row(case, v: DetectionVerdict) -> str:
    detail = v.detail.replace('"', "'")
    return f'{Case(case).value},{v.method.value},{v.verdict.value},{v.score:.6f},"{detail}"'


def all_tap_sets():
    """Every single tap and tap pair, for exhaustive case enumeration."""
    locs = list(Location)
    return [(loc,) for loc in locs] + list(combinations(locs, 2))
