import numpy as np
import pytest

from transteg.audio import PcmSignal, synth_speech
from transteg.codecs import DEFAULT_PT_MAP, CodecId, encode_signal
from transteg.errors import TapsMismatch, TooShort, UnalignedStreams, UnknownPayloadType
from transteg.features import MfccConfig
from transteg.gmm import GmmModel
from transteg.rtp import RtpHeader, RtpPacket, packetize
from transteg.stego import Coding, Location, StegoConfig, run_scenario
from transteg.warden import (
    WARDEN_CASES, Case, Method, Verdict, classify_case, compare_payloads, dispatch, score_signal,
    validity_scan, validity_test, vad_check, verdict_csv_row,
)

G726 = StegoConfig(CodecId.G711_ULAW, CodecId.G726_32)
LPC = StegoConfig(CodecId.G711_ULAW, CodecId.LPCVOC)
SPEECH = synth_speech(2.0, 11)


def taps(pair, scenario="S4", seed=0):
    rng = np.random.default_rng(seed)
    n = 100 * (160 if pair is G726 else 152) // 2
    return {t.location: t for t in run_scenario(scenario, pair, SPEECH, rng.bytes(n), seed=seed)}


def lpc_packet(payload, pt=100):
    return RtpPacket(RtpHeader(pt, 1, 160, 7), payload)


# expected (case, method) for every tap set, derived by hand from the coding at each location
TABLE = {
    Case.DWC1: (2, {Coding.OVERT, Coding.COVERT_HIDDEN}, Method.PAYLOAD_COMPARE),
    Case.DWC2: (2, {Coding.COVERT_HIDDEN}, Method.VALIDITY_TEST),
    Case.DWC3: (2, {Coding.OVERT, Coding.OVERT_RETRANSCODED}, Method.PAYLOAD_COMPARE),
    Case.SLWC1: (1, {Coding.OVERT}, None),
    Case.SLWC2: (1, {Coding.COVERT_HIDDEN}, Method.VALIDITY_TEST),
    Case.SLWC3: (1, {Coding.OVERT_RETRANSCODED}, Method.STATISTICAL),
}


def test_case_table_literal():
    assert set(WARDEN_CASES) == set(TABLE)
    for case, (n, codings, method) in TABLE.items():
        wc = WARDEN_CASES[case]
        assert (wc.taps, set(wc.codings), wc.method) == (n, codings, method)


@pytest.mark.parametrize("scenario,locs,case", [
    ("S1", ["W1"], Case.SLWC2), ("S1", ["W1", "W3"], Case.DWC2),
    ("S2", ["W3"], Case.SLWC3), ("S2", ["W1", "W3"], Case.DWC1), ("S2", ["W1", "W2"], Case.DWC2),
    ("S3", ["W1"], Case.SLWC1), ("S3", ["W1", "W2"], Case.DWC1), ("S3", ["W2", "W3"], Case.DWC2),
    ("S4", ["W1"], Case.SLWC1), ("S4", ["W2"], Case.SLWC2), ("S4", ["W3"], Case.SLWC3),
    ("S4", ["W1", "W2"], Case.DWC1), ("S4", ["W1", "W3"], Case.DWC3), ("S4", ["W2", "W3"], Case.DWC1),
])
def test_classify_case(scenario, locs, case):
    assert classify_case(scenario, locs) is case


def test_compare_symmetric_and_zero_on_identical():
    t = taps(G726)
    same = compare_payloads(t[Location.W1].stream, t[Location.W1].stream)
    assert same.verdict is Verdict.NO_EVIDENCE and same.score == 0.0
    ab = compare_payloads(t[Location.W1].stream, t[Location.W3].stream)
    ba = compare_payloads(t[Location.W3].stream, t[Location.W1].stream)
    assert ab == ba and ab.detected and 0 < ab.score <= 1


def test_compare_covert_vs_retranscoded():
    t = taps(G726)
    v = compare_payloads(t[Location.W2].stream, t[Location.W3].stream)
    assert v.detected and v.score == 1.0


def test_compare_unaligned():
    a = packetize(SPEECH, "g711u", seed=0)
    with pytest.raises(UnalignedStreams):
        compare_payloads(a, packetize(SPEECH, "g711u", seed=1))
    with pytest.raises(UnalignedStreams):
        compare_payloads(a, type(a)(a.packets[:-1], a.codec_pt_map))


def test_validity_lpcvoc_declared_with_g726_bytes():
    frames = encode_signal(CodecId.G726_32, SPEECH.samples)
    # an LPCVOC packet is 8 bytes; random G.726 bytes pass 2 sync bits with p = 1/4 per frame
    hits = [validity_test(lpc_packet(f[:8]), DEFAULT_PT_MAP).detected for f in frames]
    assert np.mean(hits) > 0.6
    stream = type(packetize(SPEECH, "lpcvoc"))(
        tuple(lpc_packet(f[:8]) for f in frames), dict(DEFAULT_PT_MAP))
    assert validity_scan(stream).detected


def test_validity_length_and_genuine():
    pkt = RtpPacket(RtpHeader(97, 1, 0, 1), bytes(79))
    assert validity_test(pkt, DEFAULT_PT_MAP).detected
    g711 = packetize(SPEECH, "g711u")
    assert validity_test(g711.packets[0], DEFAULT_PT_MAP).verdict is Verdict.INCONCLUSIVE
    with pytest.raises(UnknownPayloadType):
        validity_test(RtpPacket(RtpHeader(55, 1, 0, 1), b""), DEFAULT_PT_MAP)


@pytest.mark.parametrize("seed", range(5))
def test_validity_no_false_positive_on_genuine_lpcvoc(seed):
    stream = packetize(synth_speech(1.0, seed), "lpcvoc", seed=seed)
    assert all(not validity_test(p, stream.codec_pt_map).detected for p in stream)
    assert validity_scan(stream).verdict is Verdict.NO_EVIDENCE


def test_validity_scan_signature_for_lpcvoc_under_g711():
    t = taps(LPC)
    assert validity_scan(t[Location.W2].stream).detected
    assert validity_scan(t[Location.W1].stream).verdict is Verdict.INCONCLUSIVE


@pytest.mark.parametrize("seed", range(4))
def test_vad_genuine_speech(seed):
    assert vad_check(packetize(synth_speech(2.0, 100 + seed), "g711u")).verdict is Verdict.NO_EVIDENCE


def test_vad_on_stego_and_silence():
    assert vad_check(taps(G726)[Location.W2].stream).detected
    silent = packetize(PcmSignal(np.zeros(8000, np.int16)), "g711u")
    assert vad_check(silent).detected  # documented false positive


def test_statistical_tie_goes_to_no_evidence():
    m = GmmModel([1.0], [[0.0] * 19], [[1.0] * 19])
    for seed in range(5):
        v = score_signal(synth_speech(1.0, seed).samples, m, m, MfccConfig())
        assert v.verdict is Verdict.NO_EVIDENCE and v.score == 0.0 and v.method is Method.STATISTICAL


def test_statistical_disjoint_models(monkeypatch):
    from transteg import warden
    normal = GmmModel([1.0], [[0.0] * 3], [[1.0] * 3])
    abnormal = GmmModel([1.0], [[5.0] * 3], [[1.0] * 3])
    rng = np.random.default_rng(0)
    correct = 0
    for label, mean in (("n", 0.0), ("a", 5.0)):
        for _ in range(50):
            rows = rng.normal(mean, 1.0, (30, 3))
            monkeypatch.setattr(warden, "extract_mfcc", lambda s, c, rows=rows: rows)
            v = score_signal(np.zeros(4000), normal, abnormal, MfccConfig(num_coeffs=3))
            correct += v.detected == (label == "a")
    assert correct == 100


def test_statistical_too_short():
    m = GmmModel([1.0], [[0.0] * 19], [[1.0] * 19])
    with pytest.raises(TooShort):
        score_signal(np.zeros(2079), m, m, MfccConfig())


def test_dispatch_rules():
    t = taps(LPC)
    assert dispatch(Case.SLWC1, [t[Location.W1]]).verdict is Verdict.NO_EVIDENCE
    v = dispatch(Case.DWC2, [t[Location.W2], t[Location.W2]])
    assert v.detected and v.method is Method.VALIDITY_TEST
    with pytest.raises(TapsMismatch):
        dispatch(Case.DWC3, [t[Location.W1]])
    with pytest.raises(TapsMismatch):
        dispatch(Case.SLWC2, [t[Location.W1]])
    m = GmmModel([1.0], [[0.0] * 12], [[1.0] * 12])
    assert dispatch(Case.SLWC3, [t[Location.W3]], models=(m, m)).method is Method.STATISTICAL


def test_verdict_csv_row():
    t = taps(G726)
    row = verdict_csv_row(Case.DWC3, dispatch(Case.DWC3, [t[Location.W1], t[Location.W3]]))
    assert row.startswith("DWC3,payload-compare,transteg-detected,")
