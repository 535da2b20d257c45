import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from transteg.audio import synth_speech
from transteg.codecs import CodecId
from transteg.errors import CovertNotSmaller, SteganogramTooLarge, StreamCodecMismatch
from transteg.rtp import packetize, serialize
from transteg.stego import (
    Coding, Location, Scenario, StegoConfig, embed, extract, run_scenario, stego_capacity,
)

G726 = StegoConfig(CodecId.G711_ULAW, CodecId.G726_32)
LPC = StegoConfig(CodecId.G711_ULAW, CodecId.LPCVOC)
SIGNAL = synth_speech(1.0, 7)
STREAMS = {CodecId.G711_ULAW: packetize(SIGNAL, CodecId.G711_ULAW, seed=1)}


def test_capacities():
    assert stego_capacity(G726) == 80
    assert stego_capacity(LPC) == 152
    assert stego_capacity(StegoConfig("g711a", "g726-16")) == 120
    with pytest.raises(CovertNotSmaller):
        stego_capacity(StegoConfig("g726-32", "g711u"))


def test_capacity_formula_all_pairs():
    from transteg.codecs import codec_spec
    for overt in CodecId:
        for covert in CodecId:
            o, c = codec_spec(overt).payload_bytes_per_frame, codec_spec(covert).payload_bytes_per_frame
            if c < o:
                assert stego_capacity(StegoConfig(overt, covert)) == o - c


def test_total_capacity_seven_seconds():
    s = packetize(synth_speech(7.0, 0), CodecId.G711_ULAW)
    assert stego_capacity(G726) * len(s) == 28000
    embed(s, G726, bytes(28000))
    with pytest.raises(SteganogramTooLarge):
        embed(s, G726, bytes(28001))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([G726, LPC]), st.data())
def test_round_trip_and_preservation(cfg, data):
    s = STREAMS[CodecId.G711_ULAW]
    cap = stego_capacity(cfg) * len(s)
    msg = data.draw(st.binary(max_size=cap))
    res = embed(s, cfg, msg)
    assert res.bytes_embedded == len(msg)
    assert res.bandwidth_bps == stego_capacity(cfg) * 8 * 50
    hidden, restored = extract(res.stream, cfg, len(msg))
    assert hidden == msg
    for a, b, c in zip(s, res.stream, restored):
        assert serialize(a)[:12] == serialize(b)[:12] == serialize(c)[:12]
        assert len(a.payload) == len(b.payload) == len(c.payload) == 160


def test_empty_steganogram_zero_tails():
    res = embed(STREAMS[CodecId.G711_ULAW], G726, b"")
    assert all(p.payload[80:] == bytes(80) for p in res.stream)
    res.stream.validate()


def test_restored_stream_differs_from_original():
    s = STREAMS[CodecId.G711_ULAW]
    _, restored = extract(embed(s, G726, b"x").stream, G726, 1)
    assert any(a.payload != b.payload for a, b in zip(s, restored))


def test_codec_mismatch():
    s = packetize(SIGNAL, CodecId.G711_ALAW)
    with pytest.raises(StreamCodecMismatch):
        embed(s, G726, b"")


def test_scenario_codings():
    msg = b"hidden"
    s4 = {t.location: t for t in run_scenario("S4", G726, SIGNAL, msg)}
    assert s4[Location.W1].coding is Coding.OVERT
    assert s4[Location.W2].coding is Coding.COVERT_HIDDEN
    assert s4[Location.W3].coding is Coding.OVERT_RETRANSCODED
    assert all(t.coding is Coding.COVERT_HIDDEN for t in run_scenario(Scenario.S1, G726, SIGNAL, msg))
    s2 = {t.location: t.coding for t in run_scenario("S2", G726, SIGNAL, msg, taps=["W1", "W3"])}
    assert s2 == {Location.W1: Coding.COVERT_HIDDEN, Location.W3: Coding.OVERT_RETRANSCODED}
    only = run_scenario("S4", G726, SIGNAL, msg, taps={Location.W1, Location.W3})
    assert [t.location for t in only] == [Location.W1, Location.W3]
    # the W2 tap of S4 carries the steganogram
    assert extract(s4[Location.W2].stream, G726, len(msg))[0] == msg
