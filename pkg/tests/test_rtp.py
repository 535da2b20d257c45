import numpy as np
import pytest
from hypothesis import given, strategies as st

from transteg.audio import PcmSignal, synth_speech
from transteg.codecs import CodecId
from transteg.errors import BadVersion, InconsistentStream, MalformedStreamFile, NotFrameAligned, PacketTooShort
from transteg.rtp import (
    RtpHeader, RtpPacket, RtpStream, depacketize, packetize, parse, read_stream, sequence_order,
    serialize, write_stream,
)

headers = st.builds(
    RtpHeader,
    payload_type=st.integers(0, 127),
    sequence_number=st.integers(0, 0xFFFF),
    timestamp=st.integers(0, 0xFFFFFFFF),
    ssrc=st.integers(0, 0xFFFFFFFF),
    marker=st.booleans(),
    padding=st.booleans(),
    extension=st.booleans(),
)


@given(headers, st.binary(max_size=300))
def test_serialize_round_trip(header, payload):
    pkt = RtpPacket(header, payload)
    raw = serialize(pkt)
    assert len(raw) == 12 + len(payload)
    assert parse(raw) == pkt


def test_minimal_packet_and_parse_errors():
    pkt = RtpPacket(RtpHeader(0, 1, 2, 3), b"")
    raw = serialize(pkt)
    assert len(raw) == 12 and raw[0] == 0x80
    with pytest.raises(BadVersion):
        parse(bytes([0x40]) + raw[1:])
    with pytest.raises(PacketTooShort):
        parse(raw[:11])


def test_packetize_seven_seconds():
    sig = synth_speech(7.0, 1)
    s = packetize(sig, CodecId.G711_ULAW, seed=5)
    assert len(s) == 350
    assert all(len(p.payload) == 160 for p in s)
    assert s.packets[0].header.marker and not any(p.header.marker for p in s.packets[1:])
    for a, b in zip(s.packets, s.packets[1:]):
        assert (b.header.sequence_number - a.header.sequence_number) % 65536 == 1
        assert (b.header.timestamp - a.header.timestamp) % 2**32 == 160
    again = packetize(sig, CodecId.G711_ULAW, seed=5)
    assert [p.header for p in s] == [p.header for p in again]
    assert s.packets[0].header != packetize(sig, CodecId.G711_ULAW, seed=6).packets[0].header
    out = depacketize(s)
    assert len(out) == 56000


def test_packetize_requires_alignment():
    with pytest.raises(NotFrameAligned):
        packetize(PcmSignal(np.zeros(161, np.int16)), CodecId.G711_ULAW)


def test_depacketize_ulaw_within_quantization_bound():
    sig = synth_speech(1.0, 2)
    out = depacketize(packetize(sig, CodecId.G711_ULAW)).samples.astype(int)
    x = sig.samples.astype(int)
    # largest mu-law half step plus truncation slack, scaled by magnitude
    assert np.all(np.abs(out - x) <= np.abs(x) / 16 + 8)


def test_empty_and_mixed_streams():
    with pytest.raises(InconsistentStream):
        depacketize(RtpStream(()))
    s = packetize(synth_speech(0.1, 0), CodecId.G711_ULAW)
    pkts = list(s.packets)
    pkts[1] = RtpPacket(RtpHeader(8, 0, 0, pkts[0].header.ssrc), pkts[1].payload)
    with pytest.raises(InconsistentStream):
        RtpStream(tuple(pkts)).validate()


def test_sequence_wraparound_order():
    s = packetize(synth_speech(0.2, 0), CodecId.G711_ULAW)
    base = 65533
    pkts = [RtpPacket(RtpHeader(0, (base + i) & 0xFFFF, i * 160, 1), p.payload) for i, p in enumerate(s)]
    shuffled = RtpStream(tuple(pkts[::-1]))
    assert [shuffled.packets[i].header.sequence_number for i in sequence_order(shuffled)] == \
        [(base + i) & 0xFFFF for i in range(len(pkts))]


def test_stream_file_round_trip(tmp_path):
    s = packetize(synth_speech(0.5, 3), CodecId.G726_32, seed=2)
    p = tmp_path / "s.rtps"
    write_stream(s, p)
    back = read_stream(p)
    assert back.packets == s.packets and back.codec is CodecId.G726_32
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(MalformedStreamFile):
        read_stream(p)
    p.write_bytes(b"nope")
    with pytest.raises(MalformedStreamFile):
        read_stream(p)
