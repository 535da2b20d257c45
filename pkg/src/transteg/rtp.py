"""RFC 3550 RTP packets, bit-exact serialization and 20 ms packetization.

Stream files (``.rtps``) hold a packet sequence: the magic ``RTPS1``
followed, per packet, by a 2-byte big-endian length and the serialized
packet.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .audio import PcmSignal
from .codecs import DEFAULT_PT_MAP, FRAME_SAMPLES, CodecId, codec_spec, decode_payloads, encode_signal
from .errors import BadVersion, InconsistentStream, MalformedStreamFile, NotFrameAligned, PacketTooShort

HEADER_SIZE = 12
TIMESTAMP_STRIDE = FRAME_SAMPLES
STREAM_MAGIC = b"RTPS1"
_HEADER = struct.Struct("!BBHII")


@dataclass(frozen=True)
class RtpHeader:
    payload_type: int
    sequence_number: int
    timestamp: int
    ssrc: int
    marker: bool = False
    padding: bool = False
    extension: bool = False
    csrc_count: int = 0
    version: int = 2

    def pack(self) -> bytes:
        b0 = (self.version << 6) | (self.padding << 5) | (self.extension << 4) | self.csrc_count
        b1 = (self.marker << 7) | (self.payload_type & 0x7F)
        return _HEADER.pack(b0, b1, self.sequence_number & 0xFFFF,
                            self.timestamp & 0xFFFFFFFF, self.ssrc & 0xFFFFFFFF)


@dataclass(frozen=True)
class RtpPacket:
    header: RtpHeader
    payload: bytes

    def with_payload(self, payload: bytes) -> "RtpPacket":
        return replace(self, payload=bytes(payload))


@dataclass(frozen=True)
class RtpStream:
    packets: tuple[RtpPacket, ...]
    codec_pt_map: dict = field(default_factory=lambda: dict(DEFAULT_PT_MAP))

    def __len__(self):
        return len(self.packets)

    def __iter__(self):
        return iter(self.packets)

    @property
    def payload_type(self) -> int:
        pts = {p.header.payload_type for p in self.packets}
        if len(pts) != 1:
            raise InconsistentStream(f"stream carries payload types {sorted(pts)}")
        return pts.pop()

    @property
    def codec(self) -> CodecId:
        pt = self.payload_type
        if pt not in self.codec_pt_map:
            raise InconsistentStream(f"payload type {pt} not in the stream's codec map")
        return CodecId(self.codec_pt_map[pt])

    def with_payloads(self, payloads) -> "RtpStream":
        pkts = tuple(p.with_payload(b) for p, b in zip(self.packets, payloads, strict=True))
        return RtpStream(pkts, dict(self.codec_pt_map))

    def validate(self) -> None:
        if not self.packets:
            raise InconsistentStream("empty stream")
        if len({p.header.ssrc for p in self.packets}) != 1:
            raise InconsistentStream("packets from more than one SSRC")
        size = codec_spec(self.codec).payload_bytes_per_frame
        bad = [i for i, p in enumerate(self.packets) if len(p.payload) != size]
        if bad:
            raise InconsistentStream(f"packet {bad[0]} payload size does not match {self.codec}")


def serialize(packet: RtpPacket) -> bytes:
    return packet.header.pack() + packet.payload


def parse(data: bytes) -> RtpPacket:
    if len(data) < HEADER_SIZE:
        raise PacketTooShort(f"{len(data)} bytes, RTP header needs {HEADER_SIZE}")
    b0, b1, seq, ts, ssrc = _HEADER.unpack_from(data)
    version = b0 >> 6
    if version != 2:
        raise BadVersion(f"RTP version {version}")
    header = RtpHeader(
        payload_type=b1 & 0x7F,
        sequence_number=seq,
        timestamp=ts,
        ssrc=ssrc,
        marker=bool(b1 >> 7),
        padding=bool(b0 & 0x20),
        extension=bool(b0 & 0x10),
        csrc_count=b0 & 0x0F,
        version=version,
    )
    return RtpPacket(header, bytes(data[HEADER_SIZE:]))


def packetize(signal: PcmSignal, codec, pt: int | None = None, ssrc: int = 0x5EC2E7,
              seed: int = 0) -> RtpStream:
    """Encode a frame-aligned signal into one RTP packet per 20 ms frame.

    Initial sequence number and timestamp are drawn from ``seed``.
    """
    codec = CodecId(codec)
    if len(signal) % FRAME_SAMPLES:
        raise NotFrameAligned(f"{len(signal)} samples; trim to a multiple of {FRAME_SAMPLES}")
    pt_map = dict(DEFAULT_PT_MAP)
    if pt is None:
        pt = next(k for k, v in pt_map.items() if v is codec)
    pt_map[pt] = codec
    rng = np.random.default_rng([seed, 0x27F])
    seq0 = int(rng.integers(0, 1 << 16))
    ts0 = int(rng.integers(0, 1 << 32))
    packets = []
    for i, payload in enumerate(encode_signal(codec, signal.samples)):
        header = RtpHeader(
            payload_type=pt,
            sequence_number=(seq0 + i) & 0xFFFF,
            timestamp=(ts0 + i * TIMESTAMP_STRIDE) & 0xFFFFFFFF,
            ssrc=ssrc,
            marker=(i == 0),
        )
        packets.append(RtpPacket(header, payload))
    return RtpStream(tuple(packets), pt_map)


def sequence_order(stream: RtpStream) -> list[int]:
    """Packet indices sorted by sequence number (wrap-around aware).

    Offsets are taken as signed 16-bit distances from the first stored
    packet, so any order works for streams shorter than 2**15 packets.
    """
    if not stream.packets:
        return []
    seq0 = stream.packets[0].header.sequence_number

    def offset(i):
        d = (stream.packets[i].header.sequence_number - seq0) & 0xFFFF
        return d - 0x10000 if d >= 0x8000 else d

    return sorted(range(len(stream.packets)), key=offset)


def depacketize(stream: RtpStream, source_id: str = "") -> PcmSignal:
    """Decode a stream under its declared codec, fresh state, in sequence order."""
    stream.validate()
    order = sequence_order(stream)
    samples = decode_payloads(stream.codec, [stream.packets[i].payload for i in order])
    return PcmSignal(samples, source_id=source_id)


def write_stream(stream: RtpStream, path) -> None:
    chunks = [STREAM_MAGIC]
    for p in stream.packets:
        raw = serialize(p)
        chunks.append(struct.pack("!H", len(raw)))
        chunks.append(raw)
    Path(path).write_bytes(b"".join(chunks))


def read_stream(path, pt_map: dict | None = None) -> RtpStream:
    data = Path(path).read_bytes()
    if not data.startswith(STREAM_MAGIC):
        raise MalformedStreamFile(f"{path}: missing {STREAM_MAGIC!r} magic")
    pos = len(STREAM_MAGIC)
    packets = []
    while pos < len(data):
        if pos + 2 > len(data):
            raise MalformedStreamFile(f"{path}: truncated length field at byte {pos}")
        (n,) = struct.unpack_from("!H", data, pos)
        pos += 2
        if pos + n > len(data):
            raise MalformedStreamFile(f"{path}: truncated packet at byte {pos}")
        packets.append(parse(data[pos:pos + n]))
        pos += n
    return RtpStream(tuple(packets), dict(pt_map or DEFAULT_PT_MAP))
