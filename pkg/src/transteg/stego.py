"""The transcoding steganography channel.

Embedding decodes each overt-coded payload, re-encodes the voice with a
lower-rate covert codec, writes the covert frame at the start of the
payload and fills the freed tail with steganogram bytes.  RTP headers
(including the payload type) and payload sizes are left untouched.
Extraction reads the tails back and re-transcodes the covert voice to the
overt codec.

Codec state runs continuously over a call, not per packet.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .audio import PcmSignal
from .codecs import CodecId, codec_spec, decode_payloads, encode_signal
from .errors import CovertNotSmaller, SteganogramTooLarge, StreamCodecMismatch
from .rtp import RtpStream, packetize, sequence_order

PACKETS_PER_SECOND = 50


class Placement(str, enum.Enum):
    COVERT_FIRST_STEGO_TAIL = "covert-first"


@dataclass(frozen=True)
class StegoConfig:
    overt: CodecId
    covert: CodecId
    placement: Placement = Placement.COVERT_FIRST_STEGO_TAIL

    def __post_init__(self):
        object.__setattr__(self, "overt", CodecId(self.overt))
        object.__setattr__(self, "covert", CodecId(self.covert))
        object.__setattr__(self, "placement", Placement(self.placement))

    @property
    def label(self) -> str:
        return f"{self.overt.value}/{self.covert.value}"


@dataclass(frozen=True)
class StegoResult:
    stream: RtpStream
    bytes_embedded: int
    bandwidth_bps: int


def stego_capacity(cfg: StegoConfig) -> int:
    """Steganogram bytes carried per packet."""
    overt = codec_spec(cfg.overt).payload_bytes_per_frame
    covert = codec_spec(cfg.covert).payload_bytes_per_frame
    if covert >= overt:
        raise CovertNotSmaller(f"{cfg.covert} frames ({covert} B) do not fit under {cfg.overt} ({overt} B)")
    return overt - covert


def _check_overt(stream: RtpStream, cfg: StegoConfig) -> None:
    stream.validate()
    if stream.codec is not cfg.overt:
        raise StreamCodecMismatch(f"stream declares {stream.codec}, config expects {cfg.overt}")


def embed(stream: RtpStream, cfg: StegoConfig, steganogram: bytes) -> StegoResult:
    capacity = stego_capacity(cfg)
    _check_overt(stream, cfg)
    steganogram = bytes(steganogram)
    total = capacity * len(stream)
    if len(steganogram) > total:
        raise SteganogramTooLarge(f"{len(steganogram)} bytes, stream carries at most {total}")

    order = sequence_order(stream)
    voice = decode_payloads(cfg.overt, [stream.packets[i].payload for i in order])
    covert_frames = encode_signal(cfg.covert, voice)
    padded = steganogram.ljust(total, b"\x00")
    payloads = [b""] * len(stream)
    for k, (i, frame) in enumerate(zip(order, covert_frames)):
        payloads[i] = frame + padded[k * capacity:(k + 1) * capacity]
    out = stream.with_payloads(payloads)
    return StegoResult(out, len(steganogram), capacity * 8 * PACKETS_PER_SECOND)


def extract(stream: RtpStream, cfg: StegoConfig, expected_len: int) -> tuple[bytes, RtpStream]:
    """Recover the steganogram and the overt-coded (re-transcoded) stream."""
    capacity = stego_capacity(cfg)
    _check_overt(stream, cfg)
    if expected_len > capacity * len(stream):
        raise SteganogramTooLarge(f"{expected_len} bytes exceeds the stream's capacity")
    covert_size = codec_spec(cfg.covert).payload_bytes_per_frame
    ordered = [stream.packets[i].payload for i in sequence_order(stream)]
    hidden = b"".join(p[covert_size:] for p in ordered)[:expected_len]
    voice = decode_payloads(cfg.covert, [p[:covert_size] for p in ordered])
    payloads = [b""] * len(stream)
    for i, frame in zip(sequence_order(stream), encode_signal(cfg.overt, voice)):
        payloads[i] = frame
    restored = stream.with_payloads(payloads)
    return hidden, restored


# ---------------------------------------------------------------------------
# hidden-communication scenarios


class Scenario(str, enum.Enum):
    """Where embedding and extraction happen along the path sender -> receiver.

    S1: sender embeds, receiver extracts.  S2: sender embeds, an intermediate
    node extracts.  S3: an intermediate node embeds, receiver extracts.
    S4: intermediate nodes both embed and extract.
    """

    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"


class Location(str, enum.Enum):
    """Warden taps: W1 near the sender, W2 mid-path, W3 near the receiver."""

    W1 = "W1"
    W2 = "W2"
    W3 = "W3"


class Coding(str, enum.Enum):
    OVERT = "overt"
    COVERT_HIDDEN = "covert-hidden"
    OVERT_RETRANSCODED = "overt-retranscoded"


SCENARIO_CODING = {
    Scenario.S1: {Location.W1: Coding.COVERT_HIDDEN, Location.W2: Coding.COVERT_HIDDEN,
                  Location.W3: Coding.COVERT_HIDDEN},
    Scenario.S2: {Location.W1: Coding.COVERT_HIDDEN, Location.W2: Coding.COVERT_HIDDEN,
                  Location.W3: Coding.OVERT_RETRANSCODED},
    Scenario.S3: {Location.W1: Coding.OVERT, Location.W2: Coding.COVERT_HIDDEN,
                  Location.W3: Coding.COVERT_HIDDEN},
    Scenario.S4: {Location.W1: Coding.OVERT, Location.W2: Coding.COVERT_HIDDEN,
                  Location.W3: Coding.OVERT_RETRANSCODED},
}


@dataclass(frozen=True)
class ScenarioTap:
    location: Location
    stream: RtpStream
    coding: Coding


def run_scenario(scenario, cfg: StegoConfig, signal: PcmSignal, steganogram: bytes,
                 taps=(Location.W1, Location.W2, Location.W3), seed: int = 0) -> list[ScenarioTap]:
    """Simulate one call under a scenario and return what each tap observes."""
    scenario = Scenario(scenario)
    taps = sorted({Location(t) for t in taps}, key=lambda t: t.value)
    overt = packetize(signal.frame_aligned(), cfg.overt, seed=seed)
    hidden = embed(overt, cfg, steganogram).stream
    _, restored = extract(hidden, cfg, len(steganogram))
    streams = {Coding.OVERT: overt, Coding.COVERT_HIDDEN: hidden, Coding.OVERT_RETRANSCODED: restored}
    coding = SCENARIO_CODING[scenario]
    return [ScenarioTap(t, streams[coding[t]], coding[t]) for t in taps]
