"""Uniform codec contract over G.711, G.726 and the LPCVOC vocoder.

Every codec works on 20 ms frames of 160 samples and emits a fixed number
of payload bytes per frame.  ``encode``/``decode`` follow a value-passing
style: the state argument is not modified, the advanced state is returned.
For whole signals, ``encode_signal``/``decode_payloads`` run from the reset
state in one pass.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import WrongFrameLength, WrongPayloadLength
from . import g711, g726, lpcvoc

FRAME_SAMPLES = 160
FRAME_MS = 20


class CodecId(str, enum.Enum):
    G711_ULAW = "g711u"
    G711_ALAW = "g711a"
    G726_40 = "g726-40"
    G726_32 = "g726-32"
    G726_24 = "g726-24"
    G726_16 = "g726-16"
    LPCVOC = "lpcvoc"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CodecSpec:
    id: CodecId
    frame_ms: int
    payload_bytes_per_frame: int
    bitrate: int
    has_structural_fields: bool


def _spec(cid, bitrate, structural=False):
    return CodecSpec(cid, FRAME_MS, bitrate * FRAME_MS // 8000, bitrate, structural)


_SPECS = {
    CodecId.G711_ULAW: _spec(CodecId.G711_ULAW, 64000),
    CodecId.G711_ALAW: _spec(CodecId.G711_ALAW, 64000),
    CodecId.G726_40: _spec(CodecId.G726_40, 40000),
    CodecId.G726_32: _spec(CodecId.G726_32, 32000),
    CodecId.G726_24: _spec(CodecId.G726_24, 24000),
    CodecId.G726_16: _spec(CodecId.G726_16, 16000),
    CodecId.LPCVOC: _spec(CodecId.LPCVOC, 3200, structural=True),
}

_G726_BITS = {CodecId.G726_40: 5, CodecId.G726_32: 4, CodecId.G726_24: 3, CodecId.G726_16: 2}

# static/dynamic RTP payload-type assignment used throughout the toolkit
DEFAULT_PT_MAP = {
    0: CodecId.G711_ULAW,
    8: CodecId.G711_ALAW,
    96: CodecId.G726_40,
    97: CodecId.G726_32,
    98: CodecId.G726_24,
    99: CodecId.G726_16,
    100: CodecId.LPCVOC,
}
DEFAULT_PT = {cid: pt for pt, cid in DEFAULT_PT_MAP.items()}


def codec_spec(codec) -> CodecSpec:
    return _SPECS[CodecId(codec)]


def new_state(codec):
    """Reset state: G.726 registers at their standard initial values, else None."""
    codec = CodecId(codec)
    if codec in _G726_BITS:
        return g726.initial_state()
    return None


def _check_frame(pcm) -> np.ndarray:
    pcm = np.asarray(pcm)
    if pcm.shape != (FRAME_SAMPLES,):
        raise WrongFrameLength(f"expected {FRAME_SAMPLES} samples, got {pcm.shape}")
    return pcm


def encode(codec, state, pcm) -> tuple[bytes, object]:
    """Encode one 160-sample frame; returns (payload, advanced state)."""
    codec = CodecId(codec)
    pcm = _check_frame(pcm)
    if codec is CodecId.G711_ULAW:
        return g711.ulaw_encode(pcm).tobytes(), state
    if codec is CodecId.G711_ALAW:
        return g711.alaw_encode(pcm).tobytes(), state
    if codec is CodecId.LPCVOC:
        return lpcvoc.encode_frame(pcm), state
    bits = _G726_BITS[codec]
    st = (g726.initial_state() if state is None else state).copy()
    codes = g726.encode_codes(pcm, st, bits)
    return g726.pack_codes(codes, bits), st


def decode(codec, state, payload: bytes) -> tuple[np.ndarray, object]:
    """Decode one frame payload; returns (160 samples, advanced state)."""
    codec = CodecId(codec)
    payload = bytes(payload)
    expected = _SPECS[codec].payload_bytes_per_frame
    if len(payload) != expected:
        raise WrongPayloadLength(f"{codec}: expected {expected} bytes, got {len(payload)}")
    if codec is CodecId.G711_ULAW:
        return g711.ulaw_decode(payload), state
    if codec is CodecId.G711_ALAW:
        return g711.alaw_decode(payload), state
    if codec is CodecId.LPCVOC:
        return lpcvoc.decode_frame(payload), state
    bits = _G726_BITS[codec]
    st = (g726.initial_state() if state is None else state).copy()
    return g726.decode_codes(g726.unpack_codes(payload, bits), st, bits), st


def encode_signal(codec, samples) -> list[bytes]:
    """Encode a frame-aligned signal from reset state, one payload per frame."""
    codec = CodecId(codec)
    x = np.asarray(samples)
    if x.shape[0] % FRAME_SAMPLES:
        raise WrongFrameLength(f"{x.shape[0]} samples is not a multiple of {FRAME_SAMPLES}")
    n = x.shape[0] // FRAME_SAMPLES
    if codec is CodecId.G711_ULAW:
        return [bytes(f) for f in g711.ulaw_encode(x).reshape(n, FRAME_SAMPLES)]
    if codec is CodecId.G711_ALAW:
        return [bytes(f) for f in g711.alaw_encode(x).reshape(n, FRAME_SAMPLES)]
    if codec is CodecId.LPCVOC:
        return [lpcvoc.encode_frame(f) for f in x.reshape(n, FRAME_SAMPLES)]
    bits = _G726_BITS[codec]
    codes = g726.encode_codes(x, g726.initial_state(), bits).reshape(n, FRAME_SAMPLES)
    return [g726.pack_codes(c, bits) for c in codes]


def decode_payloads(codec, payloads) -> np.ndarray:
    """Decode consecutive payloads from reset state into one sample array."""
    codec = CodecId(codec)
    payloads = [bytes(p) for p in payloads]
    expected = _SPECS[codec].payload_bytes_per_frame
    for p in payloads:
        if len(p) != expected:
            raise WrongPayloadLength(f"{codec}: expected {expected} bytes, got {len(p)}")
    if not payloads:
        return np.zeros(0, dtype=np.int16)
    if codec is CodecId.G711_ULAW:
        return g711.ulaw_decode(b"".join(payloads))
    if codec is CodecId.G711_ALAW:
        return g711.alaw_decode(b"".join(payloads))
    if codec is CodecId.LPCVOC:
        return np.concatenate([lpcvoc.decode_frame(p) for p in payloads])
    bits = _G726_BITS[codec]
    codes = g726.unpack_codes(b"".join(payloads), bits)
    return g726.decode_codes(codes, g726.initial_state(), bits)


def lpcvoc_frame_layout() -> dict:
    return lpcvoc.frame_layout()


__all__ = [
    "CodecId", "CodecSpec", "DEFAULT_PT", "DEFAULT_PT_MAP", "FRAME_SAMPLES", "codec_spec",
    "decode", "decode_payloads", "encode", "encode_signal", "lpcvoc_frame_layout", "new_state",
]
