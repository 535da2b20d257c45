"""LPCVOC: a toy 3.2 kbit/s order-10 LPC vocoder with a checkable frame layout.

One 20 ms frame (160 samples) is coded into 64 bits, most significant bit
first::

    sync(2)=0b10 | voiced(1) | pitch(6) | gain(5) | lsf[0..9] (10 x 5)

Frames are coded independently; there is no inter-frame state.
"""

import numpy as np
from scipy.signal import lfilter

from ..errors import InvalidFrame

ORDER = 10
FRAME = 160
SYNC = 0b10
PAYLOAD_BYTES = 8

FRAME_LAYOUT = (
    ("sync", 2),
    ("voiced", 1),
    ("pitch", 6),
    ("gain", 5),
) + tuple((f"lsf{i}", 5) for i in range(ORDER))

PITCH_MIN, PITCH_MAX = 32, 100
GAIN_FLOOR_DB = -68.0
GAIN_STEP_DB = 2.0

# per-coefficient scalar quantizer ranges, Hz
_LSF_LO = np.array([80, 200, 400, 650, 900, 1200, 1500, 1850, 2250, 2650], dtype=float)
_LSF_HI = np.array([650, 1100, 1500, 1900, 2300, 2650, 3000, 3300, 3600, 3900], dtype=float)
_LSF_MIN_GAP = 40.0
_BW_EXPAND = 0.994 ** np.arange(ORDER + 1)
_LAG_WINDOW = np.exp(-0.5 * (2 * np.pi * 60.0 / 8000 * np.arange(ORDER + 1)) ** 2)
_HAMMING = np.hamming(FRAME)


def frame_layout() -> dict:
    """Field name -> (bit offset, bit width), MSB-first."""
    out, off = {}, 0
    for name, width in FRAME_LAYOUT:
        out[name] = (off, width)
        off += width
    return out


def levinson(r: np.ndarray, order: int = ORDER):
    """Levinson-Durbin recursion: autocorrelation -> (a[0..order], reflection coeffs)."""
    a = np.zeros(order + 1)
    a[0] = 1.0
    k = np.zeros(order)
    err = r[0]
    for i in range(1, order + 1):
        if err <= 0:
            break
        acc = r[i] + np.dot(a[1:i], r[i - 1:0:-1])
        ki = -acc / err
        k[i - 1] = ki
        a[1:i] = a[1:i] + ki * a[i - 1:0:-1]
        a[i] = ki
        err *= 1 - ki * ki
    return a, k


def _deflate(poly: np.ndarray, root: float) -> np.ndarray:
    out = np.empty(poly.size - 1)
    acc = 0.0
    for i in range(out.size):
        acc = poly[i] + root * acc
        out[i] = acc
    return out


def lpc_to_lsf(a: np.ndarray) -> np.ndarray:
    """LPC polynomial -> line spectral frequencies in radians, ascending."""
    a = np.asarray(a, dtype=float)
    ext = np.concatenate([a, [0.0]])
    p = ext + ext[::-1]
    q = ext - ext[::-1]
    # remove the trivial roots at z=-1 (P) and z=+1 (Q)
    p = _deflate(p, -1.0)
    q = _deflate(q, 1.0)
    w = []
    for poly in (p, q):
        ang = np.angle(np.roots(poly))
        w.extend(ang[(ang > 0) & (ang < np.pi)])
    w = np.sort(np.array(w))
    if w.size != ORDER:
        raise ValueError("unstable LPC polynomial")
    return w


def lsf_to_lpc(w: np.ndarray) -> np.ndarray:
    """Inverse of ``lpc_to_lsf``; odd-indexed (1-based) LSFs belong to P(z)."""
    p = np.array([1.0, 1.0])
    q = np.array([1.0, -1.0])
    for i, wi in enumerate(w):
        sec = np.array([1.0, -2 * np.cos(wi), 1.0])
        if i % 2 == 0:
            p = np.convolve(p, sec)
        else:
            q = np.convolve(q, sec)
    return 0.5 * (p + q)[:ORDER + 1]


def _pack(fields: list[int]) -> bytes:
    value = 0
    for (_, width), v in zip(FRAME_LAYOUT, fields):
        value = (value << width) | (int(v) & ((1 << width) - 1))
    return value.to_bytes(PAYLOAD_BYTES, "big")


def _unpack(payload: bytes) -> list[int]:
    value = int.from_bytes(payload, "big")
    fields = []
    shift = 64
    for _, width in FRAME_LAYOUT:
        shift -= width
        fields.append((value >> shift) & ((1 << width) - 1))
    return fields


def sync_ok(payload: bytes) -> bool:
    return (payload[0] >> 6) == SYNC


def _pitch_lag(index: int) -> int:
    return PITCH_MIN + int(round(index * (PITCH_MAX - PITCH_MIN) / 63))


def _analyse(x: np.ndarray):
    xw = x * _HAMMING
    r = np.correlate(xw, xw, "full")[FRAME - 1:FRAME + ORDER]
    if r[0] <= 0:
        return np.linspace(1, ORDER, ORDER) * np.pi / (ORDER + 1)
    r = r * _LAG_WINDOW
    r[0] *= 1.0001
    a, _ = levinson(r)
    a = a * _BW_EXPAND
    try:
        return lpc_to_lsf(a)
    except ValueError:
        return np.linspace(1, ORDER, ORDER) * np.pi / (ORDER + 1)


def _voicing(x: np.ndarray):
    """Voiced flag and pitch lag from zero-crossings, energy and autocorrelation."""
    xc = x - x.mean()
    energy = np.dot(xc, xc)
    zcr = np.mean(np.abs(np.diff(np.signbit(xc).astype(np.int8))))
    lags = np.arange(PITCH_MIN, PITCH_MAX + 1)
    corr = np.correlate(xc, xc, "full")[FRAME - 1 + lags]
    cs = np.cumsum(xc * xc)
    norm = np.sqrt(cs[FRAME - 1 - lags] * (cs[-1] - cs[lags - 1]))
    nc = np.divide(corr, norm, out=np.zeros_like(corr), where=norm > 0)
    best = int(np.argmax(nc))
    voiced = energy > 160 * 30.0**2 and zcr < 0.3 and nc[best] > 0.3
    return voiced, int(lags[best])


def encode_frame(pcm: np.ndarray) -> bytes:
    x = np.asarray(pcm, dtype=np.float64)
    rms = np.sqrt(np.mean(x * x))
    level = 20 * np.log10(rms / 32768.0) if rms > 0 else -np.inf
    if level < GAIN_FLOOR_DB:
        gain = 0
    else:
        gain = int(np.clip(np.round((level - GAIN_FLOOR_DB) / GAIN_STEP_DB) + 1, 1, 31))
    lsf_hz = _analyse(x) * 8000 / (2 * np.pi)
    lsf_idx = np.clip(np.round((lsf_hz - _LSF_LO) / (_LSF_HI - _LSF_LO) * 31), 0, 31).astype(int)
    voiced, lag = _voicing(x) if gain else (False, PITCH_MIN)
    pitch_idx = int(round((lag - PITCH_MIN) * 63 / (PITCH_MAX - PITCH_MIN)))
    return _pack([SYNC, int(voiced), pitch_idx, gain, *lsf_idx])


def decode_frame(payload: bytes) -> np.ndarray:
    if not sync_ok(payload):
        raise InvalidFrame(f"LPCVOC sync bits {payload[0] >> 6:02b}, expected {SYNC:02b}")
    _, voiced, pitch_idx, gain, *lsf_idx = _unpack(payload)
    if gain == 0:
        return np.zeros(FRAME, dtype=np.int16)
    lsf_hz = _LSF_LO + np.asarray(lsf_idx) / 31 * (_LSF_HI - _LSF_LO)
    lsf_hz = np.sort(lsf_hz)
    for i in range(1, ORDER):
        lsf_hz[i] = max(lsf_hz[i], lsf_hz[i - 1] + _LSF_MIN_GAP)
    lsf_hz = np.minimum(lsf_hz, 3990.0 - _LSF_MIN_GAP * (ORDER - 1 - np.arange(ORDER)))
    a = lsf_to_lpc(lsf_hz * 2 * np.pi / 8000)
    if voiced:
        exc = np.zeros(FRAME)
        exc[:: _pitch_lag(pitch_idx)] = 1.0
    else:
        rng = np.random.default_rng(int.from_bytes(payload, "big"))
        exc = rng.standard_normal(FRAME)
    y = lfilter([1.0], a, exc)
    rms = np.sqrt(np.mean(y * y))
    target = 32768.0 * 10 ** ((GAIN_FLOOR_DB + (gain - 1) * GAIN_STEP_DB) / 20)
    if rms > 0:
        y *= target / rms
    return np.clip(np.round(y), -32768, 32767).astype(np.int16)
