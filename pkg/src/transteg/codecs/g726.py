"""ITU-T G.726 ADPCM at 40, 32, 24 and 16 kbit/s.

Fixed-point arithmetic follows the ITU algorithm block by block (the block
names from the Recommendation are kept in comments).  Linear 16-bit input
is reduced to the 14-bit range the coder works on.

The per-sample loop is compiled with numba; the coder state lives in a
small int64 register array so it can be carried across RTP frames.

Payload packing: codewords are packed least-significant-bit first, i.e.
the first codeword occupies the low bits of the first byte.
"""

import numba
import numpy as np

# state register layout
YL, YU, DMS, DML, AP, A0, A1, PK0, PK1, SR0, SR1, TD = range(12)
B0 = 12  # b[0..5]
DQ0 = 18  # dq[0..5]
STATE_SIZE = 24

_POWER2 = np.array([1, 2, 4, 8, 0x10, 0x20, 0x40, 0x80,
                    0x100, 0x200, 0x400, 0x800, 0x1000, 0x2000, 0x4000], dtype=np.int64)

# per-rate tables: quantizer decision levels, log reconstruction levels,
# scale-factor multipliers W(I) (pre-scaled by 32) and F(I) (scaled by 512)
_QTAB = {
    5: np.array([-122, -16, 68, 139, 198, 250, 298, 339, 378, 413, 445, 475, 502, 528, 553]),
    4: np.array([-124, 80, 178, 246, 300, 349, 400]),
    3: np.array([8, 218, 331]),
    2: np.array([261]),
}
_DQLN = {
    5: np.array([-2048, -66, 28, 104, 169, 224, 274, 318, 358, 395, 429, 459, 488, 514, 539, 566,
                 566, 539, 514, 488, 459, 429, 395, 358, 318, 274, 224, 169, 104, 28, -66, -2048]),
    4: np.array([-2048, 4, 135, 213, 273, 323, 373, 425, 425, 373, 323, 273, 213, 135, 4, -2048]),
    3: np.array([-2048, 135, 273, 373, 373, 273, 135, -2048]),
    2: np.array([116, 365, 365, 116]),
}
_WI = {
    5: np.array([448, 448, 768, 1248, 1280, 1312, 1856, 3200, 4512, 5728, 7008, 8960, 11456,
                 14080, 16928, 22272, 22272, 16928, 14080, 11456, 8960, 7008, 5728, 4512, 3200,
                 1856, 1312, 1280, 1248, 768, 448, 448]),
    4: np.array([-12, 18, 41, 64, 112, 198, 355, 1122, 1122, 355, 198, 112, 64, 41, 18, -12]) << 5,
    3: np.array([-128, 960, 4384, 18624, 18624, 4384, 960, -128]),
    2: np.array([-22, 439, 439, -22]) << 5,
}
_FI = {
    5: np.array([0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 3, 4, 5, 6, 6,
                 6, 6, 5, 4, 3, 2, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0]) << 9,
    4: np.array([0, 0, 0, 1, 1, 1, 3, 7, 7, 3, 1, 1, 1, 0, 0, 0]) << 9,
    3: np.array([0, 1, 2, 7, 7, 2, 1, 0]) << 9,
    2: np.array([0, 7, 7, 0]) << 9,
}
for _d in (_QTAB, _DQLN, _WI, _FI):
    for _k in _d:
        _d[_k] = _d[_k].astype(np.int64)


def initial_state() -> np.ndarray:
    """Reset values mandated by the Recommendation."""
    s = np.zeros(STATE_SIZE, dtype=np.int64)
    s[YL] = 34816
    s[YU] = 544
    s[SR0] = s[SR1] = 32
    s[DQ0:DQ0 + 6] = 32
    return s


@numba.njit(cache=True)
def _quan(val, table, size):
    i = 0
    while i < size:
        if val < table[i]:
            break
        i += 1
    return i


@numba.njit(cache=True)
def _fmult(an, srn, power2):
    anmag = an if an > 0 else ((-an) & 0x1FFF)
    anexp = _quan(anmag, power2, 15) - 6
    if anmag == 0:
        anmant = 32
    elif anexp >= 0:
        anmant = anmag >> anexp
    else:
        anmant = anmag << -anexp
    wanexp = anexp + ((srn >> 6) & 0xF) - 13
    wanmant = (anmant * (srn & 0o77) + 0x30) >> 4
    if wanexp >= 0:
        retval = (wanmant << wanexp) & 0x7FFF
    else:
        retval = wanmant >> -wanexp
    return -retval if (an ^ srn) < 0 else retval


@numba.njit(cache=True)
def _float_exp_mant(mag, power2):
    exp = _quan(mag, power2, 15)
    return (exp << 6) + ((mag << 6) >> exp)


@numba.njit(cache=True)
def _predict(st, power2):
    # ACCUM: zero section then pole section
    sezi = 0
    for i in range(6):
        sezi += _fmult(st[B0 + i] >> 2, st[DQ0 + i], power2)
    sei = sezi + _fmult(st[A1] >> 2, st[SR1], power2) + _fmult(st[A0] >> 2, st[SR0], power2)
    return sezi >> 1, sei >> 1


@numba.njit(cache=True)
def _step_size(st):
    # MIX
    if st[AP] >= 256:
        return st[YU]
    y = st[YL] >> 6
    dif = st[YU] - y
    al = st[AP] >> 2
    if dif > 0:
        y += (dif * al) >> 6
    elif dif < 0:
        y += (dif * al + 0x3F) >> 6
    return y


@numba.njit(cache=True)
def _quantize(d, y, table, size, bits, power2):
    dqm = abs(d)
    exp = _quan(dqm >> 1, power2, 15)
    mant = ((dqm << 7) >> exp) & 0x7F
    dl = (exp << 7) + mant
    dln = dl - (y >> 2)
    i = _quan(dln, table, size)
    if d < 0:
        return (size << 1) + 1 - i
    if i == 0 and bits != 2:
        # one's complement of zero; the 2-bit quantizer has no zero level
        return (size << 1) + 1
    return i


@numba.njit(cache=True)
def _reconstruct(sign, dqln, y):
    dql = dqln + (y >> 2)  # ADDA
    if dql < 0:
        return -0x8000 if sign else 0
    dex = (dql >> 7) & 15  # ANTILOG
    dqt = 128 + (dql & 127)
    dq = (dqt << 7) >> (14 - dex)
    return dq - 0x8000 if sign else dq


@numba.njit(cache=True)
def _update(bits, y, wi, fi, dq, sr, dqsez, st, power2):
    pk0 = 1 if dqsez < 0 else 0
    mag = dq & 0x7FFF

    # TRANS: tone/transition detector
    ylint = st[YL] >> 15
    ylfrac = (st[YL] >> 10) & 0x1F
    thr1 = (32 + ylfrac) << ylint
    thr2 = (31 << 10) if ylint > 9 else thr1
    dqthr = (thr2 + (thr2 >> 1)) >> 1
    if st[TD] == 0 or mag <= dqthr:
        tr = 0
    else:
        tr = 1

    # FUNCTW, FILTD, LIMB: fast scale factor
    yu = y + ((wi - y) >> 5)
    if yu < 544:
        yu = 544
    elif yu > 5120:
        yu = 5120
    st[YU] = yu
    # FILTE: slow scale factor
    st[YL] += yu + ((-st[YL]) >> 6)

    a2p = 0
    if tr == 1:
        st[A0] = 0
        st[A1] = 0
        for i in range(6):
            st[B0 + i] = 0
    else:
        pks1 = pk0 ^ st[PK0]
        # UPA2
        a2p = st[A1] - (st[A1] >> 7)
        if dqsez != 0:
            fa1 = st[A0] if pks1 else -st[A0]
            if fa1 < -8191:
                a2p -= 0x100
            elif fa1 > 8191:
                a2p += 0xFF
            else:
                a2p += fa1 >> 5
            # LIMC
            if pk0 ^ st[PK1]:
                if a2p <= -12160:
                    a2p = -12288
                elif a2p >= 12416:
                    a2p = 12288
                else:
                    a2p -= 0x80
            elif a2p <= -12416:
                a2p = -12288
            elif a2p >= 12160:
                a2p = 12288
            else:
                a2p += 0x80
        st[A1] = a2p
        # UPA1, LIMD
        st[A0] -= st[A0] >> 8
        if dqsez != 0:
            if pks1 == 0:
                st[A0] += 192
            else:
                st[A0] -= 192
        a1ul = 15360 - a2p
        if st[A0] < -a1ul:
            st[A0] = -a1ul
        elif st[A0] > a1ul:
            st[A0] = a1ul
        # UPB
        for i in range(6):
            if bits == 5:
                st[B0 + i] -= st[B0 + i] >> 9
            else:
                st[B0 + i] -= st[B0 + i] >> 8
            if mag != 0:
                if (dq ^ st[DQ0 + i]) >= 0:
                    st[B0 + i] += 128
                else:
                    st[B0 + i] -= 128

    # DELAY: difference history in floating format (FLOAT A)
    for i in range(5, 0, -1):
        st[DQ0 + i] = st[DQ0 + i - 1]
    if mag == 0:
        st[DQ0] = 0x20 if dq >= 0 else -992
    else:
        v = _float_exp_mant(mag, power2)
        st[DQ0] = v if dq >= 0 else v - 0x400

    # FLOAT B: reconstructed signal history
    st[SR1] = st[SR0]
    if sr == 0:
        st[SR0] = 0x20
    elif sr > 0:
        st[SR0] = _float_exp_mant(sr, power2)
    elif sr > -32768:
        st[SR0] = _float_exp_mant(-sr, power2) - 0x400
    else:
        st[SR0] = -992

    st[PK1] = st[PK0]
    st[PK0] = pk0

    # TONE
    if tr == 1:
        st[TD] = 0
    elif a2p < -11776:
        st[TD] = 1
    else:
        st[TD] = 0

    # FILTA, FILTB, SUBTC: adaptation speed control
    st[DMS] += (fi - st[DMS]) >> 5
    st[DML] += ((fi << 2) - st[DML]) >> 7
    if tr == 1:
        st[AP] = 256
    elif y < 1536 or st[TD] == 1 or abs((st[DMS] << 2) - st[DML]) >= (st[DML] >> 3):
        st[AP] += (0x200 - st[AP]) >> 4
    else:
        st[AP] += (-st[AP]) >> 4


@numba.njit(cache=True)
def _encode_block(pcm, st, bits, qtab, dqln, witab, fitab, power2):
    n = pcm.shape[0]
    codes = np.empty(n, dtype=np.int64)
    size = qtab.shape[0]
    sign_bit = 1 << (bits - 1)
    for k in range(n):
        sl = pcm[k] >> 2
        sez, se = _predict(st, power2)
        d = sl - se
        y = _step_size(st)
        i = _quantize(d, y, qtab, size, bits, power2)
        dq = _reconstruct(i & sign_bit, dqln[i], y)
        sr = se - (dq & 0x3FFF) if dq < 0 else se + dq
        dqsez = sr + sez - se
        _update(bits, y, witab[i], fitab[i], dq, sr, dqsez, st, power2)
        codes[k] = i
    return codes


@numba.njit(cache=True)
def _decode_block(codes, st, bits, dqln, witab, fitab, power2):
    n = codes.shape[0]
    out = np.empty(n, dtype=np.int64)
    sign_bit = 1 << (bits - 1)
    mask = (1 << bits) - 1
    for k in range(n):
        i = codes[k] & mask
        sez, se = _predict(st, power2)
        y = _step_size(st)
        dq = _reconstruct(i & sign_bit, dqln[i], y)
        sr = se - (dq & 0x3FFF) if dq < 0 else se + dq
        dqsez = sr - se + sez
        _update(bits, y, witab[i], fitab[i], dq, sr, dqsez, st, power2)
        v = sr << 2
        out[k] = min(max(v, -32768), 32767)
    return out


def encode_codes(pcm, state: np.ndarray, bits: int) -> np.ndarray:
    """Encode samples to codewords, advancing ``state`` in place."""
    return _encode_block(np.asarray(pcm, dtype=np.int64), state, bits,
                         _QTAB[bits], _DQLN[bits], _WI[bits], _FI[bits], _POWER2)


def decode_codes(codes, state: np.ndarray, bits: int) -> np.ndarray:
    """Decode codewords to 16-bit samples, advancing ``state`` in place."""
    return _decode_block(np.asarray(codes, dtype=np.int64), state, bits,
                         _DQLN[bits], _WI[bits], _FI[bits], _POWER2).astype(np.int16)


def pack_codes(codes, bits: int) -> bytes:
    """Pack codewords LSB-first into bytes (len(codes) * bits must be a multiple of 8)."""
    codes = np.asarray(codes, dtype=np.uint8)
    bit_planes = (codes[:, None] >> np.arange(bits, dtype=np.uint8)) & 1
    return np.packbits(bit_planes.reshape(-1), bitorder="little").tobytes()


def unpack_codes(payload: bytes, bits: int) -> np.ndarray:
    flat = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), bitorder="little")
    planes = flat.reshape(-1, bits).astype(np.int64)
    return (planes << np.arange(bits)).sum(axis=1)
