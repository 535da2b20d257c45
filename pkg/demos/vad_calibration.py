"""
VAD calibration
===============

Fixes the voice-activity constants used by the warden.  Genuine G.711
speech streams must look speech-like; TranSteg streams read under the
declared G.711 codec must not.  The script prints the per-stream speech
ratio of both populations so the stream-level threshold can sit in the
gap between them.
"""

import numpy as np

from transteg.audio import synth_speech
from transteg.rtp import packetize
from transteg.stego import StegoConfig, embed, stego_capacity
from transteg.warden import VAD_SPEECH_RATIO, vad_check

N_UTTERANCES = 80
rng = np.random.default_rng(2)

# genuine traffic: synthetic talkers, one 2 s G.711 stream each
genuine = []
for seed in range(N_UTTERANCES):
    stream = packetize(synth_speech(2.0, 1000 + seed), "g711u", seed=seed)
    genuine.append(vad_check(stream).score)

# TranSteg traffic: every covert codec that fits under G.711, random steganogram
stego = {}
for covert in ("g726-40", "g726-32", "g726-24", "g726-16", "lpcvoc"):
    cfg = StegoConfig("g711u", covert)
    ratios = []
    for seed in range(N_UTTERANCES // 4):
        stream = packetize(synth_speech(2.0, 2000 + seed), "g711u", seed=seed)
        hidden = embed(stream, cfg, rng.bytes(stego_capacity(cfg) * len(stream))).stream
        ratios.append(vad_check(hidden).score)
    stego[covert] = ratios

print(f"genuine speech ratio: min {min(genuine):.3f}  mean {np.mean(genuine):.3f}")
for covert, ratios in stego.items():
    print(f"g711u/{covert:8s} ratio: max {max(ratios):.3f}  mean {np.mean(ratios):.3f}")
print(f"stream threshold in use: {VAD_SPEECH_RATIO}")
