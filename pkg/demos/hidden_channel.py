"""
A hidden channel inside G.711 traffic
=====================================

Transcode a G.711 call to G.726 at 32 kbit/s, hide a message in the freed
half of every payload, then recover it and restore a G.711 stream.
"""

import numpy as np

from transteg.audio import synth_speech
from transteg.rtp import depacketize, packetize
from transteg.stego import StegoConfig, embed, extract, stego_capacity

# 7 s of synthetic speech, one RTP packet per 20 ms
speech = synth_speech(7.0, seed=1)
overt = packetize(speech, "g711u", seed=1)
print(f"{len(overt)} packets of {len(overt.packets[0].payload)} bytes")

cfg = StegoConfig("g711u", "g726-32")
print(f"{stego_capacity(cfg)} hidden bytes per packet")

message = np.random.default_rng(0).bytes(stego_capacity(cfg) * len(overt))
res = embed(overt, cfg, message)
print(f"embedded {res.bytes_embedded} bytes at {res.bandwidth_bps} bit/s")

# headers and payload sizes are untouched
same_headers = all(a.header == b.header for a, b in zip(overt, res.stream))
print("headers preserved:", same_headers)

recovered, restored = extract(res.stream, cfg, len(message))
print("message recovered:", recovered == message)

# the restored stream is G.711 again, but has been through G.726 once
x = depacketize(overt).samples.astype(float)
y = depacketize(restored).samples.astype(float)
print(f"SNR of the re-transcoded voice: {10 * np.log10(np.sum(x * x) / np.sum((x - y) ** 2)):.1f} dB")
