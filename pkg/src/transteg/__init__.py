"""Transcoding steganography over RTP and its detection.

Submodules: ``audio`` (PCM I/O, synthetic speech, corpora), ``codecs``
(G.711, G.726, LPCVOC), ``rtp``, ``stego`` (embed/extract and scenarios),
``features`` (MFCC), ``gmm``, ``warden`` (detectors), ``experiments`` and
``cli``.
"""

from .audio import PcmSignal, read_wav, synth_speech, write_wav
from .codecs import CodecId, codec_spec
from .features import FeatureMatrix, MfccConfig, extract_mfcc
from .gmm import EmSettings, GmmModel, avg_log_likelihood, load_model, save_model, train_em
from .rtp import RtpPacket, RtpStream, depacketize, packetize, read_stream, write_stream
from .stego import Scenario, StegoConfig, embed, extract, run_scenario, stego_capacity

__version__ = "0.1.0"

__all__ = [
    "CodecId", "EmSettings", "FeatureMatrix", "GmmModel", "MfccConfig", "PcmSignal", "RtpPacket",
    "RtpStream", "Scenario", "StegoConfig", "avg_log_likelihood", "codec_spec", "depacketize",
    "embed", "extract", "extract_mfcc", "load_model", "packetize", "read_stream", "read_wav",
    "run_scenario", "save_model", "stego_capacity", "synth_speech", "train_em", "write_stream",
    "write_wav",
]
