import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import transteg.features as feat
from oracles import hand_mel_centres, reference_mfcc
from transteg.audio import PcmSignal, synth_speech
from transteg.errors import SignalTooShort
from transteg.features import FeatureMatrix, MfccConfig, extract_mfcc, filter_edges, mel_filterbank, write_features_csv


def rel_err(ref, got):
    return np.max(np.abs(ref - got)) / np.max(np.abs(ref))


def test_matches_bruteforce_reference():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(100):
        n = int(rng.integers(240, 2400))
        kind = i % 3
        if kind == 0:
            x = rng.integers(-32768, 32768, n)
        elif kind == 1:
            x = synth_speech(n / 8000 + 0.02, int(rng.integers(1 << 30))).samples[:n]
        else:
            x = np.round(3000 * np.sin(np.arange(n) * rng.uniform(0.05, 3.0)))
        cfg = MfccConfig(num_coeffs=int(rng.integers(1, 20)), include_c0=bool(rng.integers(2)))
        ref = reference_mfcc(x, cfg.num_coeffs, include_c0=cfg.include_c0)
        worst = max(worst, rel_err(ref, extract_mfcc(x, cfg).rows))
    assert worst <= 1e-6
    assert time.perf_counter() - t0 < 30


def test_filterbank_shape_and_triangles():
    fb = mel_filterbank(26, 256, 8000)
    assert fb.shape == (26, 129)
    assert np.all(fb >= 0)
    for row in fb:
        nz = row[row > 0]
        peak = int(np.argmax(nz))
        assert np.all(np.diff(nz[:peak + 1]) >= 0) and np.all(np.diff(nz[peak:]) <= 0)
    centres = filter_edges(26)[1:-1]
    assert np.all(np.diff(centres) > 0)


def test_filter_centres_match_hand_grid():
    centres = filter_edges(26, 8000)[1:-1]
    assert np.allclose(centres, hand_mel_centres(26, 8000), rtol=1e-12)
    # first centre ~51 Hz, last ~3680 Hz: inside (0, 4000)
    assert 50 < centres[0] < 52 and 3679 < centres[-1] < 3681 < 4000


def test_filterbank_preconditions():
    with pytest.raises(ValueError):
        mel_filterbank(0)
    with pytest.raises(ValueError):
        mel_filterbank(26, 250)


def test_frame_count_seven_seconds():
    assert len(extract_mfcc(synth_speech(7.0, 3))) == 698


def test_too_short():
    with pytest.raises(SignalTooShort):
        extract_mfcc(np.zeros(239))


def test_constant_log_energies_give_zero_cepstrum(monkeypatch):
    monkeypatch.setattr(feat, "log_mel_energies", lambda s, c: np.full((5, c.num_filters), 3.7))
    out = extract_mfcc(np.zeros(1000), MfccConfig(num_coeffs=19))
    assert np.allclose(out.rows, 0.0, atol=1e-12)
    c0 = extract_mfcc(np.zeros(1000), MfccConfig(num_coeffs=3, include_c0=True)).rows
    assert np.allclose(c0[:, 0], 3.7 * np.sqrt(26)) and np.allclose(c0[:, 1:], 0, atol=1e-12)


def test_tones_differ_in_c1_like_reference():
    t = np.arange(1600) / 8000
    a = np.round(8000 * np.sin(2 * np.pi * 1000 * t))
    b = np.round(8000 * np.sin(2 * np.pi * 2000 * t))
    ca, cb = extract_mfcc(a).rows[:, 0], extract_mfcc(b).rows[:, 0]
    ra, rb = reference_mfcc(a)[:, 0], reference_mfcc(b)[:, 0]
    assert np.allclose(ca, ra, rtol=1e-6) and np.allclose(cb, rb, rtol=1e-6)
    assert abs(ca.mean() - cb.mean()) > 1.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100.0), st.integers(0, 2**32 - 1))
def test_scaling_only_moves_c0(scale, seed):
    x = np.random.default_rng(seed).standard_normal(800) * 1000
    base = extract_mfcc(x).rows
    scaled = extract_mfcc(x * scale).rows
    assert np.max(np.abs(base - scaled)) <= 1e-6
    with_c0 = MfccConfig(num_coeffs=2, include_c0=True)
    shift = extract_mfcc(x * scale, with_c0).rows[:, 0] - extract_mfcc(x, with_c0).rows[:, 0]
    assert np.allclose(shift, 2 * np.log(scale) * np.sqrt(26), atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-32768, 32767), min_size=240, max_size=1200))
def test_always_finite(values):
    assert np.all(np.isfinite(extract_mfcc(np.array(values)).rows))


def test_all_zero_signal_is_finite():
    rows = extract_mfcc(PcmSignal(np.zeros(800, np.int16))).rows
    assert np.all(np.isfinite(rows)) and np.allclose(rows, 0)


def test_config_and_matrix_validation():
    with pytest.raises(ValueError):
        MfccConfig(num_coeffs=26)
    with pytest.raises(ValueError):
        FeatureMatrix(np.array([[np.nan]]))
    m = FeatureMatrix(np.ones((3, 5)), "x")
    assert m.head(2).num_coeffs == 2 and len(FeatureMatrix.stack([m, m])) == 6


def test_feature_csv(tmp_path):
    m = extract_mfcc(synth_speech(0.1, 1), MfccConfig(num_coeffs=4))
    p = tmp_path / "f.csv"
    write_features_csv(m, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "c1,c2,c3,c4" and len(lines) == len(m) + 1
    assert np.array_equal(np.loadtxt(p, delimiter=",", skiprows=1, ndmin=2), m.rows)
