import numpy as np
import pytest

from transteg.audio import PcmSignal, synth_speech
from transteg.codecs import CodecId, decode_payloads, encode_signal
from transteg.errors import EmptyCorpus
from transteg.experiments import (
    AccuracyReport, Condition, Experiment, ExperimentConfig, SyntheticCorpus, TABLE_HEADER,
    best_mfcc_count, build_condition_audio, config_from_mapping, default_mfcc_count, emit_table,
    read_config_file, run_accuracy, sweep_duration, sweep_mfcc, train_pair_models,
)
from transteg.gmm import EmSettings
from transteg.stego import StegoConfig

G726 = StegoConfig(CodecId.G711_ULAW, CodecId.G726_32)
LPC = StegoConfig(CodecId.G711_ULAW, CodecId.LPCVOC)
TINY = SyntheticCorpus(train_speakers=4, test_speakers=2, train_utterances=2, test_utterances=2, utterance_s=2.0)


def tiny_cfg(pair=G726, **kw):
    return ExperimentConfig(pair, corpus=TINY, test_duration_s=1.0, K=2, em=EmSettings(max_iters=10), **kw)


def test_defaults():
    cfg = ExperimentConfig(G726)
    assert (cfg.test_duration_s, cfg.K, cfg.mfcc_count) == (7.0, 16, 12)
    assert ExperimentConfig(LPC).mfcc_count == 19
    assert default_mfcc_count(StegoConfig("g711a", "g726-16")) == 12
    c = cfg.corpus
    assert (c.train_speakers, c.test_speakers) == (10, 5)
    # >= 10 minutes of training audio per condition
    assert c.train_speakers * c.train_utterances * c.utterance_s >= 600


def test_condition_audio():
    sig = synth_speech(1.0, 4)
    normal = build_condition_audio(sig, G726, Condition.NORMAL)
    ulaw = decode_payloads(CodecId.G711_ULAW, encode_signal(CodecId.G711_ULAW, sig.samples))
    assert np.array_equal(normal.samples, ulaw)
    for pair in (G726, LPC):
        abnormal = build_condition_audio(sig, pair, Condition.ABNORMAL, seed=3)
        assert len(abnormal) == len(sig)
        diff = abnormal.samples.astype(float) - normal.samples
        assert np.sum(diff * diff) > 0
        assert np.array_equal(abnormal.samples, build_condition_audio(sig, pair, "abnormal", seed=3).samples)
    with pytest.raises(ValueError):
        build_condition_audio(PcmSignal(sig.samples[:100]), G726, "normal")


def test_corpus_is_speaker_disjoint_and_sorted():
    exp = Experiment(tiny_cfg())
    assert {u.speaker_id for u in exp.train}.isdisjoint({u.speaker_id for u in exp.test})
    ids = [u.source_id for u in exp.test]
    assert ids == sorted(ids) and len(ids) == 4


def test_train_models_deterministic_and_distinct():
    a = train_pair_models(tiny_cfg())
    b = train_pair_models(tiny_cfg())
    assert a[0].same_params(b[0]) and a[1].same_params(b[1])
    assert not a[0].same_params(a[1])


def test_identical_models_give_fifty_percent():
    exp = Experiment(tiny_cfg())
    normal, _ = exp.train_models()
    rep = exp.evaluate((normal, normal))
    assert rep.trials == 8 and rep.accuracy == 50.0
    assert rep.confusion == {("normal", "no-evidence"): 4, ("abnormal", "no-evidence"): 4}


def test_skips_short_utterances():
    rep = Experiment(tiny_cfg()).evaluate(train_pair_models(tiny_cfg()), duration_s=2.5)
    assert rep.trials == 0 and rep.skipped == 4


def test_concatenate_per_speaker():
    exp = Experiment(tiny_cfg(concatenate=True))
    assert [u.source_id for u in exp.test] == ["spk004", "spk005"]
    assert all(len(u.signal) == 32000 for u in exp.test)


def test_sweeps():
    cfg = tiny_cfg()
    reps = sweep_duration(cfg, [0.26, 1.0, 2.0])
    assert [r.duration_s for r in reps] == [0.26, 1.0, 2.0] and all(r.trials == 8 for r in reps)
    with pytest.raises(ValueError):
        sweep_duration(cfg, [0.1])
    mf = sweep_mfcc(cfg, [2, 5])
    assert [r.mfcc_count for r in mf] == [2, 5]
    assert best_mfcc_count(mf) in (2, 5)
    with pytest.raises(ValueError):
        sweep_mfcc(cfg, [20])


def test_best_mfcc_count_ties_to_smallest():
    mk = lambda n, acc: AccuracyReport(G726, "x", 7.0, n, {("normal", "no-evidence"): acc,
                                                            ("normal", "transteg-detected"): 100 - acc})
    assert best_mfcc_count([mk(12, 90), mk(5, 90), mk(19, 80)]) == 5


def test_emit_table():
    assert emit_table([]) == TABLE_HEADER + "\n"
    rep = AccuracyReport(G726, "synthetic:normal-vs-abnormal", 7.0, 12,
                         {("normal", "no-evidence"): 93, ("abnormal", "no-evidence"): 7})
    lines = emit_table([rep]).splitlines()
    assert len(lines) == 2
    assert lines[1] == "g711u,g726-32,synthetic:normal-vs-abnormal,7.00,12,100,93.00"


def test_empty_train_split():
    cfg = ExperimentConfig(G726, corpus=SyntheticCorpus(train_speakers=0, test_speakers=1, utterance_s=1.0))
    with pytest.raises(EmptyCorpus):
        train_pair_models(cfg)


def test_config_file(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text("# tiny run\novert = g711u\ncovert = lpcvoc\ntrain-speakers = 3\nK = 4\n"
                 "test_duration_s = 2  # seconds\nseed = 9\nconcatenate = yes\n")
    cfg = config_from_mapping(read_config_file(p))
    assert cfg.pair == LPC and cfg.corpus.train_speakers == 3 and cfg.K == 4
    assert cfg.test_duration_s == 2.0 and cfg.seed == 9 and cfg.concatenate and cfg.mfcc_count == 19
    assert config_from_mapping(read_config_file(p), seed=1).seed == 1
    with pytest.raises(ValueError):
        config_from_mapping({"bogus": "1"})
    p.write_text("no equals sign\n")
    with pytest.raises(ValueError):
        read_config_file(p)


def test_run_accuracy_separates_on_tiny_corpus():
    rep = run_accuracy(tiny_cfg(LPC))
    assert rep.trials == 8 and rep.accuracy >= 75.0


@pytest.mark.slow
def test_coarser_covert_codecs_are_easier_to_detect():
    acc = {c: run_accuracy(ExperimentConfig(StegoConfig("g711u", c))).accuracy
           for c in ("g726-40", "g726-16", "lpcvoc")}
    print(acc)
    assert acc["lpcvoc"] >= acc["g726-40"] and acc["g726-16"] >= acc["g726-40"]
