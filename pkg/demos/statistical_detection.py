"""
Detecting TranSteg from the re-transcoded voice alone
=====================================================

A warden close to the receiver sees ordinary G.711 traffic.  Two GMMs,
one trained on normally transmitted speech and one on speech that went
through G.726 and back, tell the two apart.  Accuracy grows with the
length of the test signal.
"""

from transteg.experiments import ExperimentConfig, SyntheticCorpus, emit_table, sweep_duration
from transteg.stego import StegoConfig

# a reduced corpus keeps this under a minute; the defaults are larger
corpus = SyntheticCorpus(train_speakers=6, test_speakers=3, train_utterances=4, test_utterances=4)
cfg = ExperimentConfig(StegoConfig("g711u", "g726-32"), corpus=corpus, seed=0)

reports = sweep_duration(cfg, [0.26, 0.5, 1, 2, 4, 7])
print(emit_table(reports), end="")
