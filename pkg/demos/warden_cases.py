"""
What each warden can see
========================

Run the four hidden-communication scenarios and let every single tap and
every tap pair apply the detection method its case allows.
"""

import numpy as np

from transteg.audio import synth_speech
from transteg.experiments import Experiment, ExperimentConfig, SyntheticCorpus
from transteg.stego import Scenario, StegoConfig, run_scenario, stego_capacity
from transteg.warden import all_tap_sets, classify_case, dispatch

pair = StegoConfig("g711u", "lpcvoc")
speech = synth_speech(3.0, seed=8)

# statistical models for the single-tap re-transcoded case, from a small corpus
small = SyntheticCorpus(train_speakers=6, test_speakers=2, train_utterances=2, utterance_s=5.0)
models = Experiment(ExperimentConfig(pair, corpus=small, K=8)).train_models()

for scenario in Scenario:
    msg = np.random.default_rng(0).bytes(stego_capacity(pair) * 150)
    taps = {t.location: t for t in run_scenario(scenario, pair, speech, msg)}
    for locs in all_tap_sets():
        case = classify_case(scenario, locs)
        v = dispatch(case, [taps[loc] for loc in locs], models=models)
        where = "&".join(loc.value for loc in locs)
        print(f"{scenario.value} {where:6s} {case.value:6s} {v.method.value:16s} {v.verdict.value}")
