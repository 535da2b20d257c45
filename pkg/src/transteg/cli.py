"""``transteg`` command line.

stdout carries machine-readable results only (CSV/key=value lines); progress
goes to stderr.  Exit codes: 0 success, 1 negative ``classify`` verdict,
2 usage or input error.  Seed precedence: ``--seed`` > ``$TRANSTEG_SEED`` >
``seed`` in the config file.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import experiments as ex
from .audio import read_wav, synth_speech, write_synthetic_corpus, write_wav
from .codecs import CodecId
from .errors import TranstegError
from .features import MfccConfig
from .gmm import load_model, save_model
from .rtp import packetize, read_stream, write_stream
from .stego import Coding, Location, ScenarioTap, StegoConfig, embed, extract
from .warden import VERDICT_CSV_HEADER, Case, classify_case, dispatch, statistical_detect, verdict_csv_row

log = logging.getLogger("transteg")

CODECS = [c.value for c in CodecId]
SEED_ENV = "TRANSTEG_SEED"


class UsageError(Exception):
    pass


def _resolve_seed(flag: int | None, file_value=None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from exc
    return int(file_value) if file_value is not None else 0


def _experiment_config(args) -> ex.ExperimentConfig:
    values = ex.read_config_file(args.config) if args.config else {}
    for key in ("overt", "covert"):
        if getattr(args, key, None):
            values[key] = getattr(args, key)
    if getattr(args, "mfcc", None):
        values["mfcc_count"] = str(args.mfcc)
    if getattr(args, "duration", None) is not None:
        values["test_duration_s"] = str(args.duration)
    seed = _resolve_seed(args.seed, values.pop("seed", None))
    return ex.config_from_mapping(values, seed=seed)


def _write_text(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
        log.info("wrote %s", path)


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.corpus:
        paths = write_synthetic_corpus(args.corpus, args.speakers, args.utterances, args.duration, seed)
        log.info("wrote %d utterances under %s", len(paths), args.corpus)
        return 0
    if not args.out:
        raise UsageError("synth needs --out FILE.wav or --corpus DIR")
    write_wav(synth_speech(args.duration, seed), args.out)
    return 0


def cmd_packetize(args) -> int:
    sig = read_wav(args.inp)
    stream = packetize(sig.frame_aligned(), args.codec, pt=args.pt, seed=_resolve_seed(args.seed))
    write_stream(stream, args.out)
    print(f"packets={len(stream)}")
    return 0


def cmd_embed(args) -> int:
    cfg = StegoConfig(args.overt, args.covert)
    res = embed(read_stream(args.inp), cfg, Path(args.stego).read_bytes())
    write_stream(res.stream, args.out)
    print(f"bytes_embedded={res.bytes_embedded}")
    print(f"bandwidth_bps={res.bandwidth_bps}")
    return 0


def cmd_extract(args) -> int:
    cfg = StegoConfig(args.overt, args.covert)
    hidden, restored = extract(read_stream(args.inp), cfg, args.length)
    Path(args.stego_out).write_bytes(hidden)
    if args.out:
        write_stream(restored, args.out)
    print(f"bytes_extracted={len(hidden)}")
    return 0


_TAP_CODING = {
    Case.DWC1: (Coding.OVERT, Coding.COVERT_HIDDEN),
    Case.DWC2: (Coding.COVERT_HIDDEN, Coding.COVERT_HIDDEN),
    Case.DWC3: (Coding.OVERT, Coding.OVERT_RETRANSCODED),
    Case.SLWC1: (Coding.OVERT,),
    Case.SLWC2: (Coding.COVERT_HIDDEN,),
    Case.SLWC3: (Coding.OVERT_RETRANSCODED,),
}


def cmd_warden(args) -> int:
    if args.case:
        case = Case(args.case)
    elif args.scenario and args.locations:
        case = classify_case(args.scenario, args.locations.split(","))
    else:
        raise UsageError("warden needs --case or --scenario with --locations")
    codings = _TAP_CODING[case]
    if len(args.taps) != len(codings):
        raise UsageError(f"{case.value} needs {len(codings)} --tap file(s), got {len(args.taps)}")
    locs = list(Location)
    taps = [ScenarioTap(locs[i], read_stream(p), c) for i, (p, c) in enumerate(zip(args.taps, codings))]
    models = None
    if case is Case.SLWC3:
        if not (args.normal and args.abnormal):
            raise UsageError("SLWC3 needs --normal and --abnormal model files")
        models = (load_model(args.normal), load_model(args.abnormal))
    v = dispatch(case, taps, models)
    print(VERDICT_CSV_HEADER)
    print(verdict_csv_row(case, v))
    return 0


def cmd_train(args) -> int:
    cfg = _experiment_config(args)
    log.info("training %s models (seed %d, %d MFCCs)", cfg.pair.label, cfg.seed, cfg.mfcc_count)
    normal, abnormal = ex.train_pair_models(cfg)
    save_model(normal, args.normal_out)
    save_model(abnormal, args.abnormal_out)
    print(f"normal_loglik={normal.meta.loglik:.6f}")
    print(f"abnormal_loglik={abnormal.meta.loglik:.6f}")
    return 0


def cmd_classify(args) -> int:
    normal, abnormal = load_model(args.normal), load_model(args.abnormal)
    v = statistical_detect(read_stream(args.inp), normal, abnormal, MfccConfig(num_coeffs=normal.dim))
    print(VERDICT_CSV_HEADER)
    print(verdict_csv_row(Case.SLWC3, v))
    return 0 if v.detected else 1


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def cmd_sweep_duration(args) -> int:
    cfg = _experiment_config(args)
    reports = ex.sweep_duration(cfg, _floats(args.durations))
    _write_text(args.out, ex.emit_table(reports))
    return 0


def cmd_sweep_mfcc(args) -> int:
    cfg = _experiment_config(args)
    counts = [int(c) for c in _floats(args.counts)]
    reports = ex.sweep_mfcc(cfg, counts)
    log.info("best MFCC count: %d", ex.best_mfcc_count(reports))
    _write_text(args.out, ex.emit_table(reports))
    return 0


def cmd_table(args) -> int:
    base = _experiment_config(args)
    reports = []
    for item in args.pairs.split(","):
        try:
            overt, covert = item.split("/")
        except ValueError as exc:
            raise UsageError(f"pair {item!r} is not OVERT/COVERT") from exc
        pair = StegoConfig(overt, covert)
        mfcc = args.mfcc or ex.default_mfcc_count(pair)
        cfg = ex.ExperimentConfig(pair, base.corpus, base.test_duration_s, mfcc, base.K, base.em,
                                  base.seed, base.concatenate)
        log.info("evaluating %s", pair.label)
        reports.append(ex.run_accuracy(cfg))
        if args.chance:
            reports.append(ex.chance_level(cfg))
    _write_text(args.out, ex.emit_table(reports))
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_experiment_flags(p: argparse.ArgumentParser, pair: bool = True) -> None:
    p.add_argument("--config", metavar="FILE", help="key = value experiment config file")
    if pair:
        p.add_argument("--overt", choices=CODECS, help="overt codec (default g711u)")
        p.add_argument("--covert", choices=CODECS, help="covert codec (default g726-32)")
    p.add_argument("--mfcc", type=int, metavar="N", help="MFCC count (default per pair: 12 or 19)")
    p.add_argument("--duration", type=float, metavar="S", help="test duration in seconds (default 7)")
    p.add_argument("--seed", type=int, help=f"top-level seed (overrides ${SEED_ENV} and config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="transteg", description="Transcoding steganography toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("synth", help="write synthetic speech (one file or a corpus)")
    p.add_argument("--out", metavar="WAV", help="output WAV file")
    p.add_argument("--duration", type=float, default=7.0, help="seconds per utterance (default 7)")
    p.add_argument("--seed", type=int, help="synthesis seed")
    p.add_argument("--corpus", metavar="DIR", help="write a corpus tree instead of one file")
    p.add_argument("--speakers", type=int, default=15, help="corpus speakers (default 15)")
    p.add_argument("--utterances", type=int, default=6, help="utterances per speaker (default 6)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("packetize", help="encode a WAV into an RTP stream file")
    p.add_argument("--in", dest="inp", required=True, metavar="WAV", help="input 8 kHz mono WAV")
    p.add_argument("--codec", required=True, choices=CODECS, help="codec to encode with")
    p.add_argument("--pt", type=int, help="RTP payload type (default from the codec map)")
    p.add_argument("--seed", type=int, help="seed for initial sequence number and timestamp")
    p.add_argument("--out", required=True, metavar="RTPS", help="output stream file")
    p.set_defaults(func=cmd_packetize)

    p = sub.add_parser("embed", help="hide a steganogram by transcoding")
    p.add_argument("--in", dest="inp", required=True, metavar="RTPS", help="overt-coded input stream")
    p.add_argument("--overt", required=True, choices=CODECS, help="overt codec of the stream")
    p.add_argument("--covert", required=True, choices=CODECS, help="covert codec")
    p.add_argument("--stego", required=True, metavar="FILE", help="steganogram bytes to hide")
    p.add_argument("--out", required=True, metavar="RTPS", help="output stream with hidden data")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="recover a steganogram and restore the overt stream")
    p.add_argument("--in", dest="inp", required=True, metavar="RTPS", help="stream carrying hidden data")
    p.add_argument("--overt", required=True, choices=CODECS, help="overt codec")
    p.add_argument("--covert", required=True, choices=CODECS, help="covert codec")
    p.add_argument("--length", required=True, type=int, help="steganogram length in bytes")
    p.add_argument("--stego-out", required=True, metavar="FILE", help="recovered steganogram")
    p.add_argument("--out", metavar="RTPS", help="restored (re-transcoded) overt stream")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("warden", help="run the detection method for a warden case")
    p.add_argument("--case", choices=[c.value for c in Case], help="warden case")
    p.add_argument("--scenario", choices=["S1", "S2", "S3", "S4"], help="scenario (with --locations)")
    p.add_argument("--locations", metavar="W1[,W2]", help="tap locations (with --scenario)")
    p.add_argument("--tap", dest="taps", action="append", default=[], metavar="RTPS",
                   help="tap stream file, in location order (repeatable)")
    p.add_argument("--normal", metavar="GMM", help="normal model (SLWC3)")
    p.add_argument("--abnormal", metavar="GMM", help="abnormal model (SLWC3)")
    p.set_defaults(func=cmd_warden)

    p = sub.add_parser("train", help="train normal and abnormal GMMs for a codec pair")
    _add_experiment_flags(p)
    p.add_argument("--normal-out", required=True, metavar="GMM", help="normal model file")
    p.add_argument("--abnormal-out", required=True, metavar="GMM", help="abnormal model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="statistical verdict on a stream (exit 0 detected, 1 not)")
    p.add_argument("--in", dest="inp", required=True, metavar="RTPS", help="overt-coded stream (W3 tap)")
    p.add_argument("--normal", required=True, metavar="GMM", help="normal model file")
    p.add_argument("--abnormal", required=True, metavar="GMM", help="abnormal model file")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep-duration", help="accuracy versus test duration (CSV)")
    _add_experiment_flags(p)
    p.add_argument("--durations", default="0.26,1,2,4,7,10", help="comma-separated seconds")
    p.add_argument("--out", metavar="CSV", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_sweep_duration)

    p = sub.add_parser("sweep-mfcc", help="accuracy versus MFCC count (CSV)")
    _add_experiment_flags(p)
    p.add_argument("--counts", default=",".join(str(i) for i in range(1, 20)), help="comma-separated counts")
    p.add_argument("--out", metavar="CSV", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_sweep_mfcc)

    p = sub.add_parser("table", help="accuracy table over codec pairs (CSV)")
    _add_experiment_flags(p, pair=False)
    p.add_argument("--pairs", default="g711u/g726-32,g711u/lpcvoc", help="comma-separated OVERT/COVERT")
    p.add_argument("--chance", action="store_true", help="add a normal-vs-normal control row per pair")
    p.add_argument("--out", metavar="CSV", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, TranstegError, ValueError, OSError) as exc:
        print(f"transteg {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
