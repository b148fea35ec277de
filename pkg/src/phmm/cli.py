"""Command-line interface: generate, train, decode, evaluate, complexity.

All file formats are JSON (JSON Lines for corpora and hypotheses) with
full-precision numbers. Seeds are mandatory for generate and train, so
every run is reproducible. Exit codes: 0 success, 2 usage, 3 invalid
input, 4 training/numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .corpus import GenConfig, generate, read_corpus, write_corpus
from .demo import demo_lexicon
from .errors import (
    DegenerateModelError,
    NoFiniteHypothesisError,
    PhmmError,
    UnequalChannelLengthsError,
    ValidationError,
)
from .lexicon import Lexicon, PhonemeInventory, validate_lexicon
from .metrics import evaluate, report_to_dict
from .model_io import config_hash, load_model, save_model
from .parallel import block_ids, decode_exhaustive, decode_synced, model_count
from .training import TrainConfig, derive_seed, initial_model, train_embedded, train_segmented

log = logging.getLogger("phmm")


def _load_lexicon(spec):
    if spec == "demo":
        lex = demo_lexicon()
    else:
        lex, _ = load_model(spec)
    validate_lexicon(lex)
    log.info("loaded lexicon: %d channels, %d signs", len(lex.channels), len(lex.signs))
    return lex


def cmd_generate(args):
    lexicon = _load_lexicon(args.lexicon)
    cfg = GenConfig(
        n_utterances=args.n,
        seed=args.seed,
        signs_per_utterance=(args.min_signs, args.max_signs),
        state_dwell=tuple(args.state_dwell),
        epenthesis_dwell=tuple(args.eps_dwell),
        channel_noise=args.noise,
        desync_jitter=args.jitter,
        emit_paths=not args.no_paths,
    )
    corpus = generate(lexicon, cfg)
    write_corpus(args.out, corpus)
    print(f"wrote {len(corpus)} utterances to {args.out} (seed={args.seed})")
    return 0


def _cut_segments(lexicon, channel, corpus):
    """Slice utterances into per-phoneme segments using ground-truth paths."""
    inv = lexicon.inventory(channel)
    segments = {pid: [] for pid in inv.phonemes}
    for utt in corpus:
        if not utt.paths or channel not in utt.paths:
            raise ValidationError(
                "segmented training requires ground-truth paths in the corpus"
            )
        ids = block_ids(lexicon, channel, utt.signs)
        sizes = [inv.phonemes[pid].n_states for pid in ids]
        bounds = []
        off = 0
        for pid, size in zip(ids, sizes):
            bounds.append((off, off + size, pid))
            off += size
        path = utt.paths[channel]
        obs = utt.mobs.channels[channel]
        start = 0
        current = None
        for t, state in enumerate(list(path) + [None]):
            blk = None
            if state is not None:
                for lo, hi, pid in bounds:
                    if lo <= state < hi:
                        blk = pid
                        break
            if blk != current:
                if current is not None and t > start:
                    segments[current].append(obs[start:t])
                current = blk
                start = t
    return {pid: segs for pid, segs in segments.items() if segs}


def cmd_train(args):
    lexicon = _load_lexicon(args.lexicon)
    corpus = read_corpus(args.corpus)
    if not corpus:
        raise ValidationError("training corpus is empty")
    cfg = TrainConfig(
        max_iters=args.max_iters,
        rel_tol=args.rel_tol,
        seed=args.seed,
        smoothing=args.smoothing,
        init_strategy=args.init,
    )
    trained = {}
    summary = []
    for ch in lexicon.channels:
        for utt in corpus:
            if ch not in utt.mobs.channels:
                raise ValidationError(f"corpus lacks channel {ch!r}")
        if args.mode == "embedded":
            log.info("embedded training on channel %s", ch)
            utts = [(utt.signs, utt.mobs.channels[ch]) for utt in corpus]
            models, report = train_embedded(lexicon, ch, utts, cfg)
            summary.append(
                (
                    ch,
                    report.loglik_trajectory[0],
                    report.loglik_trajectory[-1],
                    report.iterations_run,
                    report.converged,
                    report.untouched_phonemes,
                )
            )
        else:
            data = _cut_segments(lexicon, ch, corpus)
            inv = lexicon.inventory(ch)
            init_models = {}
            for pid, segs in data.items():
                template = inv.phonemes[pid]
                alphabet = getattr(template.emissions, "alphabet_size", None)
                init_models[pid] = initial_model(
                    segs,
                    cfg,
                    n_states=template.n_states,
                    topology=template.topology,
                    alphabet_size=alphabet,
                    seed=derive_seed(cfg.seed, "segmented", ch, pid),
                )
            models, reports = train_segmented(
                list(data), data, cfg, init_models=init_models
            )
            # phonemes with no segments keep their lexicon-bound parameters
            untouched = tuple(pid for pid in inv.phonemes if pid not in models)
            for pid in untouched:
                models[pid] = inv.phonemes[pid]
            summary.append(
                (
                    ch,
                    sum(r.loglik_trajectory[0] for r in reports.values()),
                    sum(r.loglik_trajectory[-1] for r in reports.values()),
                    max(r.iterations_run for r in reports.values()),
                    all(r.converged for r in reports.values()),
                    untouched,
                )
            )
        trained[ch] = models

    out_lex = Lexicon(
        channels=list(lexicon.channels),
        inventories={
            ch: PhonemeInventory(
                phonemes={pid: trained[ch][pid] for pid in lexicon.inventory(ch).phonemes},
                epenthesis=lexicon.inventory(ch).epenthesis,
            )
            for ch in lexicon.channels
        },
        signs=lexicon.signs,
        epenthesis_policy=lexicon.epenthesis_policy,
        exit_prob=lexicon.exit_prob,
    )
    validate_lexicon(out_lex)
    run_config = {
        "mode": args.mode,
        "seed": args.seed,
        "max_iters": args.max_iters,
        "rel_tol": args.rel_tol,
        "smoothing": args.smoothing,
        "init": args.init,
    }
    save_model(
        args.out,
        out_lex,
        {"seed": args.seed, "config_hash": config_hash(run_config)},
    )
    for ch, first_ll, last_ll, iters, converged, untouched in summary:
        flags = f" untouched={','.join(untouched)}" if untouched else ""
        print(
            f"channel {ch}: loglik {first_ll:.6f} -> {last_ll:.6f} "
            f"iterations={iters} converged={converged}{flags}"
        )
    print(f"wrote model to {args.out}")
    return 0


def cmd_decode(args):
    lexicon, _ = load_model(args.model)
    validate_lexicon(lexicon)
    corpus = read_corpus(args.corpus)
    cache = {}
    n_err = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for utt in corpus:
            rec = {"hyp_version": 1, "id": utt.utt_id, "signs": [], "error": None}
            try:
                if args.mode == "exhaustive":
                    hyp = decode_exhaustive(lexicon, utt.mobs, args.max_signs, cache=cache)
                else:
                    hyp = decode_synced(lexicon, utt.mobs, args.beam_width)
                rec["signs"] = list(hyp.signs)
                rec["total_score"] = hyp.total
                rec["channel_scores"] = {ch: hyp.channel_scores[ch] for ch in lexicon.channels}
            except (NoFiniteHypothesisError, UnequalChannelLengthsError) as exc:
                rec["error"] = type(exc).__name__.removesuffix("Error")
                n_err += 1
            fh.write(json.dumps(rec) + "\n")
    print(f"decoded {len(corpus)} utterances to {args.out} ({n_err} without hypothesis)")
    return 0


def cmd_evaluate(args):
    lexicon, _ = load_model(args.model)
    validate_lexicon(lexicon)
    corpus = read_corpus(args.corpus)
    report = evaluate(
        lexicon,
        corpus,
        mode=args.mode,
        max_signs=args.max_signs,
        beam_width=args.beam_width,
    )
    blob = json.dumps(report_to_dict(report), indent=2)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(blob + "\n")
        print(f"wrote report to {args.report}")
        print(
            f"SER={report.sign_error_rate:.4f} "
            f"exact_match={report.exact_match_rate:.4f}"
        )
    else:
        print(blob)
    return 0


def cmd_complexity(args):
    lexicon = _load_lexicon(args.lexicon)
    factored, product = model_count(lexicon)
    print(f"factored={factored}")
    print(f"product={product}")
    print(f"ratio={product / factored}")
    return 0


def _add_threads(p):
    p.add_argument(
        "--threads",
        type=int,
        choices=[1],
        default=1,
        help="worker threads (only 1 is supported; kept for reproducibility contracts)",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phmm",
        description="multi-channel parallel HMM toolkit for sign-sequence recognition",
    )
    parser.add_argument("--version", action="version", version=f"phmm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a synthetic corpus from a lexicon")
    g.add_argument("--lexicon", required=True, help='"demo" or a model file path')
    g.add_argument("--n", type=int, required=True, help="number of utterances")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, help="output corpus (JSON Lines)")
    g.add_argument("--min-signs", type=int, default=1)
    g.add_argument("--max-signs", type=int, default=3)
    g.add_argument("--noise", type=float, default=0.0, help="per-channel noise rate/scale")
    g.add_argument("--jitter", type=int, default=0, help="max channel length difference")
    g.add_argument("--state-dwell", type=int, nargs=2, default=[2, 4], metavar=("LO", "HI"))
    g.add_argument("--eps-dwell", type=int, nargs=2, default=[2, 4], metavar=("LO", "HI"))
    g.add_argument("--no-paths", action="store_true", help="omit ground-truth paths")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train channel models on a corpus")
    t.add_argument("--corpus", required=True)
    t.add_argument("--lexicon", required=True, help='"demo" or a model file path')
    t.add_argument("--mode", choices=["embedded", "segmented"], default="embedded")
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--out", required=True, help="output model file")
    t.add_argument("--max-iters", type=int, default=100)
    t.add_argument("--rel-tol", type=float, default=1e-6)
    t.add_argument("--smoothing", type=float, default=1e-8)
    t.add_argument(
        "--init",
        choices=["uniform_perturbed", "from_global_stats"],
        default="uniform_perturbed",
    )
    _add_threads(t)
    t.set_defaults(func=cmd_train)

    d = sub.add_parser("decode", help="decode a corpus against a model")
    d.add_argument("--model", required=True)
    d.add_argument("--corpus", required=True)
    d.add_argument("--mode", choices=["exhaustive", "synced"], default="exhaustive")
    d.add_argument("--out", required=True, help="output hypotheses (JSON Lines)")
    d.add_argument("--max-signs", type=int, default=3)
    d.add_argument("--beam-width", type=int, default=1000)
    _add_threads(d)
    d.set_defaults(func=cmd_decode)

    e = sub.add_parser("evaluate", help="decode and score a corpus")
    e.add_argument("--model", required=True)
    e.add_argument("--corpus", required=True)
    e.add_argument("--mode", choices=["exhaustive", "synced"], default="exhaustive")
    e.add_argument("--max-signs", type=int, default=3)
    e.add_argument("--beam-width", type=int, default=1000)
    e.add_argument("--report", help="write the JSON report here instead of stdout")
    _add_threads(e)
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("complexity", help="print factored vs product model counts")
    c.add_argument("--lexicon", required=True, help='"demo" or a model file path')
    c.set_defaults(func=cmd_complexity)
    return parser


def _validate_usage(parser, args):
    if args.command == "generate":
        if args.n < 1:
            parser.error("--n must be >= 1")
        if args.min_signs < 1 or args.max_signs < args.min_signs:
            parser.error("--min-signs/--max-signs range is empty")
        if args.jitter < 0:
            parser.error("--jitter must be >= 0")
    if args.command in ("decode", "evaluate"):
        if args.max_signs < 1:
            parser.error("--max-signs must be >= 1")
        if args.beam_width < 1:
            parser.error("--beam-width must be >= 1")
    if args.command == "train" and args.max_iters < 1:
        parser.error("--max-iters must be >= 1")


def main(argv=None):
    logging.basicConfig(level=os.environ.get("PHMM_LOG_LEVEL", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate_usage(parser, args)
    try:
        return args.func(args)
    except DegenerateModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except PhmmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
