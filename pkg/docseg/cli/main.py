import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import jax.random as jr

from docseg.annotation.aggregate import aggregate_corpus, load_annotations, screen
from docseg.cli.config import apply_file_defaults, config_path, fingerprint, read_config_file
from docseg.corpus.documents import Corpus, load_records, save_records, split_corpus
from docseg.corpus.lexicon import apply_corpus_noise, load_lexicon, phone_inventory, save_lexicon, synthetic_lexicon
from docseg.corpus.synthetic import SynthSpec, generate_synthetic
from docseg.corpus.wiki import parse_wiki_text
from docseg.evaluation.bench import bench_sweep, format_bench_table, save_bench
from docseg.evaluation.metrics import evaluate_segmentations, format_report, save_report
from docseg.evaluation.significance import compare_runs, format_significance
from docseg.inference.strategies import InferenceConfig, load_segmentations, save_segmentations, segment_corpus
from docseg.model.checkpoint import load_model, save_model
from docseg.model.inputs import WindowInput
from docseg.model.models import ModelConfig
from docseg.tokenizer.wordpiece import CLS, SPECIAL_TOKENS, build_vocab, load_vocab, save_vocab
from docseg.training.gradcheck import grad_check
from docseg.training.samples import TrainConfig, TrainSample
from docseg.training.train import HEADS, train

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) in (None, [])]
    if missing:
        args.parser.error(f"the following arguments are required: --{missing[0].replace('_', '-')}")


def _lexicon(args):
    return load_lexicon(args.lexicon) if args.lexicon else None


# subcommands

def cmd_synth(args):
    _require(args, "out")
    spec = SynthSpec(n_docs=args.n_docs,
                     sentences_per_doc=(args.min_sentences, args.max_sentences),
                     words_per_sentence=(args.min_words, args.max_words),
                     segment_length=(args.min_segment, args.max_segment),
                     vocab_size=args.vocab_size,
                     boundary_cue_strength=args.cue_strength,
                     seed=args.seed,
                     n_cue_words=args.n_cue_words)
    corpus = generate_synthetic(spec)
    lexicon = None
    if args.lexicon_out or args.noise_rate > 0:
        lexicon = synthetic_lexicon(corpus, class_size=args.class_size, seed=args.seed)
    if args.lexicon_out:
        save_lexicon(lexicon, args.lexicon_out)

    outputs = [(corpus, args.out)]
    if args.test_out:
        train_corpus, test_corpus = split_corpus(corpus, args.test_fraction, args.seed)
        outputs = [(train_corpus, args.out), (test_corpus, args.test_out)]
    for i, (part, path) in enumerate(outputs):
        if args.noise_rate > 0:
            part = apply_corpus_noise(part, lexicon, args.noise_rate, args.seed + 1000 * i)
        save_records(part, path)
        logger.info("wrote %d documents to %s", len(part), path)


def cmd_convert(args):
    _require(args, "inputs", "out")
    docs = []
    for path in args.inputs:
        text = Path(path).read_text(encoding="utf-8")
        docs.append(parse_wiki_text(text, args.granularity, Path(path).stem, args.source))
    save_records(Corpus(tuple(docs)), args.out)


def cmd_vocab(args):
    _require(args, "corpus", "out")
    vocab = build_vocab(load_records(args.corpus), args.max_size, args.max_piece_length)
    save_vocab(vocab, args.out)
    logger.info("vocabulary of %d tokens written to %s", len(vocab.tokens), args.out)


def _model_config(args, vocab, lexicon) -> ModelConfig:
    phones = len(phone_inventory(lexicon)) if lexicon is not None and args.use_phone else 0
    return ModelConfig(vocab_size=len(vocab.tokens),
                       phone_vocab_size=phones,
                       d_model=args.d_model,
                       n_layers=args.n_layers,
                       n_heads=args.n_heads,
                       d_ff=args.d_ff,
                       max_seq_len=args.max_seq_len,
                       dropout_rate=args.dropout,
                       use_phone=args.use_phone)


def _train_config(args) -> TrainConfig:
    return TrainConfig(forward_step=args.forward_step,
                       max_sentences=args.max_sentences,
                       max_seq_len=args.max_seq_len,
                       batch_size=args.batch_size,
                       epochs=args.epochs,
                       learning_rate=args.learning_rate,
                       adam_beta1=args.adam_beta1,
                       adam_beta2=args.adam_beta2,
                       adam_eps=args.adam_eps,
                       seed=args.seed,
                       window_mode=args.window_mode,
                       max_backward_step=args.max_backward_step,
                       grad_accumulation=args.grad_accumulation,
                       shuffle=args.shuffle,
                       target_dev_f1=args.target_dev_f1)


def cmd_train(args):
    _require(args, "corpus", "vocab", "out")
    if args.use_phone and not args.lexicon:
        args.parser.error("--use-phone requires --lexicon")
    vocab, lexicon = load_vocab(args.vocab), _lexicon(args)
    dev = load_records(args.dev, "dev") if args.dev else None
    model, losses = train(load_records(args.corpus, "train"), _model_config(args, vocab, lexicon),
                          _train_config(args), vocab, lexicon, dev, args.head, args.left_ctx, args.right_ctx,
                          verbose=args.verbose)
    save_model(model, args.out)
    if args.loss_out:
        with open(args.loss_out, "w", encoding="utf-8") as f:
            f.write(json.dumps(dict(losses=losses)) + "\n")
    print(f"final training loss {losses[-1]:.4f}" if losses else "no epochs run")


def _inference_config(args, strategy: str = "fixed") -> InferenceConfig:
    return InferenceConfig(strategy=strategy.replace("-", "_"),
                           window_token_budget=args.window_tokens,
                           max_window_sentences=args.window_sentences,
                           step=args.step,
                           left_context=args.left_ctx,
                           right_context=args.right_ctx,
                           threshold=args.threshold)


def cmd_segment(args):
    _require(args, "model", "corpus", "vocab", "out")
    cfg = _inference_config(args, args.strategy)
    results = segment_corpus(load_records(args.corpus), load_model(args.model), cfg, load_vocab(args.vocab),
                             _lexicon(args), args.workers)
    save_segmentations(results, args.out)
    print(f"{len(results)} documents, {sum(r.n_encoder_calls for r in results)} encoder calls")


def cmd_eval(args):
    _require(args, "pred", "ref")
    ref = load_records(args.ref)
    reports = [evaluate_segmentations(load_segmentations(p), ref) for p in args.pred]
    for path, report in zip(args.pred, reports):
        print(format_report(report, Path(path).stem))
    if args.out:
        save_report(reports[0], args.out)
    if args.compare:
        others = [evaluate_segmentations(load_segmentations(p), ref) for p in args.compare]
        print(format_significance(compare_runs(reports, others, seed=args.seed)))


def cmd_bench(args):
    _require(args, "model", "corpus", "vocab", "out")
    baseline = load_model(args.baseline_model) if args.baseline_model else None
    report = bench_sweep(load_model(args.model), baseline, load_records(args.corpus), args.steps,
                         load_vocab(args.vocab), _lexicon(args), _inference_config(args), args.workers, args.verbose)
    save_bench(report, args.out, args.series_dir)
    print(format_bench_table(report))


def cmd_aggregate(args):
    _require(args, "corpus", "annotations", "out")
    annotators = None
    if args.screening_annotations or args.screening_refs:
        _require(args, "screening_annotations", "screening_refs")
        refs = {d.id: d.labels for d in load_records(args.screening_refs).documents}
        outcome = screen(load_annotations(args.screening_annotations), refs, args.min_f1)
        annotators = [a for a, passed in outcome.items() if passed]
        print(f"{len(annotators)} of {len(outcome)} annotators passed screening")
    corpus = aggregate_corpus(load_records(args.corpus), load_annotations(args.annotations), args.k,
                              args.positive_threshold, annotators)
    save_records(corpus, args.out)


def cmd_gradcheck(args):
    config = ModelConfig(vocab_size=len(SPECIAL_TOKENS) + args.token_types, d_model=args.d_model,
                         n_layers=args.n_layers, n_heads=args.n_heads, d_ff=args.d_ff,
                         max_seq_len=max(8, 1 + args.sentences * args.tokens_per_sentence))
    key = jr.PRNGKey(args.seed)
    num_tokens = args.sentences * args.tokens_per_sentence
    tokens = jr.randint(key, (num_tokens,), len(SPECIAL_TOKENS), config.vocab_size).tolist()
    labels = jr.bernoulli(jr.fold_in(key, 1), 0.5, (args.sentences,)).tolist()
    spans = tuple((1 + i * args.tokens_per_sentence, 1 + (i + 1) * args.tokens_per_sentence)
                  for i in range(args.sentences))
    sample = TrainSample(WindowInput(tuple([CLS] + tokens), spans), tuple(bool(x) for x in labels), "tail_truncate")
    error = grad_check(config, sample, args.epsilon, args.coordinates, jr.fold_in(key, 2), only=args.only)
    print(f"max relative error {error:.3e}")
    if error > args.tolerance:
        logger.error("relative error %.3e exceeds tolerance %.1e", error, args.tolerance)
        return EXIT_NUMERICAL


# parser

def _window_flags(p):
    p.add_argument("--step", type=int, default=10, help="fixed: overlap step; adaptive: maximum backward step")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--window-tokens", type=int, default=512)
    p.add_argument("--window-sentences", type=int, default=60)
    p.add_argument("--left-ctx", type=int, default=128)
    p.add_argument("--right-ctx", type=int, default=128)


def build_parser():
    common = Parser(add_help=False)
    common.add_argument("--config", help="key = value config file (default: $DOCSEG_CONFIG)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--workers", type=int, default=1, help="documents processed in parallel")

    parser = Parser(prog="docseg", description="Document segmentation with windowed sentence labeling.")
    commands = parser.add_subparsers(dest="command", parser_class=Parser)
    commands.required = True
    subs = {}

    def add(name, func, summary):
        sub = commands.add_parser(name, parents=[common], help=summary)
        sub.set_defaults(func=func, parser=sub)
        subs[name] = sub
        return sub

    p = add("synth", cmd_synth, "generate a synthetic corpus")
    p.add_argument("--out")
    p.add_argument("--n-docs", type=int, default=20)
    p.add_argument("--min-sentences", type=int, default=8)
    p.add_argument("--max-sentences", type=int, default=12)
    p.add_argument("--min-words", type=int, default=3)
    p.add_argument("--max-words", type=int, default=6)
    p.add_argument("--min-segment", type=int, default=2)
    p.add_argument("--max-segment", type=int, default=5)
    p.add_argument("--vocab-size", type=int, default=50)
    p.add_argument("--cue-strength", type=float, default=1.0)
    p.add_argument("--n-cue-words", type=int, default=3)
    p.add_argument("--lexicon-out")
    p.add_argument("--class-size", type=int, default=2)
    p.add_argument("--noise-rate", type=float, default=0.0)
    p.add_argument("--test-out")
    p.add_argument("--test-fraction", type=float, default=0.2)

    p = add("convert", cmd_convert, "convert wiki-style text files to corpus records")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--out")
    p.add_argument("--granularity", choices=["section", "paragraph"], default="paragraph")
    p.add_argument("--source", choices=["written", "spoken"], default="written")

    p = add("vocab", cmd_vocab, "build a subword vocabulary")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.add_argument("--max-size", type=int, default=8000)
    p.add_argument("--max-piece-length", type=int, default=10)

    p = add("train", cmd_train, "train a segmentation model")
    p.add_argument("--corpus")
    p.add_argument("--dev")
    p.add_argument("--vocab")
    p.add_argument("--lexicon")
    p.add_argument("--out")
    p.add_argument("--loss-out")
    p.add_argument("--head", choices=HEADS, default="sentence")
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--n-layers", type=int, default=2)
    p.add_argument("--n-heads", type=int, default=4)
    p.add_argument("--d-ff", type=int, default=128)
    p.add_argument("--max-seq-len", type=int, default=512)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--use-phone", action="store_true")
    p.add_argument("--forward-step", type=int, default=10)
    p.add_argument("--max-sentences", type=int, default=60)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--learning-rate", type=float, default=5e-5)
    p.add_argument("--adam-beta1", type=float, default=0.9)
    p.add_argument("--adam-beta2", type=float, default=0.999)
    p.add_argument("--adam-eps", type=float, default=1e-8)
    p.add_argument("--window-mode", choices=["fixed", "adaptive"], default="fixed")
    p.add_argument("--max-backward-step", type=int, default=10)
    p.add_argument("--grad-accumulation", type=int, default=1)
    p.add_argument("--no-shuffle", dest="shuffle", action="store_false")
    p.add_argument("--target-dev-f1", type=float, default=None, help="stop once dev F1 reaches this value")
    p.add_argument("--left-ctx", type=int, default=128)
    p.add_argument("--right-ctx", type=int, default=128)

    p = add("segment", cmd_segment, "segment documents with a trained model")
    p.add_argument("--model")
    p.add_argument("--corpus")
    p.add_argument("--vocab")
    p.add_argument("--lexicon")
    p.add_argument("--out")
    p.add_argument("--strategy", choices=["fixed", "adaptive", "cross-segment"], default="fixed")
    _window_flags(p)

    p = add("eval", cmd_eval, "score segmentations against references")
    p.add_argument("--pred", nargs="+", help="segmentation files, one per seed")
    p.add_argument("--ref")
    p.add_argument("--out")
    p.add_argument("--compare", nargs="+", help="segmentation files of a second system for a paired test")

    p = add("bench", cmd_bench, "sweep step sizes for F1, encoder calls and wall time")
    p.add_argument("--model")
    p.add_argument("--baseline-model")
    p.add_argument("--corpus")
    p.add_argument("--vocab")
    p.add_argument("--lexicon")
    p.add_argument("--out")
    p.add_argument("--series-dir")
    p.add_argument("--steps", type=int, nargs="+", default=[1, 3, 5, 7, 10])
    _window_flags(p)

    p = add("aggregate", cmd_aggregate, "aggregate annotator votes into corpus labels")
    p.add_argument("--corpus")
    p.add_argument("--annotations")
    p.add_argument("--out")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--positive-threshold", type=int, default=3)
    p.add_argument("--screening-annotations")
    p.add_argument("--screening-refs")
    p.add_argument("--min-f1", type=float, default=0.6)

    p = add("gradcheck", cmd_gradcheck, "compare gradients with finite differences")
    p.add_argument("--d-model", type=int, default=8)
    p.add_argument("--n-layers", type=int, default=1)
    p.add_argument("--n-heads", type=int, default=1)
    p.add_argument("--d-ff", type=int, default=16)
    p.add_argument("--sentences", type=int, default=3)
    p.add_argument("--tokens-per-sentence", type=int, default=2)
    p.add_argument("--token-types", type=int, default=8)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--coordinates", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--only", help="check only parameters under this path prefix, e.g. classifier")
    return parser, subs


def _effective(args) -> Dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "parser", "config", "verbose", "workers")}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)

    try:
        path = config_path(known.config)
        if path:
            apply_file_defaults(subs, read_config_file(path))
    except (ValueError, OSError) as err:
        print(f"docseg: config error: {err}", file=sys.stderr)
        return EXIT_DATA

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    print(f"docseg {args.command} config {fingerprint(_effective(args))}")

    try:
        status = args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except FloatingPointError as err:
        logger.error("numerical failure: %s", err)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError) as err:
        logger.error("data error: %s", err)
        print(f"docseg {args.command}: {err}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK if status is None else status


def _check_stage(name: str, argv: List[str], outputs: Sequence[Path]) -> None:
    status = run(argv)
    if status != EXIT_OK:
        raise RuntimeError(f"pipeline stage {name} failed with exit status {status}")
    for out in outputs:
        if not out.exists() or out.stat().st_size == 0:
            raise RuntimeError(f"pipeline stage {name} produced no output at {out}")


def pipeline_smoke(tmpdir, seed: int = 0, steps: Sequence[int] = (1, 5)) -> Path:
    r"""End-to-end run on a tiny synthetic corpus.

    synth, vocab, train, segment with the fixed and the adaptive window, eval
    and bench; every stage must exit with status 0 and write its outputs.

    Returns:
        the path of the evaluation report of the adaptive run.

    Raises:
        RuntimeError: naming the first stage that failed.

    """
    d = Path(tmpdir)
    s = ["--seed", str(seed)]
    corpus, test, vocab, model = d / "train.jsonl", d / "test.jsonl", d / "vocab.txt", d / "model.npz"
    window = ["--window-tokens", "64", "--window-sentences", "20"]

    _check_stage("synth", ["synth", "--out", str(corpus), "--test-out", str(test), "--n-docs", "12"] + s,
                 [corpus, test])
    _check_stage("vocab", ["vocab", "--corpus", str(corpus), "--out", str(vocab), "--max-size", "200"] + s, [vocab])
    _check_stage("train", ["train", "--corpus", str(corpus), "--vocab", str(vocab), "--out", str(model),
                           "--d-model", "16", "--n-layers", "1", "--n-heads", "2", "--d-ff", "32",
                           "--max-seq-len", "64", "--max-sentences", "20", "--epochs", "3",
                           "--learning-rate", "0.01", "--dropout", "0.0"] + s, [model])
    for strategy in ("fixed", "adaptive"):
        out = d / f"{strategy}.jsonl"
        _check_stage(f"segment {strategy}", ["segment", "--model", str(model), "--corpus", str(test), "--vocab",
                                             str(vocab), "--out", str(out), "--strategy", strategy, "--step", "3"]
                     + window + s, [out])
    report = d / "eval.jsonl"
    _check_stage("eval", ["eval", "--pred", str(d / "adaptive.jsonl"), "--ref", str(test), "--out", str(report)] + s,
                 [report])
    bench = d / "bench.jsonl"
    _check_stage("bench", ["bench", "--model", str(model), "--corpus", str(test), "--vocab", str(vocab),
                           "--out", str(bench), "--steps"] + [str(x) for x in steps] + window + s, [bench])
    return report


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
