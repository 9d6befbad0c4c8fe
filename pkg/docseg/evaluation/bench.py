import json
import logging
import time
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple

from fastprogress.fastprogress import progress_bar

from docseg.corpus.documents import Corpus, PathLike
from docseg.corpus.lexicon import PhoneLexicon
from docseg.evaluation.metrics import evaluate_segmentations
from docseg.inference.strategies import InferenceConfig, segment, segment_corpus
from docseg.model.models import SegModel
from docseg.tokenizer.wordpiece import Vocab

logger = logging.getLogger(__name__)

SWEPT_STRATEGIES = ("fixed", "adaptive")
BASELINE = "cross_segment"


class BenchRow(NamedTuple):
    r"""One benchmark configuration.

    :param strategy: inference strategy.
    :param step: step size (0 for the cross-segment baseline).
    :param f1: positive F1 on the corpus.
    :param n_encoder_calls_total: encoder invocations summed over documents.
    :param wall_ms_total: wall-clock time of the run in milliseconds (advisory).

    """
    strategy: str
    step: int
    f1: float
    n_encoder_calls_total: int
    wall_ms_total: float


class BenchReport(NamedTuple):
    rows: Tuple[BenchRow, ...]

    def row(self, strategy: str, step: int) -> BenchRow:
        for r in self.rows:
            if (r.strategy, r.step) == (strategy, step):
                return r
        raise KeyError(f"no bench row for {strategy} at step {step}")


def _timed_run(corpus, model, cfg, vocab, lexicon, workers) -> BenchRow:
    start = time.perf_counter()
    results = segment_corpus(corpus, model, cfg, vocab, lexicon, workers)
    wall_ms = 1000.0 * (time.perf_counter() - start)
    step = 0 if cfg.strategy == BASELINE else cfg.step
    row = BenchRow(cfg.strategy, step, evaluate_segmentations(results, corpus).f1,
                   sum(r.n_encoder_calls for r in results), wall_ms)
    logger.info("%s step %d: F1 %.4f, %d encoder calls, %.1f ms", row.strategy, row.step, row.f1,
                row.n_encoder_calls_total, row.wall_ms_total)
    return row


def bench_sweep(model: SegModel,
                baseline_model: Optional[SegModel],
                corpus: Corpus,
                steps: Sequence[int],
                vocab: Vocab,
                lexicon: Optional[PhoneLexicon] = None,
                config: InferenceConfig = InferenceConfig(),
                workers: int = 1,
                verbose: bool = False) -> BenchReport:
    r"""Run fixed and adaptive inference at every step size, plus the baseline once.

    Every strategy is first run on one document so that compilation is
    excluded from the timings. F1 and call counts are deterministic; wall
    times depend on the machine.

    Args:
        model: windowed sentence model.
        baseline_model: cross-segment model, or None to skip the baseline row.
        corpus: labeled evaluation documents.
        steps: step sizes to sweep.
        vocab: subword vocabulary.
        lexicon: phone lexicon for models using phones.
        config: window budget, contexts and threshold shared by all runs.
        workers: documents segmented in parallel.
        verbose: show a progress bar.

    Returns:
        one row per (strategy, step), the baseline last.

    """
    steps = list(dict.fromkeys(steps))
    if any(s < 1 for s in steps):
        raise ValueError("step sizes must be at least 1")
    if len(corpus) == 0:
        raise ValueError("cannot benchmark on an empty corpus")

    runs = [(model, config._replace(strategy=strategy, step=step)) for step in steps for strategy in SWEPT_STRATEGIES]
    if baseline_model is not None:
        runs.append((baseline_model, config._replace(strategy=BASELINE)))

    warm = corpus.documents[0]
    for m, cfg in {cfg.strategy: (m, cfg) for m, cfg in runs}.values():
        segment(warm, m, cfg, vocab, lexicon)

    rows: List[BenchRow] = []
    for m, cfg in (progress_bar(runs) if verbose else runs):
        rows.append(_timed_run(corpus, m, cfg, vocab, lexicon, workers))
    return BenchReport(tuple(rows))


def format_bench_table(report: BenchReport) -> str:
    lines = [f"{'strategy':<14} {'step':>5} {'F1':>7} {'calls':>8} {'ms':>10}"]
    for r in report.rows:
        lines.append(f"{r.strategy:<14} {r.step:5d} {r.f1:7.4f} {r.n_encoder_calls_total:8d} {r.wall_ms_total:10.1f}")
    return "\n".join(lines)


def bench_series(report: BenchReport, strategy: str, value: str = "f1") -> List[Tuple[int, float]]:
    """``(step, value)`` pairs of one strategy, sorted by step."""
    if value not in ("f1", "n_encoder_calls_total", "wall_ms_total"):
        raise ValueError(f"unknown series value {value!r}")
    return sorted((r.step, getattr(r, value)) for r in report.rows if r.strategy == strategy)


def save_bench(report: BenchReport, path: PathLike, series_dir: Optional[PathLike] = None) -> None:
    r"""Write bench rows as line-delimited records.

    If ``series_dir`` is given, one tab-separated ``step value`` file is
    written per swept strategy and value, e.g. ``adaptive_f1.tsv``.

    """
    with open(path, "w", encoding="utf-8") as f:
        for r in report.rows:
            f.write(json.dumps(r._asdict()) + "\n")
    if series_dir is None:
        return
    series_dir = Path(series_dir)
    series_dir.mkdir(parents=True, exist_ok=True)
    for strategy in sorted({r.strategy for r in report.rows} - {BASELINE}):
        for value in ("f1", "n_encoder_calls_total", "wall_ms_total"):
            with open(series_dir / f"{strategy}_{value}.tsv", "w", encoding="utf-8") as f:
                for step, v in bench_series(report, strategy, value):
                    f.write(f"{step}\t{v}\n")


def load_bench(path: PathLike) -> BenchReport:
    with open(path, "r", encoding="utf-8") as f:
        return BenchReport(tuple(BenchRow(**json.loads(line)) for line in f if line.strip()))
