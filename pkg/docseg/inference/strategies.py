import json
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from docseg.corpus.documents import Corpus, Document, PathLike
from docseg.corpus.lexicon import PhoneLexicon
from docseg.inference.windows import DocumentTokens, cross_segment_window, pack_window, tokenize_document
from docseg.model.encoder import window_probs
from docseg.model.inputs import WindowInput, pad_window, to_device, validate_window
from docseg.model.models import SegModel
from docseg.tokenizer.wordpiece import Vocab

logger = logging.getLogger(__name__)

STRATEGIES = ("fixed", "adaptive", "cross_segment")

Scorer = Callable[[WindowInput], Sequence[float]]


class InferenceConfig(NamedTuple):
    r"""Windowed inference settings.

    :param strategy: ``fixed``, ``adaptive`` or ``cross_segment``.
    :param window_token_budget: window length in tokens, ``[CLS]`` included.
    :param max_window_sentences: maximum sentences per window.
    :param step: for ``fixed``, the next window starts at ``last - step + 1``;
        for ``adaptive``, the maximum backward step size.
    :param left_context: cross-segment left context in tokens.
    :param right_context: cross-segment right context in tokens.
    :param threshold: a sentence is a boundary iff its probability exceeds this.

    """
    strategy: str = "fixed"
    window_token_budget: int = 512
    max_window_sentences: int = 60
    step: int = 10
    left_context: int = 128
    right_context: int = 128
    threshold: float = 0.5


def validate_inference_config(cfg: InferenceConfig) -> None:
    if cfg.strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {cfg.strategy!r}; expected one of {STRATEGIES}")
    if cfg.step < 1:
        raise ValueError("step must be at least 1")
    if not 0.0 < cfg.threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    if cfg.window_token_budget < 2 or cfg.max_window_sentences < 1:
        raise ValueError("window must hold at least one sentence token")
    if cfg.left_context < 0 or cfg.right_context < 0:
        raise ValueError("context lengths must be non-negative")


class SegmentationResult(NamedTuple):
    r"""Segmentation of one document.

    :param doc_id: document id.
    :param probs: finalized boundary probability per sentence.
    :param decisions: ``probs > threshold`` per sentence.
    :param n_encoder_calls: number of encoder invocations.
    :param n_windows: number of windows scored.
    :param window_starts: first sentence (or candidate break) of every window, in order.

    """
    doc_id: str
    probs: Tuple[float, ...]
    decisions: Tuple[bool, ...]
    n_encoder_calls: int
    n_windows: int
    window_starts: Tuple[int, ...]


class WindowTrace(NamedTuple):
    probs: Tuple[float, ...]
    window_starts: Tuple[int, ...]
    n_calls: int


def _score_checked(score: Scorer, window, first: int, last: int) -> List[float]:
    probs = [float(p) for p in score(window)]
    if len(probs) != last - first + 1:
        raise ValueError(f"scorer returned {len(probs)} probabilities for sentences {first}..{last}")
    return probs


def run_fixed(num_sentences: int, pack, score: Scorer, step: int) -> WindowTrace:
    r"""Fixed sliding window.

    After scoring a window over sentences ``[a, b]`` the next window starts at
    ``max(b - step + 1, a + 1)``; sentences before it are finalized from the
    current window. The window reaching the last sentence finalizes the rest.

    Args:
        num_sentences: document length in sentences.
        pack: ``pack(start) -> (window, last_index)``.
        score: ``score(window) -> probabilities of the window's sentences``.
        step: overlap control; 1 keeps one sentence of overlap.

    """
    probs: List[Optional[float]] = [None] * num_sentences
    starts, a = [], 0
    while a < num_sentences:
        window, b = pack(a)
        p = _score_checked(score, window, a, b)
        starts.append(a)
        next_start = num_sentences if b == num_sentences - 1 else max(b - step + 1, a + 1)
        probs[a:next_start] = p[:next_start - a]
        a = next_start
    return WindowTrace(tuple(probs), tuple(starts), len(starts))


def run_adaptive(num_sentences: int, pack, score: Scorer, step: int, threshold: float) -> WindowTrace:
    r"""Self-adaptive sliding window.

    After scoring ``[a, b]``, the span ``[max(a, b - step + 1), b]`` is searched
    for predicted boundaries. The next window starts right after the latest
    one, or at ``b`` when there is none, and never before ``a + 1``.

    Args:
        num_sentences: document length in sentences.
        pack: ``pack(start) -> (window, last_index)``.
        score: ``score(window) -> probabilities of the window's sentences``.
        step: maximum backward step size.
        threshold: boundary threshold.

    """
    probs: List[Optional[float]] = [None] * num_sentences
    starts, a = [], 0
    while a < num_sentences:
        window, b = pack(a)
        p = _score_checked(score, window, a, b)
        starts.append(a)
        if b == num_sentences - 1:
            next_start = num_sentences
        else:
            found = [i for i in range(max(a, b - step + 1), b + 1) if p[i - a] > threshold]
            next_start = max(found[-1] + 1 if found else b, a + 1)
        probs[a:next_start] = p[:next_start - a]
        a = next_start
    return WindowTrace(tuple(probs), tuple(starts), len(starts))


def run_cross_segment(num_sentences: int, window_for, score: Scorer) -> WindowTrace:
    """One scorer call per candidate break; the document-final sentence is a boundary with probability 1."""
    probs = []
    for i in range(num_sentences - 1):
        probs.append(_score_checked(score, window_for(i), 0, 0)[0])
    if num_sentences:
        probs.append(1.0)
    return WindowTrace(tuple(probs), tuple(range(num_sentences - 1)), max(num_sentences - 1, 0))


def model_scorer(model: SegModel, num_tokens: int, num_sentences: int, phone_width: int = 1) -> Scorer:
    """Score windows with ``model``, padding every window to one shape so the encoder compiles once."""

    def score(window: WindowInput):
        validate_window(window, model.config, cls_span=window.sentence_spans[:1] == ((0, 1),))
        arrays = to_device(pad_window(window, num_tokens, num_sentences, phone_width))
        probs = np.asarray(window_probs(model.params, arrays, model.config))[:window.num_sentences]
        if not np.all(np.isfinite(probs)):
            raise FloatingPointError("numerical overflow")
        return probs

    return score


def _tokens_for(doc: Document, model: Optional[SegModel], vocab: Vocab, lexicon: Optional[PhoneLexicon]):
    if model is not None and not model.config.use_phone:
        lexicon = None
    elif model is not None and lexicon is None:
        raise ValueError("model uses phone embeddings but no lexicon was given")
    return tokenize_document(doc, vocab, lexicon)


def fit_to_model(cfg: InferenceConfig, model: Optional[SegModel]) -> InferenceConfig:
    """Shrink the window budget and the cross-segment contexts to the model's ``max_seq_len``."""
    if model is None:
        return cfg
    max_len = model.config.max_seq_len
    budget = min(cfg.window_token_budget, max_len)
    left = min(cfg.left_context, (max_len - 2) // 2)
    right = min(cfg.right_context, max_len - 2 - left)
    if (budget, left, right) != (cfg.window_token_budget, cfg.left_context, cfg.right_context):
        logger.debug("windows clipped to max_seq_len=%d", max_len)
    return cfg._replace(window_token_budget=budget, left_context=left, right_context=right)


def _result(doc: Document, trace: WindowTrace, threshold: float) -> SegmentationResult:
    decisions = tuple(p > threshold for p in trace.probs)
    logger.debug("%s: %d windows", doc.id, len(trace.window_starts))
    return SegmentationResult(doc.id, trace.probs, decisions, trace.n_calls, len(trace.window_starts),
                              trace.window_starts)


def _windowed(doc, model, cfg, vocab, lexicon, scorer):
    validate_inference_config(cfg)
    cfg = fit_to_model(cfg, model)
    tokens: DocumentTokens = _tokens_for(doc, model, vocab, lexicon)
    pack = lambda start: pack_window(tokens, start, cfg.window_token_budget, cfg.max_window_sentences)
    score = scorer or model_scorer(model, cfg.window_token_budget, cfg.max_window_sentences, tokens.phone_width)
    return tokens, pack, score


def segment_fixed(doc: Document, model: Optional[SegModel], cfg: InferenceConfig, vocab: Vocab,
                  lexicon: Optional[PhoneLexicon] = None, scorer: Optional[Scorer] = None) -> SegmentationResult:
    """Segment ``doc`` with the fixed sliding window (``scorer`` overrides the model if given)."""
    tokens, pack, score = _windowed(doc, model, cfg, vocab, lexicon, scorer)
    return _result(doc, run_fixed(tokens.num_sentences, pack, score, cfg.step), cfg.threshold)


def segment_adaptive(doc: Document, model: Optional[SegModel], cfg: InferenceConfig, vocab: Vocab,
                     lexicon: Optional[PhoneLexicon] = None, scorer: Optional[Scorer] = None) -> SegmentationResult:
    """Segment ``doc`` with the self-adaptive sliding window (``scorer`` overrides the model if given)."""
    tokens, pack, score = _windowed(doc, model, cfg, vocab, lexicon, scorer)
    return _result(doc, run_adaptive(tokens.num_sentences, pack, score, cfg.step, cfg.threshold), cfg.threshold)


def segment_cross_segment(doc: Document, model: Optional[SegModel], cfg: InferenceConfig, vocab: Vocab,
                          lexicon: Optional[PhoneLexicon] = None,
                          scorer: Optional[Scorer] = None) -> SegmentationResult:
    """Classify every candidate break from its left and right token contexts, one encoder call each."""
    validate_inference_config(cfg)
    cfg = fit_to_model(cfg, model)
    num_tokens = cfg.left_context + cfg.right_context + 2
    tokens = _tokens_for(doc, model, vocab, lexicon)
    window_for = lambda i: cross_segment_window(tokens, i, cfg.left_context, cfg.right_context)
    score = scorer or model_scorer(model, num_tokens, 1, tokens.phone_width)
    return _result(doc, run_cross_segment(tokens.num_sentences, window_for, score), cfg.threshold)


_DISPATCH = dict(fixed=segment_fixed, adaptive=segment_adaptive, cross_segment=segment_cross_segment)


def segment(doc: Document, model: Optional[SegModel], cfg: InferenceConfig, vocab: Vocab,
            lexicon: Optional[PhoneLexicon] = None, scorer: Optional[Scorer] = None) -> SegmentationResult:
    validate_inference_config(cfg)
    return _DISPATCH[cfg.strategy](doc, model, cfg, vocab, lexicon, scorer)


def segment_corpus(corpus: Corpus, model: SegModel, cfg: InferenceConfig, vocab: Vocab,
                   lexicon: Optional[PhoneLexicon] = None, workers: int = 1) -> List[SegmentationResult]:
    r"""Segment every document, in corpus order.

    With ``workers > 1`` documents are processed by a thread pool sharing the
    read-only model.

    """
    run = lambda doc: segment(doc, model, cfg, vocab, lexicon)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, corpus.documents))
    else:
        results = [run(doc) for doc in corpus.documents]
    logger.info("segmented %d documents with %s windows: %d encoder calls",
                len(results), cfg.strategy, sum(r.n_encoder_calls for r in results))
    return results


def count_encoder_calls(result: SegmentationResult) -> int:
    return result.n_encoder_calls


def save_segmentations(results: Sequence[SegmentationResult], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in results:
            record = dict(id=r.doc_id, probs=list(r.probs), decisions=list(r.decisions),
                          n_windows=r.n_windows, n_encoder_calls=r.n_encoder_calls,
                          window_starts=list(r.window_starts))
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_segmentations(path: PathLike) -> List[SegmentationResult]:
    results = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                r = json.loads(line)
                results.append(SegmentationResult(
                    r["id"], tuple(float(p) for p in r["probs"]), tuple(bool(d) for d in r["decisions"]),
                    int(r["n_encoder_calls"]), int(r["n_windows"]), tuple(r.get("window_starts", ()))))
            except (json.JSONDecodeError, KeyError, TypeError) as err:
                raise ValueError(f"malformed segmentation record at line {lineno}: {err}") from err
            if len(results[-1].probs) != len(results[-1].decisions):
                raise ValueError(f"probs and decisions differ in length at line {lineno}")
    return results
