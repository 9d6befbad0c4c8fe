import logging
from typing import List, NamedTuple, Optional, Tuple

from docseg.corpus.documents import Document
from docseg.corpus.lexicon import PhoneLexicon
from docseg.inference.windows import DocumentTokens, assemble_window, cross_segment_window, tokenize_document
from docseg.model.inputs import WindowInput
from docseg.tokenizer.wordpiece import Vocab

logger = logging.getLogger(__name__)

WINDOW_MODES = ("fixed", "adaptive")


class TrainConfig(NamedTuple):
    r"""Training settings.

    :param forward_step: sentence stride between training windows.
    :param max_sentences: maximum sentences per training window.
    :param max_seq_len: maximum window length in tokens, ``[CLS]`` included.
    :param batch_size: windows per optimizer step.
    :param epochs: passes over the samples.
    :param learning_rate: Adam learning rate.
    :param adam_beta1: first moment decay.
    :param adam_beta2: second moment decay.
    :param adam_eps: Adam denominator offset.
    :param seed: seed for initialization, shuffling and dropout.
    :param window_mode: ``fixed`` windows, or ``adaptive`` windows that restart
        after the latest reference boundary within ``max_backward_step`` sentences.
    :param max_backward_step: backward span of the adaptive window mode.
    :param grad_accumulation: minibatches averaged per optimizer update.
    :param shuffle: shuffle samples every epoch.
    :param target_dev_f1: stop once dev F1 reaches this value (needs a dev corpus).

    """
    forward_step: int = 10
    max_sentences: int = 60
    max_seq_len: int = 512
    batch_size: int = 8
    epochs: int = 2
    learning_rate: float = 5e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    window_mode: str = "fixed"
    max_backward_step: int = 10
    grad_accumulation: int = 1
    shuffle: bool = True
    target_dev_f1: Optional[float] = None


def validate_train_config(cfg: TrainConfig) -> None:
    if cfg.forward_step < 1:
        raise ValueError("forward_step must be at least 1")
    if cfg.max_sentences < cfg.forward_step:
        raise ValueError("max_sentences must be at least forward_step")
    if cfg.max_sentences > cfg.max_seq_len - 1:
        raise ValueError("max_sentences cannot exceed max_seq_len - 1")
    if cfg.batch_size < 1 or cfg.epochs < 0 or cfg.grad_accumulation < 1:
        raise ValueError("batch_size and grad_accumulation must be positive, epochs non-negative")
    if cfg.learning_rate < 0:
        raise ValueError("learning_rate must be non-negative")
    if cfg.window_mode not in WINDOW_MODES:
        raise ValueError(f"unknown window_mode {cfg.window_mode!r}")
    if cfg.max_backward_step < 1:
        raise ValueError("max_backward_step must be at least 1")
    if cfg.target_dev_f1 is not None and not 0.0 <= cfg.target_dev_f1 <= 1.0:
        raise ValueError("target_dev_f1 must lie in [0, 1]")


class TrainSample(NamedTuple):
    r"""One training window with its labels.

    :param window: encoder input.
    :param labels: boundary label per sentence span.
    :param variant: ``tail_truncate``, ``per_sentence_truncate`` or ``cross_segment``.
    :param start: index of the first sentence (or of the candidate break) in the document.

    """
    window: WindowInput
    labels: Tuple[bool, ...]
    variant: str
    start: int = 0


def tail_truncate(tokens: DocumentTokens, start: int, stop: int, max_seq_len: int) -> Tuple[List[int], int]:
    """Per-sentence token counts for whole sentences from ``start`` until the budget runs out."""
    available, caps = max_seq_len - 1, []
    for index in range(start, stop):
        take = min(len(tokens.sentences[index]), available)
        if take == 0:
            break
        caps.append(take)
        available -= take
    return caps, start + len(caps)


def per_sentence_truncate(tokens: DocumentTokens, start: int, stop: int, max_seq_len: int) -> List[int]:
    """Cap every sentence of ``[start, stop)`` at ``(max_seq_len - 1) // n`` tokens."""
    cap = (max_seq_len - 1) // (stop - start)
    return [min(len(tokens.sentences[i]), cap) for i in range(start, stop)]


def _window_starts(doc: Document, tokens: DocumentTokens, cfg: TrainConfig) -> List[int]:
    n = doc.num_sentences
    if cfg.window_mode == "fixed":
        return list(range(0, n, cfg.forward_step))

    # adaptive: restart after the latest reference boundary in the backward span of the tail window
    starts, a, labels = [], 0, doc.labels
    while a < n:
        starts.append(a)
        _, stop = tail_truncate(tokens, a, min(a + cfg.max_sentences, n), cfg.max_seq_len)
        b = stop - 1
        if b >= n - 1:
            break
        found = [i for i in range(max(a, b - cfg.max_backward_step + 1), b + 1) if labels[i]]
        a = max(found[-1] + 1 if found else b, a + 1)
    return starts


def build_training_samples(doc: Document, vocab: Vocab, lexicon: Optional[PhoneLexicon],
                           cfg: TrainConfig) -> List[TrainSample]:
    r"""Training windows of one document in both truncation variants.

    Windows start every ``forward_step`` sentences (or after reference
    boundaries in the adaptive window mode) and hold up to ``max_sentences``
    sentences. The ``tail_truncate`` variant keeps whole sentences until the
    ``max_seq_len - 1`` token budget is used up, cutting the last one; the
    ``per_sentence_truncate`` variant keeps every sentence and caps each at
    ``(max_seq_len - 1) // n`` tokens. Identical samples are emitted once.

    Args:
        doc: labeled document.
        vocab: subword vocabulary.
        lexicon: phone lexicon, or None to train without phones.
        cfg: training settings.

    Returns:
        the samples, in window order.

    """
    validate_train_config(cfg)
    tokens = tokenize_document(doc, vocab, lexicon)
    labels = doc.labels
    samples, seen = [], set()

    def emit(start, caps, variant):
        window = assemble_window(tokens.sentences[start:start + len(caps)], caps)
        sample = TrainSample(window, labels[start:start + len(caps)], variant, start)
        key = (window, sample.labels)
        if key not in seen:
            seen.add(key)
            samples.append(sample)

    for start in _window_starts(doc, tokens, cfg):
        stop = min(start + cfg.max_sentences, doc.num_sentences)
        caps, _ = tail_truncate(tokens, start, stop, cfg.max_seq_len)
        emit(start, caps, "tail_truncate")
        emit(start, per_sentence_truncate(tokens, start, stop, cfg.max_seq_len), "per_sentence_truncate")
    logger.debug("%s: %d training samples", doc.id, len(samples))
    return samples


def build_cross_segment_samples(doc: Document, vocab: Vocab, lexicon: Optional[PhoneLexicon],
                                left: int = 128, right: int = 128) -> List[TrainSample]:
    """One sample per candidate break (every sentence but the last), labeled with the sentence's boundary."""
    tokens = tokenize_document(doc, vocab, lexicon)
    return [TrainSample(cross_segment_window(tokens, i, left, right), (doc.labels[i],), "cross_segment", i)
            for i in range(doc.num_sentences - 1)]
