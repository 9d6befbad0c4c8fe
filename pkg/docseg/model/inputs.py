from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
import jax.numpy as jnp
from jaxtyping import Array, Bool, Int

from docseg.model.models import ModelConfig
from docseg.tokenizer.wordpiece import CLS, PAD
from docseg.types import Span


class WindowInput(NamedTuple):
    r"""One encoder input: a block of sentences prefixed with ``[CLS]``.

    :param token_ids: token ids; position 0 is ``[CLS]``.
    :param sentence_spans: one half-open token range per sentence, ordered and disjoint.
    :param phone_ids: optional per-token phone ids of the token's source word;
        an empty tuple means no phone contribution for that token.

    """
    token_ids: Tuple[int, ...]
    sentence_spans: Tuple[Span, ...]
    phone_ids: Optional[Tuple[Tuple[int, ...], ...]] = None

    @property
    def num_sentences(self) -> int:
        return len(self.sentence_spans)


class WindowArrays(NamedTuple):
    r"""Padded, fixed-shape form of a :class:`WindowInput` (optionally with a leading batch axis).

    :param token_ids: token ids, ``[PAD]`` beyond the window.
    :param token_mask: True at real (non-PAD) positions.
    :param sentence_ids: index of the sentence each token belongs to, -1 for none.
    :param sentence_mask: True for real sentence slots.
    :param phone_ids: phone ids per token, padded with 0.
    :param phone_mask: True for real phone slots.

    """
    token_ids: Int[Array, "num_tokens"]
    token_mask: Bool[Array, "num_tokens"]
    sentence_ids: Int[Array, "num_tokens"]
    sentence_mask: Bool[Array, "num_sentences"]
    phone_ids: Int[Array, "num_tokens num_phones"]
    phone_mask: Bool[Array, "num_tokens num_phones"]


def validate_window(window: WindowInput, config: ModelConfig, cls_span: bool = False) -> None:
    """Check a window against the model's vocabulary sizes and the span invariants.

    Args:
        window: window to check.
        config: model architecture.
        cls_span: allow the single span ``(0, 1)`` covering ``[CLS]``, as used by
            the cross-segment baseline.

    """
    n = len(window.token_ids)
    if n == 0 or n > config.max_seq_len:
        raise ValueError(f"window length {n} outside [1, {config.max_seq_len}]")
    if window.token_ids[0] != CLS:
        raise ValueError("window must start with [CLS]")
    if any(not 0 <= t < config.vocab_size for t in window.token_ids):
        raise ValueError("token id out of range")
    if not window.sentence_spans:
        raise ValueError("window has no sentences")

    lowest = 0 if cls_span else 1
    for start, end in window.sentence_spans:
        if not lowest <= start < end <= n:
            raise ValueError(f"invalid sentence span {(start, end)}")
        lowest = end

    if window.phone_ids is not None:
        if len(window.phone_ids) != n:
            raise ValueError("phone plan length must equal token count")
        limit = config.phone_vocab_size
        if any(not 0 <= p < limit for phones in window.phone_ids for p in phones):
            raise ValueError("phone id out of range")


def pad_window(window: WindowInput, num_tokens: int, num_sentences: int, num_phones: int = 1) -> WindowArrays:
    """Pad a window to fixed shapes so that jitted functions compile once."""
    n = len(window.token_ids)
    if n > num_tokens or window.num_sentences > num_sentences:
        raise ValueError("window does not fit the padded shape")

    token_ids = np.full(num_tokens, PAD, dtype=np.int32)
    token_ids[:n] = window.token_ids
    token_mask = np.arange(num_tokens) < n
    sentence_ids = np.full(num_tokens, -1, dtype=np.int32)
    for m, (start, end) in enumerate(window.sentence_spans):
        sentence_ids[start:end] = m
    sentence_mask = np.arange(num_sentences) < window.num_sentences

    phone_ids = np.zeros((num_tokens, num_phones), dtype=np.int32)
    phone_mask = np.zeros((num_tokens, num_phones), dtype=bool)
    if window.phone_ids is not None:
        for t, phones in enumerate(window.phone_ids):
            phones = phones[:num_phones]
            phone_ids[t, :len(phones)] = phones
            phone_mask[t, :len(phones)] = True

    return WindowArrays(token_ids, token_mask, sentence_ids, sentence_mask, phone_ids, phone_mask)


def stack_windows(arrays: Sequence[WindowArrays]) -> WindowArrays:
    """Stack padded windows along a new leading batch axis."""
    return WindowArrays(*(jnp.asarray(np.stack(field)) for field in zip(*arrays)))


def to_device(arrays: WindowArrays) -> WindowArrays:
    return WindowArrays(*(jnp.asarray(x) for x in arrays))


def pad_labels(labels: Sequence[bool], num_sentences: int) -> np.ndarray:
    out = np.zeros(num_sentences, dtype=np.int32)
    out[:len(labels)] = np.asarray(labels, dtype=np.int32)
    return out
