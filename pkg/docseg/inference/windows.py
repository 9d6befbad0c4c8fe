from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from docseg.corpus.documents import Document
from docseg.corpus.lexicon import PhoneLexicon, phone_inventory
from docseg.model.inputs import WindowInput
from docseg.tokenizer.wordpiece import CLS, SEP, Vocab, tokenize_sentence

PhonePlan = Tuple[Tuple[int, ...], ...]


class SentenceTokens(NamedTuple):
    r"""A tokenized sentence ready for window assembly.

    :param token_ids: subword ids.
    :param phone_ids: per token, the phone ids of its source word, or None when phones are unused.

    """
    token_ids: Tuple[int, ...]
    phone_ids: Optional[PhonePlan] = None

    def __len__(self):
        return len(self.token_ids)


class DocumentTokens(NamedTuple):
    r"""Tokenized sentences of one document.

    :param sentences: one entry per document sentence.
    :param phone_width: padded width of the per-token phone lists.

    """
    sentences: Tuple[SentenceTokens, ...]
    phone_width: int = 1

    @property
    def num_sentences(self) -> int:
        return len(self.sentences)

    @property
    def uses_phones(self) -> bool:
        return bool(self.sentences) and self.sentences[0].phone_ids is not None


def phone_index(lexicon: PhoneLexicon) -> Dict[str, int]:
    return {p: i for i, p in enumerate(phone_inventory(lexicon))}


def tokenize_document(doc: Document, vocab: Vocab, lexicon: Optional[PhoneLexicon] = None) -> DocumentTokens:
    """Tokenize every sentence; with a lexicon, attach each word's canonical phone ids to its tokens."""
    index = phone_index(lexicon) if lexicon is not None else None
    sentences = []
    for sentence in doc.sentences:
        tokens = tokenize_sentence(sentence, vocab)
        phones = None
        if index is not None:
            plan = []
            for word, (start, end) in zip(sentence.words, tokens.word_spans):
                ids = tuple(index[p] for p in lexicon.lookup(word) or ())
                plan.extend([ids] * (end - start))
            phones = tuple(plan)
        sentences.append(SentenceTokens(tokens.token_ids, phones))
    width = lexicon.max_phones if lexicon is not None else 1
    return DocumentTokens(tuple(sentences), width)


def assemble_window(sentences: Sequence[SentenceTokens], caps: Optional[Sequence[int]] = None) -> WindowInput:
    """``[CLS]`` followed by the given sentences, each cut to at most ``caps[m]`` tokens."""
    token_ids, spans = [CLS], []
    use_phones = bool(sentences) and sentences[0].phone_ids is not None
    phones = [()]
    for m, sentence in enumerate(sentences):
        take = len(sentence) if caps is None else min(len(sentence), caps[m])
        spans.append((len(token_ids), len(token_ids) + take))
        token_ids.extend(sentence.token_ids[:take])
        if use_phones:
            phones.extend(sentence.phone_ids[:take])
    return WindowInput(tuple(token_ids), tuple(spans), tuple(phones) if use_phones else None)


def pack_window(tokens: DocumentTokens, start: int, token_budget: int, max_sentences: int) -> Tuple[WindowInput, int]:
    r"""Fill a window with whole sentences starting at ``start``.

    Sentences are appended until ``max_sentences`` is reached or the
    ``token_budget - 1`` tokens after ``[CLS]`` are used up. The last sentence
    that does not fit is tail-truncated and kept, as at least one of its tokens
    fits.

    Args:
        tokens: tokenized document.
        start: index of the first sentence.
        token_budget: window length in tokens, ``[CLS]`` included.
        max_sentences: maximum number of sentences.

    Returns:
        the window and the index of its last sentence.

    """
    if not 0 <= start < tokens.num_sentences:
        raise ValueError(f"start {start} outside document of {tokens.num_sentences} sentences")
    if token_budget < 2 or max_sentences < 1:
        raise ValueError("window must hold at least one sentence token")

    available, caps = token_budget - 1, []
    index = start
    while index < tokens.num_sentences and len(caps) < max_sentences and available > 0:
        take = min(len(tokens.sentences[index]), available)
        caps.append(take)
        available -= take
        index += 1
        if take < len(tokens.sentences[index - 1]):
            break
    window = assemble_window(tokens.sentences[start:index], caps)
    return window, index - 1


def cross_segment_window(tokens: DocumentTokens, break_index: int, left: int, right: int) -> WindowInput:
    r"""Window for the candidate break after sentence ``break_index``.

    ``[CLS]`` + the last ``left`` tokens up to and including the sentence
    + ``[SEP]`` + the first ``right`` tokens after it. The single span covers
    ``[CLS]``, whose hidden state is classified.

    """
    if not 0 <= break_index < tokens.num_sentences - 1:
        raise ValueError(f"no candidate break after sentence {break_index}")

    def flatten(sentences):
        ids = [t for s in sentences for t in s.token_ids]
        phones = [p for s in sentences for p in s.phone_ids] if tokens.uses_phones else []
        return ids, phones

    left_ids, left_phones = flatten(tokens.sentences[:break_index + 1])
    right_ids, right_phones = flatten(tokens.sentences[break_index + 1:])
    cut = max(len(left_ids) - left, 0)
    token_ids = [CLS] + left_ids[cut:] + [SEP] + right_ids[:right]
    phone_ids = None
    if tokens.uses_phones:
        phone_ids = tuple([()] + left_phones[cut:] + [()] + right_phones[:right])
    return WindowInput(tuple(token_ids), ((0, 1),), phone_ids)
