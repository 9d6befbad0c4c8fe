from collections import Counter
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from docseg.corpus.documents import Corpus, PathLike, Sentence
from docseg.types import Span

PAD, UNK, CLS, SEP = 0, 1, 2, 3
SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")
CONTINUATION = "##"


class Vocab(NamedTuple):
    r"""Subword vocabulary.

    :param tokens: token strings; the index of a token is its id. The first
        four are ``[PAD] [UNK] [CLS] [SEP]``.
    :param id_of: inverse map from token string to id.

    """
    tokens: Tuple[str, ...]
    id_of: Dict[str, int]

    def __len__(self):
        return len(self.tokens)


class TokenizedSentence(NamedTuple):
    r"""Token ids of one sentence with the token range of every source word.

    :param token_ids: concatenated subword ids.
    :param word_spans: one half-open ``(start, end)`` token range per word,
        partitioning ``[0, len(token_ids))``.

    """
    token_ids: Tuple[int, ...]
    word_spans: Tuple[Span, ...]


def make_vocab(tokens: Sequence[str]) -> Vocab:
    """Build a vocabulary from a token list, checking the specials and the bijection."""
    tokens = tuple(tokens)
    if tokens[:4] != SPECIAL_TOKENS:
        raise ValueError(f"vocabulary must start with {SPECIAL_TOKENS}")
    if any(not t for t in tokens):
        raise ValueError("vocabulary contains an empty token")
    id_of = {t: i for i, t in enumerate(tokens)}
    if len(id_of) != len(tokens):
        raise ValueError("vocabulary contains duplicate tokens")
    return Vocab(tokens, id_of)


def build_vocab(corpus: Corpus, max_size: int, max_piece_length: int = 10) -> Vocab:
    r"""Build a frequency-ranked subword vocabulary.

    The vocabulary holds the special tokens, every single character of the
    corpus, and then the most frequent candidates up to ``max_size``:
    whole words and continuation pieces (``##`` + a non-initial substring of
    a word, at most ``max_piece_length`` characters). Ties are broken
    lexicographically.

    Args:
        corpus: training corpus.
        max_size: maximum vocabulary size, at least 5 + number of distinct characters.
        max_piece_length: longest continuation piece considered.

    Returns:
        the vocabulary.

    """
    counts = Counter(w for doc in corpus.documents for s in doc.sentences for w in s.words)
    if not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")

    chars = sorted({ch for word in counts for ch in word})
    if max_size < len(SPECIAL_TOKENS) + 1 + len(chars):
        raise ValueError(f"max_size={max_size} is too small for {len(chars)} distinct characters")

    candidates = Counter()
    for word, count in counts.items():
        candidates[word] += count
        for i in range(1, len(word)):
            for j in range(i + 1, min(len(word), i + max_piece_length) + 1):
                candidates[CONTINUATION + word[i:j]] += count

    tokens = list(SPECIAL_TOKENS) + chars
    seen = set(tokens)
    for token, _ in sorted(candidates.items(), key=lambda item: (-item[1], item[0])):
        if len(tokens) >= max_size:
            break
        if token not in seen:
            tokens.append(token)
            seen.add(token)
    return make_vocab(tokens)


def _lookup(piece: str, vocab: Vocab) -> Optional[int]:
    # corpus text never produces a special token id
    i = vocab.id_of.get(piece)
    return None if i is None or i < len(SPECIAL_TOKENS) else i


def tokenize_word(word: str, vocab: Vocab) -> List[int]:
    """Greedy longest-match-first subword tokenization; an unmatchable word maps to ``[UNK]``.

    Words spelled like a special token (``[CLS]``, ``[SEP]``, ...) are split
    like any other word and never receive a special id.
    """
    whole = _lookup(word, vocab)
    if whole is not None:
        return [whole]

    pieces, start = [], 0
    while start < len(word):
        end, match = len(word), None
        while start < end:
            piece = word[start:end] if start == 0 else CONTINUATION + word[start:end]
            match = _lookup(piece, vocab)
            if match is not None:
                break
            end -= 1
        if match is None:
            return [UNK]
        pieces.append(match)
        start = end
    return pieces


def tokenize_sentence(sentence: Sentence, vocab: Vocab) -> TokenizedSentence:
    token_ids, spans = [], []
    for word in sentence.words:
        ids = tokenize_word(word, vocab)
        spans.append((len(token_ids), len(token_ids) + len(ids)))
        token_ids.extend(ids)
    return TokenizedSentence(tuple(token_ids), tuple(spans))


def detokenize(token_ids: Sequence[int], vocab: Vocab) -> List[str]:
    return [vocab.tokens[i] for i in token_ids]


def save_vocab(vocab: Vocab, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for token in vocab.tokens:
            f.write(token + "\n")


def load_vocab(path: PathLike) -> Vocab:
    with open(path, "r", encoding="utf-8") as f:
        tokens = [line.rstrip("\n") for line in f]
    while tokens and tokens[-1] == "":
        tokens.pop()
    return make_vocab(tokens)
