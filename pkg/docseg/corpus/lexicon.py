from collections import defaultdict
from typing import Dict, List, Mapping, NamedTuple, Optional, Tuple

import jax.random as jr

from docseg.corpus.documents import Corpus, Document, Sentence, PathLike, corpus_words

Phones = Tuple[str, ...]


class PhoneLexicon(NamedTuple):
    r"""Pronunciation dictionary.

    :param entries: map from word to one or more phone sequences, in file order.
        The first sequence is the canonical pronunciation.

    """
    entries: Mapping[str, Tuple[Phones, ...]]

    def lookup(self, word: str) -> Optional[Phones]:
        """Canonical (first) pronunciation of ``word``, or None if absent."""
        prons = self.entries.get(word)
        return prons[0] if prons else None

    @property
    def max_phones(self) -> int:
        """Length of the longest canonical pronunciation (at least 1)."""
        return max([len(p[0]) for p in self.entries.values()] + [1])


def make_lexicon(pairs) -> PhoneLexicon:
    """Build a lexicon from ``(word, phones)`` pairs; repeated words add alternatives."""
    entries: Dict[str, List[Phones]] = defaultdict(list)
    for word, phones in pairs:
        phones = tuple(phones)
        if not phones:
            raise ValueError(f"empty pronunciation for {word!r}")
        entries[word].append(phones)
    return PhoneLexicon({w: tuple(p) for w, p in entries.items()})


def load_lexicon(path: PathLike) -> PhoneLexicon:
    """Read a ``word<TAB>phone1 phone2 ...`` lexicon file."""
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            word, sep, phones = line.partition("\t")
            if not sep or not word or not phones.split():
                raise ValueError(f"malformed lexicon entry at line {lineno}")
            pairs.append((word, phones.split()))
    return make_lexicon(pairs)


def save_lexicon(lexicon: PhoneLexicon, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for word, prons in lexicon.entries.items():
            for phones in prons:
                f.write(word + "\t" + " ".join(phones) + "\n")


def phone_inventory(lexicon: PhoneLexicon) -> Tuple[str, ...]:
    """Sorted phone symbols of all canonical pronunciations. A phone's id is its index."""
    return tuple(sorted({p for prons in lexicon.entries.values() for p in prons[0]}))


def homophone_classes(lexicon: PhoneLexicon) -> Dict[str, Tuple[str, ...]]:
    """Map each word to the sorted words sharing its canonical pronunciation (itself included)."""
    by_phones: Dict[Phones, List[str]] = defaultdict(list)
    for word, prons in lexicon.entries.items():
        by_phones[prons[0]].append(word)
    return {word: tuple(sorted(by_phones[prons[0]])) for word, prons in lexicon.entries.items()}


def apply_homophone_noise(doc: Document, lexicon: PhoneLexicon, rate: float, seed: int = 0) -> Document:
    r"""Simulate ASR substitutions by swapping words for homophones.

    Each word is replaced, with probability ``rate``, by a uniformly chosen
    *different* member of its homophone class. Words in singleton classes or
    absent from the lexicon are never changed. Labels are preserved.

    Args:
        doc: input document.
        lexicon: pronunciation dictionary defining the homophone classes.
        rate: substitution probability in [0, 1].
        seed: random seed.

    Returns:
        the noisy document.

    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"noise rate must be in [0, 1], got {rate}")

    classes = homophone_classes(lexicon)
    num_words = sum(len(s.words) for s in doc.sentences)
    k1, k2 = jr.split(jr.PRNGKey(seed))
    flips = (jr.uniform(k1, (num_words,)) < rate).tolist()
    picks = jr.uniform(k2, (num_words,)).tolist()

    sentences, t = [], 0
    for sentence in doc.sentences:
        words = []
        for word in sentence.words:
            others = [w for w in classes.get(word, (word,)) if w != word]
            if flips[t] and others:
                word = others[min(int(picks[t] * len(others)), len(others) - 1)]
            words.append(word)
            t += 1
        sentences.append(Sentence(tuple(words), sentence.is_boundary))
    return doc._replace(sentences=tuple(sentences))


def apply_corpus_noise(corpus: Corpus, lexicon: PhoneLexicon, rate: float, seed: int = 0,
                       source: str = "spoken") -> Corpus:
    """Apply :func:`apply_homophone_noise` to every document (seed offset by document index)."""
    docs = tuple(apply_homophone_noise(doc, lexicon, rate, seed + i)._replace(source=source)
                 for i, doc in enumerate(corpus.documents))
    return corpus._replace(documents=docs)


def _phone_code(index: int, num_phones: int, length: int) -> Phones:
    digits = []
    for _ in range(length):
        index, digit = divmod(index, num_phones)
        digits.append(f"p{digit}")
    return tuple(digits)


def synthetic_lexicon(corpus: Corpus,
                      class_size: int = 1,
                      seed: int = 0,
                      cue_prefix: str = "cue",
                      cue_alternates: int = 2,
                      num_phones: int = 16,
                      phones_per_word: int = 3) -> PhoneLexicon:
    r"""Assign pronunciations to the words of a synthetic corpus.

    Regular words are shuffled and grouped into homophone classes of
    ``class_size``. Each cue word (prefix ``cue_prefix``) gets its own class
    together with ``cue_alternates`` homophones that never occur in clean
    text, named ``alt<k>of<cue word>``.

    Args:
        corpus: corpus whose words need pronunciations.
        class_size: homophone class size for regular words.
        seed: shuffling seed.
        cue_prefix: prefix identifying cue words.
        cue_alternates: number of homophone alternates per cue word.
        num_phones: phone inventory size.
        phones_per_word: pronunciation length.

    Returns:
        the lexicon.

    """
    if class_size < 1:
        raise ValueError("class_size must be at least 1")
    words = corpus_words(corpus)
    cues = [w for w in words if w.startswith(cue_prefix)]
    regular = [w for w in words if not w.startswith(cue_prefix)]
    order = jr.permutation(jr.PRNGKey(seed), len(regular)).tolist() if regular else []
    regular = [regular[i] for i in order]

    num_classes = len(cues) + -(-len(regular) // class_size)
    if num_classes > num_phones ** phones_per_word:
        raise ValueError("phone inventory too small for the requested classes")

    pairs = []
    for c, cue in enumerate(cues):
        phones = _phone_code(c, num_phones, phones_per_word)
        pairs.append((cue, phones))
        pairs.extend((f"alt{k}of{cue}", phones) for k in range(cue_alternates))
    for i, word in enumerate(regular):
        pairs.append((word, _phone_code(len(cues) + i // class_size, num_phones, phones_per_word)))
    return make_lexicon(pairs)
