from typing import NamedTuple, Tuple

import jax.random as jr

from docseg.corpus.documents import Corpus, Document, Sentence

Range = Tuple[int, int] # inclusive [low, high]


class SynthSpec(NamedTuple):
    r"""Parameters of the synthetic corpus generator.

    Documents are sequences of segments; segment-initial sentences start, with
    probability ``boundary_cue_strength``, with one of ``n_cue_words`` cue words
    (``cue0``, ``cue1``, ...). All other words are drawn uniformly from
    ``vocab_size`` regular words (``w0``, ``w1``, ...).

    :param n_docs: number of documents.
    :param sentences_per_doc: inclusive range of sentence counts.
    :param words_per_sentence: inclusive range of sentence lengths in words.
    :param segment_length: inclusive range of segment lengths in sentences.
    :param vocab_size: number of regular words.
    :param boundary_cue_strength: probability that a segment-initial sentence starts with a cue word.
    :param seed: random seed.
    :param n_cue_words: size of the cue sub-vocabulary.

    """
    n_docs: int = 20
    sentences_per_doc: Range = (8, 12)
    words_per_sentence: Range = (3, 6)
    segment_length: Range = (2, 5)
    vocab_size: int = 50
    boundary_cue_strength: float = 1.0
    seed: int = 0
    n_cue_words: int = 3


def validate_spec(spec: SynthSpec) -> None:
    for name in ("sentences_per_doc", "words_per_sentence", "segment_length"):
        low, high = getattr(spec, name)
        if low < 1 or high < low:
            raise ValueError(f"degenerate range for {name}: {(low, high)}")
    if spec.n_docs < 0:
        raise ValueError("n_docs must be non-negative")
    if spec.vocab_size < 1 or spec.n_cue_words < 1:
        raise ValueError("vocab_size and n_cue_words must be positive")
    if not 0.0 <= spec.boundary_cue_strength <= 1.0:
        raise ValueError("boundary_cue_strength must be in [0, 1]")


def _generate_document(key, spec: SynthSpec, doc_id: str) -> Document:
    k_num, k_seg, k_len, k_words, k_cue, k_which = jr.split(key, 6)
    low, high = spec.sentences_per_doc
    num_sentences = int(jr.randint(k_num, (), low, high + 1))
    segment_lengths = jr.randint(k_seg, (num_sentences,), spec.segment_length[0], spec.segment_length[1] + 1).tolist()
    lengths = jr.randint(k_len, (num_sentences,), spec.words_per_sentence[0], spec.words_per_sentence[1] + 1).tolist()
    word_ids = jr.randint(k_words, (num_sentences, spec.words_per_sentence[1]), 0, spec.vocab_size).tolist()
    cued = (jr.uniform(k_cue, (num_sentences,)) < spec.boundary_cue_strength).tolist()
    cue_ids = jr.randint(k_which, (num_sentences,), 0, spec.n_cue_words).tolist()

    # Segment starts from consecutive segment-length draws; the last segment is cut at the document end
    starts, position = set(), 0
    for length in segment_lengths:
        if position >= num_sentences:
            break
        starts.add(position)
        position += length

    sentences = []
    for t in range(num_sentences):
        words = [f"w{i}" for i in word_ids[t][:lengths[t]]]
        if t in starts and cued[t]:
            words[0] = f"cue{cue_ids[t]}"
        is_boundary = (t + 1 in starts) or (t == num_sentences - 1)
        sentences.append(Sentence(tuple(words), is_boundary))
    return Document(id=doc_id, sentences=tuple(sentences), source="written")


def generate_synthetic(spec: SynthSpec) -> Corpus:
    """Generate a corpus from ``spec``; the output is a pure function of the spec."""
    validate_spec(spec)
    if spec.n_docs == 0:
        return Corpus((), "unsplit")
    keys = jr.split(jr.PRNGKey(spec.seed), spec.n_docs)
    docs = tuple(_generate_document(keys[i], spec, f"synth-{spec.seed}-{i}") for i in range(spec.n_docs))
    return Corpus(docs, "unsplit")
