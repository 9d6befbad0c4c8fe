import json
import logging
import warnings
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

from sklearn.model_selection import train_test_split

logger = logging.getLogger(__name__)

SOURCES = ("written", "spoken")
SPLITS = ("train", "dev", "test", "unsplit")

PathLike = Union[str, Path]


class Sentence(NamedTuple):
    r"""One sentence of pre-tokenized words.

    :param words: whitespace-free word strings, at least one.
    :param is_boundary: whether this sentence ends a segment.

    """
    words: Tuple[str, ...]
    is_boundary: bool


class Document(NamedTuple):
    r"""An ordered sequence of sentences with one boundary label each.

    The final sentence is always stored as a boundary (end of document);
    evaluation excludes it.

    :param id: document identifier, unique within a corpus.
    :param sentences: the sentences, in order.
    :param source: ``"written"`` or ``"spoken"``.

    """
    id: str
    sentences: Tuple[Sentence, ...]
    source: str = "written"

    @property
    def labels(self) -> Tuple[bool, ...]:
        return tuple(s.is_boundary for s in self.sentences)

    @property
    def num_sentences(self) -> int:
        return len(self.sentences)


class Corpus(NamedTuple):
    r"""A collection of documents.

    :param documents: documents with unique ids.
    :param split: one of ``train``, ``dev``, ``test`` or ``unsplit``.

    """
    documents: Tuple[Document, ...]
    split: str = "unsplit"

    def __len__(self):
        return len(self.documents)


def validate_document(doc: Document) -> None:
    """Raise a ValueError if ``doc`` breaks a document invariant."""
    if doc.source not in SOURCES:
        raise ValueError(f"document {doc.id}: invalid source {doc.source!r}")
    if len(doc.sentences) == 0:
        raise ValueError(f"document {doc.id}: no sentences")
    for i, sentence in enumerate(doc.sentences):
        if len(sentence.words) == 0:
            raise ValueError(f"document {doc.id}: sentence {i} has no words")
        for word in sentence.words:
            if not word or any(ch.isspace() for ch in word):
                raise ValueError(f"document {doc.id}: sentence {i} has an invalid word {word!r}")
    if not doc.sentences[-1].is_boundary:
        raise ValueError(f"document {doc.id}: final sentence must be a boundary")


def validate_corpus(corpus: Corpus) -> None:
    if corpus.split not in SPLITS:
        raise ValueError(f"invalid split {corpus.split!r}")
    seen = set()
    for doc in corpus.documents:
        if doc.id in seen:
            raise ValueError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
        validate_document(doc)


def make_document(doc_id: str,
                  sentences: Sequence[Sequence[str]],
                  labels: Sequence[bool],
                  source: str = "written") -> Document:
    """Build a document from word lists and labels.

    The final label is forced to True; a warning is emitted if it was False.

    """
    if len(sentences) != len(labels):
        raise ValueError(f"document {doc_id}: label count mismatch "
                         f"({len(labels)} labels for {len(sentences)} sentences)")
    labels = [bool(label) for label in labels]
    if labels and not labels[-1]:
        warnings.warn(f"document {doc_id}: final label coerced to True")
        labels[-1] = True
    doc = Document(id=str(doc_id),
                   sentences=tuple(Sentence(tuple(words), label) for words, label in zip(sentences, labels)),
                   source=source)
    validate_document(doc)
    return doc


def with_labels(doc: Document, labels: Sequence[bool]) -> Document:
    """Return a copy of ``doc`` with new boundary labels (final label forced True)."""
    return make_document(doc.id, [s.words for s in doc.sentences], labels, doc.source)


def document_to_record(doc: Document, split: str = "unsplit") -> dict:
    return dict(id=doc.id,
                sentences=[list(s.words) for s in doc.sentences],
                labels=[s.is_boundary for s in doc.sentences],
                source=doc.source,
                split=split)


def load_records(path: PathLike, split: Optional[str] = None) -> Corpus:
    """Load a corpus from a line-delimited JSON record file.

    Each non-blank line holds ``{id, sentences, labels, source, split}``;
    ``source`` defaults to ``written`` and ``split`` to ``unsplit``.

    Args:
        path: record file.
        split: split name assigned to the corpus, overriding the stored one.

    Returns:
        the validated corpus.

    """
    documents, stored_splits = [], set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                sentences, labels = record["sentences"], record["labels"]
                doc_id = record["id"]
                source = record.get("source", "written")
                stored_splits.add(record.get("split", "unsplit"))
            except (json.JSONDecodeError, KeyError, TypeError) as err:
                raise ValueError(f"malformed record at line {lineno}: {err}") from err
            if len(sentences) != len(labels):
                raise ValueError(f"label count mismatch at line {lineno}")
            try:
                documents.append(make_document(doc_id, sentences, labels, source))
            except (ValueError, TypeError) as err:
                raise ValueError(f"invalid record at line {lineno}: {err}") from err

    if not documents:
        warnings.warn(f"no documents found in {path}")
    if split is None:
        if len(stored_splits) > 1:
            raise ValueError(f"records in {path} belong to different splits: {sorted(stored_splits)}")
        split = stored_splits.pop() if stored_splits else "unsplit"
    corpus = Corpus(tuple(documents), split)
    validate_corpus(corpus)
    logger.info("loaded %d documents from %s", len(documents), path)
    return corpus


def save_records(corpus: Corpus, path: PathLike) -> None:
    """Write ``corpus`` as a line-delimited JSON record file (UTF-8)."""
    validate_corpus(corpus)
    with open(path, "w", encoding="utf-8") as f:
        for doc in corpus.documents:
            f.write(json.dumps(document_to_record(doc, corpus.split), ensure_ascii=False) + "\n")


def split_corpus(corpus: Corpus, test_fraction: float, seed: int = 0) -> Tuple[Corpus, Corpus]:
    """Split documents into a train and a test corpus.

    Args:
        corpus: corpus to split.
        test_fraction: fraction of documents (in (0, 1)) that go to the test split.
        seed: shuffling seed.

    Returns:
        train corpus and test corpus.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    if len(corpus) < 2:
        raise ValueError("need at least two documents to split")
    train_docs, test_docs = train_test_split(list(corpus.documents), test_size=test_fraction, random_state=seed)
    return Corpus(tuple(train_docs), "train"), Corpus(tuple(test_docs), "test")


def corpus_words(corpus: Corpus) -> List[str]:
    """All distinct words of a corpus, sorted."""
    return sorted({w for doc in corpus.documents for s in doc.sentences for w in s.words})
