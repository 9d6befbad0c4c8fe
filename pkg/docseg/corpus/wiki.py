import re
from typing import List

from docseg.corpus.documents import Document, Sentence, validate_document

HEADING = re.compile(r"^\s*==.*==\s*$")
SENTENCE_END = ".?!。？！"
SENTENCE = re.compile(r"[^{0}]+(?:[{0}]+|$)".format(re.escape(SENTENCE_END)))

GRANULARITIES = ("section", "paragraph")


def split_sentences(text: str) -> List[List[str]]:
    """Split text on sentence-final punctuation into lists of whitespace-delimited words.

    Punctuation stays attached to the last word of its sentence.
    """
    sentences = []
    for match in SENTENCE.finditer(text):
        words = match.group(0).split()
        if words:
            sentences.append(words)
    return sentences


def _segments(lines: List[str], granularity: str) -> List[List[str]]:
    segments, current = [], []
    for line in lines:
        if HEADING.match(line):
            segments.append(current)
            current = []
        elif not line.strip():
            if granularity == "paragraph":
                segments.append(current)
                current = []
        else:
            current.append(line.strip())
    segments.append(current)
    return segments


def parse_wiki_text(raw: str, granularity: str = "paragraph", doc_id: str = "doc",
                    source: str = "written") -> Document:
    r"""Parse wiki-style plain text into a labeled document.

    Segments are separated by blank lines (``granularity="paragraph"``) or by
    heading lines of the form ``== Title ==`` (``granularity="section"``).
    Heading lines are always discarded, and also close the current paragraph.
    The last sentence of every segment is labeled as a boundary; segments
    without sentences are skipped.

    Args:
        raw: the text.
        granularity: ``"section"`` or ``"paragraph"``.
        doc_id: identifier of the resulting document.
        source: ``"written"`` or ``"spoken"``.

    Returns:
        the parsed document.

    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"invalid granularity: {granularity}")

    sentences = []
    for segment in _segments(raw.splitlines(), granularity):
        words = split_sentences(" ".join(segment))
        if not words:
            continue
        sentences.extend(Sentence(tuple(w), False) for w in words[:-1])
        sentences.append(Sentence(tuple(words[-1]), True))

    if not sentences:
        raise ValueError("empty document")
    doc = Document(id=doc_id, sentences=tuple(sentences), source=source)
    validate_document(doc)
    return doc
