import json
import logging
import warnings
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from docseg.corpus.documents import Corpus, PathLike, with_labels
from docseg.evaluation.metrics import positive_prf

logger = logging.getLogger(__name__)


class AnnotationSet(NamedTuple):
    r"""Boundary votes of several annotators on one document.

    :param doc_id: document id.
    :param votes: one row of per-sentence boolean votes per annotator.
    :param annotator_ids: id of every row, unique.

    """
    doc_id: str
    votes: Tuple[Tuple[bool, ...], ...]
    annotator_ids: Tuple[str, ...]

    @property
    def n_sentences(self) -> int:
        return len(self.votes[0]) if self.votes else 0

    @property
    def n_annotators(self) -> int:
        return len(self.annotator_ids)

    def row(self, annotator_id: str) -> Tuple[bool, ...]:
        return self.votes[self.annotator_ids.index(annotator_id)]


def make_annotation_set(doc_id: str, votes: Mapping[str, Sequence[bool]]) -> AnnotationSet:
    """Build an annotation set from ``{annotator_id: votes}``, checking row lengths."""
    ids = tuple(str(a) for a in votes)
    rows = tuple(tuple(bool(v) for v in row) for row in votes.values())
    if len({len(row) for row in rows}) > 1:
        raise ValueError(f"document {doc_id}: annotators voted on different numbers of sentences")
    if len(set(ids)) != len(ids):
        raise ValueError(f"document {doc_id}: duplicate annotator ids")
    return AnnotationSet(str(doc_id), rows, ids)


def screen(annotations: Sequence[AnnotationSet],
           refs: Mapping[str, Sequence[bool]],
           min_f1: float = 0.6) -> Dict[str, bool]:
    r"""Decide which annotators pass the screening against reference labels.

    An annotator passes iff the positive F1 of their votes, pooled over all
    screening documents, is strictly greater than ``min_f1``. Every document
    in ``refs`` is a screening document; an annotator without a row for one
    of them fails.

    Args:
        annotations: annotation sets of the screening documents.
        refs: reference labels by document id.
        min_f1: F1 an annotator must exceed.

    Returns:
        pass/fail by annotator id.

    """
    by_doc = {a.doc_id: a for a in annotations}
    missing_refs = sorted(set(by_doc) - set(refs))
    if missing_refs:
        raise ValueError(f"no reference labels for screening document {missing_refs[0]!r}")

    docs = sorted(refs)
    annotators = sorted({i for a in annotations for i in a.annotator_ids})
    outcome = {}
    for annotator in annotators:
        skipped = [d for d in docs if d not in by_doc or annotator not in by_doc[d].annotator_ids]
        if skipped:
            message = f"annotator {annotator} did not annotate screening document {skipped[0]!r}"
            warnings.warn(message)
            logger.warning(message)
            outcome[annotator] = False
            continue
        report = positive_prf([by_doc[d].row(annotator) for d in docs], [refs[d] for d in docs], docs)
        outcome[annotator] = report.f1 > min_f1
        logger.info("annotator %s: screening F1 %.4f (%s)", annotator, report.f1,
                    "pass" if outcome[annotator] else "fail")
    return outcome


def _majority(votes: np.ndarray, threshold_votes: Optional[int]) -> np.ndarray:
    positives = votes.sum(axis=0)
    if threshold_votes is None:
        # strict majority; ties are negative
        return 2 * positives > votes.shape[0]
    return positives >= threshold_votes


def loo_scores(a: AnnotationSet, threshold_votes: Optional[int] = None) -> Dict[str, float]:
    r"""Leave-one-out F1 of every annotator of one document.

    Each annotator is scored against the majority vote of the others (ties
    negative), or against ``votes >= threshold_votes`` if given. The
    document-final sentence is not scored.

    """
    if a.n_annotators < 3:
        raise ValueError(f"document {a.doc_id}: leave-one-out scoring needs at least 3 annotators, "
                         f"got {a.n_annotators}")
    votes = np.asarray(a.votes, dtype=bool)
    scores = {}
    for i, annotator in enumerate(a.annotator_ids):
        reference = _majority(np.delete(votes, i, axis=0), threshold_votes)
        scores[annotator] = positive_prf([votes[i].tolist()], [reference.tolist()], [a.doc_id]).f1
    return scores


def aggregate_topk(a: AnnotationSet, k: int = 4, positive_threshold: int = 3) -> Tuple[bool, ...]:
    r"""Majority vote of the ``k`` annotators with the best leave-one-out F1.

    Ties in F1 are broken by annotator id. A sentence is labeled positive iff
    at least ``positive_threshold`` of the retained annotators voted positive.
    With ``k`` equal to the number of annotators nobody is dropped.

    """
    if not 1 <= k <= a.n_annotators:
        raise ValueError(f"document {a.doc_id}: k={k} but {a.n_annotators} annotators")
    if not 1 <= positive_threshold <= k:
        raise ValueError(f"positive_threshold must be in [1, {k}]")

    votes = np.asarray(a.votes, dtype=bool)
    if k < a.n_annotators:
        scores = loo_scores(a)
        ranked = sorted(a.annotator_ids, key=lambda i: (-scores[i], i))
        keep = [a.annotator_ids.index(i) for i in ranked[:k]]
        logger.debug("%s: dropped annotators %s", a.doc_id, ranked[k:])
        votes = votes[sorted(keep)]
    return tuple(bool(x) for x in votes.sum(axis=0) >= positive_threshold)


def load_annotations(path: PathLike) -> List[AnnotationSet]:
    """Read ``{doc_id, annotator_id, votes}`` records and group them by document, in first-seen order."""
    grouped: Dict[str, Dict[str, List[bool]]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                doc_id, annotator, votes = str(record["doc_id"]), str(record["annotator_id"]), record["votes"]
            except (json.JSONDecodeError, KeyError, TypeError) as err:
                raise ValueError(f"malformed annotation at line {lineno}: {err}") from err
            rows = grouped.setdefault(doc_id, {})
            if annotator in rows:
                raise ValueError(f"line {lineno}: annotator {annotator} appears twice for document {doc_id}")
            rows[annotator] = votes
    return [make_annotation_set(doc_id, rows) for doc_id, rows in grouped.items()]


def aggregate_corpus(corpus: Corpus,
                     annotations: Sequence[AnnotationSet],
                     k: int = 4,
                     positive_threshold: int = 3,
                     annotators: Optional[Sequence[str]] = None) -> Corpus:
    r"""Relabel every document of ``corpus`` with its aggregated annotations.

    Args:
        corpus: documents to relabel.
        annotations: one annotation set per document.
        k: annotators retained per document.
        positive_threshold: votes needed for a positive label.
        annotators: if given, only these annotators (e.g. those that passed
            screening) are used.

    Returns:
        the relabeled corpus; every final label is True.

    """
    by_doc = {a.doc_id: a for a in annotations}
    documents = []
    for doc in corpus.documents:
        if doc.id not in by_doc:
            raise ValueError(f"no annotations for document {doc.id!r}")
        a = by_doc[doc.id]
        if annotators is not None:
            kept = [i for i in a.annotator_ids if i in set(annotators)]
            a = AnnotationSet(a.doc_id, tuple(a.row(i) for i in kept), tuple(kept))
        if a.n_sentences != doc.num_sentences:
            raise ValueError(f"document {doc.id}: {a.n_sentences} votes for {doc.num_sentences} sentences")
        labels = list(aggregate_topk(a, k, positive_threshold))
        labels[-1] = True
        documents.append(with_labels(doc, labels))
    logger.info("aggregated labels of %d documents", len(documents))
    return Corpus(tuple(documents), corpus.split)
