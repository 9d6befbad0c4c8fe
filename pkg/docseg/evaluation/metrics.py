import json
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix

from docseg.corpus.documents import Corpus, PathLike


class DocumentCounts(NamedTuple):
    doc_id: str
    tp: int
    fp: int
    fn: int

    @property
    def f1(self) -> float:
        return f1_from_counts(self.tp, self.fp, self.fn)


class MetricReport(NamedTuple):
    r"""Positive-class precision, recall and F1, pooled over documents.

    :param tp: true positives.
    :param fp: false positives.
    :param fn: false negatives.
    :param precision: ``tp / (tp + fp)``, 0 when undefined.
    :param recall: ``tp / (tp + fn)``, 0 when undefined.
    :param f1: harmonic mean of precision and recall, 0 when undefined.
    :param per_document: the counts of every document.

    """
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    per_document: Tuple[DocumentCounts, ...] = ()


def f1_from_counts(tp: int, fp: int, fn: int) -> float:
    # 2tp / (2tp + fp + fn) equals the harmonic mean of precision and recall
    return 2 * tp / (2 * tp + fp + fn) if tp > 0 else 0.0


def document_counts(pred: Sequence[bool], ref: Sequence[bool], doc_id: str = "") -> DocumentCounts:
    """Confusion counts of one document, ignoring its final sentence."""
    if len(pred) != len(ref):
        raise ValueError(f"prediction/reference length mismatch in document {doc_id!r}: {len(pred)} vs {len(ref)}")
    pred, ref = np.asarray(pred[:-1], dtype=bool), np.asarray(ref[:-1], dtype=bool)
    if pred.size == 0:
        return DocumentCounts(doc_id, 0, 0, 0)
    (_, fp), (fn, tp) = confusion_matrix(ref, pred, labels=[False, True])
    return DocumentCounts(doc_id, int(tp), int(fp), int(fn))


def report_from_counts(counts: Sequence[DocumentCounts]) -> MetricReport:
    """Micro-average: sum the counts of all documents."""
    tp = sum(c.tp for c in counts)
    fp = sum(c.fp for c in counts)
    fn = sum(c.fn for c in counts)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return MetricReport(tp, fp, fn, precision, recall, f1_from_counts(tp, fp, fn), tuple(counts))


def positive_prf(pred: Sequence[Sequence[bool]],
                 ref: Sequence[Sequence[bool]],
                 doc_ids: Optional[Sequence[str]] = None) -> MetricReport:
    r"""Positive precision, recall and F1 of boundary predictions.

    The final sentence of every document ends a segment by definition and is
    excluded from both predictions and references. Counts are pooled over
    documents.

    Args:
        pred: predicted boundary decisions, one sequence per document.
        ref: reference labels, one sequence per document.
        doc_ids: document ids used in error messages and per-document counts.

    Returns:
        the metric report.

    """
    if len(pred) != len(ref):
        raise ValueError(f"{len(pred)} predicted documents but {len(ref)} references")
    doc_ids = list(doc_ids) if doc_ids is not None else [str(i) for i in range(len(ref))]
    return report_from_counts([document_counts(p, r, d) for p, r, d in zip(pred, ref, doc_ids)])


def evaluate_segmentations(results, corpus: Corpus) -> MetricReport:
    """Score segmentation results against a labeled corpus, matching documents by id."""
    by_id = {r.doc_id: r for r in results}
    missing = [doc.id for doc in corpus.documents if doc.id not in by_id]
    if missing:
        raise ValueError(f"no segmentation for document {missing[0]!r}")
    docs = corpus.documents
    return positive_prf([by_id[d.id].decisions for d in docs], [d.labels for d in docs], [d.id for d in docs])


def format_report(report: MetricReport, name: str = "") -> str:
    header = f"{'run':<12} {'P':>7} {'R':>7} {'F1':>7} {'tp':>6} {'fp':>6} {'fn':>6}"
    row = (f"{name:<12} {report.precision:7.4f} {report.recall:7.4f} {report.f1:7.4f} "
           f"{report.tp:6d} {report.fp:6d} {report.fn:6d}")
    return header + "\n" + row


def save_report(report: MetricReport, path: PathLike) -> None:
    """Write the pooled metrics and the per-document counts as line-delimited records."""
    with open(path, "w", encoding="utf-8") as f:
        summary = {k: v for k, v in report._asdict().items() if k != "per_document"}
        f.write(json.dumps(summary) + "\n")
        for c in report.per_document:
            f.write(json.dumps(c._asdict(), ensure_ascii=False) + "\n")
