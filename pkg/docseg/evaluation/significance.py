import logging
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import permutation_test

from docseg.evaluation.metrics import MetricReport

logger = logging.getLogger(__name__)


class SignificanceSummary(NamedTuple):
    r"""Outcome of a paired permutation test between two systems.

    :param mean_difference: mean over documents of the per-document F1 of run A
        minus that of run B, each averaged over seeds.
    :param p_value: p-value of the absolute mean difference.
    :param num_documents: number of paired documents.
    :param num_draws: number of assignments in the null distribution.
    :param exact: whether all sign assignments were enumerated.
    :param mean_f1_a: pooled F1 of run A averaged over seeds.
    :param mean_f1_b: pooled F1 of run B averaged over seeds.

    """
    mean_difference: float
    p_value: float
    num_documents: int
    num_draws: int
    exact: bool
    mean_f1_a: float
    mean_f1_b: float


def _per_document_f1(reports: Sequence[MetricReport], name: str):
    if len(reports) < 2:
        raise ValueError(f"run {name} needs at least two seeds, got {len(reports)}")
    doc_ids = [c.doc_id for c in reports[0].per_document]
    if not doc_ids:
        raise ValueError(f"run {name} has no per-document counts")
    rows = []
    for report in reports:
        counts = {c.doc_id: c for c in report.per_document}
        if sorted(counts) != sorted(doc_ids):
            raise ValueError(f"run {name}: seeds were evaluated on different documents")
        rows.append([counts[d].f1 for d in doc_ids])
    return doc_ids, np.mean(np.asarray(rows), axis=0)


def _abs_mean_difference(x, y, axis):
    return np.abs(np.mean(x - y, axis=axis))


def compare_runs(reports_a: Sequence[MetricReport],
                 reports_b: Sequence[MetricReport],
                 num_draws: int = 10000,
                 seed: int = 0) -> SignificanceSummary:
    r"""Paired permutation test on per-document F1.

    Each document contributes the difference of its seed-averaged F1 under
    the two runs. The statistic is the absolute mean difference; the null
    distribution swaps the two runs' scores within each document. When
    ``2^n <= num_draws`` all assignments are enumerated, otherwise
    ``num_draws`` random swaps are drawn and
    ``p = (1 + hits) / (1 + num_draws)``.

    Args:
        reports_a: one report per seed of run A.
        reports_b: one report per seed of run B.
        num_draws: sampled assignments for large document sets.
        seed: seed of the sampled assignments.

    Returns:
        the test summary.

    """
    ids_a, f1_a = _per_document_f1(reports_a, "A")
    ids_b, f1_b = _per_document_f1(reports_b, "B")
    if sorted(ids_a) != sorted(ids_b):
        raise ValueError("runs were evaluated on different document sets")
    order = {d: i for i, d in enumerate(ids_b)}
    f1_b = f1_b[[order[d] for d in ids_a]]
    n = len(f1_a)

    result = permutation_test((f1_a, f1_b), _abs_mean_difference, permutation_type="samples", vectorized=True,
                              n_resamples=num_draws, alternative="greater", random_state=seed)

    summary = SignificanceSummary(mean_difference=float(np.mean(f1_a - f1_b)),
                                  p_value=float(min(result.pvalue, 1.0)),
                                  num_documents=n,
                                  num_draws=len(result.null_distribution),
                                  exact=2 ** n <= num_draws,
                                  mean_f1_a=float(np.mean([r.f1 for r in reports_a])),
                                  mean_f1_b=float(np.mean([r.f1 for r in reports_b])))
    logger.info("paired permutation test over %d documents: diff %.4f, p %.4g", n, summary.mean_difference,
                summary.p_value)
    return summary


def format_significance(summary: SignificanceSummary) -> str:
    method = "exact" if summary.exact else f"{summary.num_draws} draws"
    return (f"F1 A {summary.mean_f1_a:.4f}  F1 B {summary.mean_f1_b:.4f}  "
            f"mean doc diff {summary.mean_difference:+.4f}  p = {summary.p_value:.4g} "
            f"({summary.num_documents} docs, {method})")
