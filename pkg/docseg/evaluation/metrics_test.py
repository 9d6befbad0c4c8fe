import jax.random as jr
import numpy as np
import pytest

from docseg.corpus.documents import Corpus, make_document
from docseg.evaluation.metrics import (document_counts, evaluate_segmentations, format_report, positive_prf,
                                       save_report)
from docseg.inference.strategies import SegmentationResult


def brute_force(pred, ref):
    tp = fp = fn = 0
    for p_doc, r_doc in zip(pred, ref):
        for p, r in zip(p_doc[:-1], r_doc[:-1]):
            tp += p and r
            fp += p and not r
            fn += r and not p
    return tp, fp, fn


def random_pair(seed):
    k_docs, k_len, k_pred, k_ref = jr.split(jr.PRNGKey(seed), 4)
    num_docs = int(jr.randint(k_docs, (), 1, 5))
    lengths = jr.randint(k_len, (num_docs,), 1, 12).tolist()
    pred = [np.asarray(jr.bernoulli(jr.fold_in(k_pred, i), 0.3, (n,))).tolist() for i, n in enumerate(lengths)]
    ref = [np.asarray(jr.bernoulli(jr.fold_in(k_ref, i), 0.3, (n,))).tolist() for i, n in enumerate(lengths)]
    return pred, ref


def test_matches_brute_force_oracle():
    for seed in range(1000):
        pred, ref = random_pair(seed)
        report = positive_prf(pred, ref)
        tp, fp, fn = brute_force(pred, ref)
        assert (report.tp, report.fp, report.fn) == (tp, fp, fn)
        assert report.precision == (tp / (tp + fp) if tp + fp else 0.0)
        assert report.recall == (tp / (tp + fn) if tp + fn else 0.0)


@pytest.mark.parametrize("seed", range(50))
def test_final_sentence_flip_is_ignored(seed):
    pred, ref = random_pair(seed)
    flipped = [doc[:-1] + [not doc[-1]] for doc in pred]
    assert positive_prf(flipped, ref)[:6] == positive_prf(pred, ref)[:6]


def test_document_order_does_not_matter():
    pred, ref = random_pair(7)
    forward = positive_prf(pred, ref)
    backward = positive_prf(pred[::-1], ref[::-1])
    assert forward.f1 == backward.f1


def test_perfect_prediction():
    ref = [[False, True, False, True], [True, False, True]]
    report = positive_prf(ref, ref)
    assert report.precision == report.recall == report.f1 == 1.0


def test_degenerate_all_negative():
    ref = [[False, False, True]]
    report = positive_prf([[False, False, False]], ref)
    assert (report.tp, report.fp, report.fn) == (0, 0, 0)
    assert report.f1 == 0.0


def test_six_sentence_example():
    ref = [False, False, True, False, False, True]
    pred = [False, False, True, False, True, False]
    report = positive_prf([pred], [ref])
    assert (report.tp, report.fp, report.fn) == (1, 1, 0)
    assert report.precision == 0.5
    assert report.recall == 1.0
    assert report.f1 == pytest.approx(2 / 3)


def test_exact_f1():
    # tp=3, fp=2, fn=2 gives exactly 0.6
    assert positive_prf([[True] * 5 + [False] * 2 + [True]], [[True] * 3 + [False] * 2 + [True] * 3]).f1 == 0.6


def test_length_mismatch_names_document():
    with pytest.raises(ValueError, match="doc-b"):
        positive_prf([[True], [True, False]], [[True], [True]], doc_ids=["doc-a", "doc-b"])


def test_single_sentence_document():
    assert document_counts([True], [True], "x") == ("x", 0, 0, 0)


def test_evaluate_segmentations(tmp_path):
    docs = (make_document("a", [["x"], ["y"], ["z"]], [True, False, True]),
            make_document("b", [["x"], ["y"]], [False, True]))
    results = [SegmentationResult("b", (0.1, 0.9), (False, True), 1, 1, (0,)),
               SegmentationResult("a", (0.9, 0.9, 0.9), (True, True, True), 1, 1, (0,))]
    report = evaluate_segmentations(results, Corpus(docs))
    assert (report.tp, report.fp, report.fn) == (1, 1, 0)
    assert [c.doc_id for c in report.per_document] == ["a", "b"]
    assert "F1" in format_report(report, "run")

    path = tmp_path / "report.jsonl"
    save_report(report, path)
    assert len(path.read_text().splitlines()) == 3

    with pytest.raises(ValueError, match="'a'"):
        evaluate_segmentations(results[:1], Corpus(docs))
