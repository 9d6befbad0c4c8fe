import logging
import sys

import jax.numpy as jnp
import pytest
from jax.tree_util import tree_leaves

from docseg.corpus.documents import Corpus, split_corpus
from docseg.corpus.synthetic import SynthSpec, generate_synthetic
from docseg.evaluation.metrics import evaluate_segmentations
from docseg.inference.strategies import InferenceConfig, segment_corpus, segment_cross_segment
from docseg.model.models import ModelConfig
from docseg.tokenizer.wordpiece import build_vocab
from docseg.training.train import stack_samples, build_samples, train
from docseg.training.samples import TrainConfig
from docseg.utils.utils import monotonically_decreasing

DEV_CONFIG = InferenceConfig(window_token_budget=128, max_window_sentences=60, step=1)


def tiny_config(vocab, **kwargs):
    return ModelConfig(vocab_size=len(vocab), d_model=16, n_layers=2, n_heads=2, d_ff=32, max_seq_len=128,
                       dropout_rate=0.0)._replace(**kwargs)


def tiny_train_config(**kwargs):
    return TrainConfig(max_seq_len=128, batch_size=8, epochs=2, learning_rate=1e-2)._replace(**kwargs)


@pytest.fixture(scope="module")
def corpus_and_vocab():
    corpus = generate_synthetic(SynthSpec(n_docs=20, boundary_cue_strength=1.0, seed=0))
    return corpus, build_vocab(corpus, 200)


@pytest.fixture(scope="module")
def overfit(corpus_and_vocab):
    corpus, vocab = corpus_and_vocab
    config = tiny_config(vocab, d_model=64, n_heads=4, d_ff=128)
    train_config = tiny_train_config(epochs=200, learning_rate=5e-3, target_dev_f1=1.0)
    model, losses = train(corpus, config, train_config, vocab, dev=corpus)
    return model, losses


def test_overfit_fixture(corpus_and_vocab, overfit):
    corpus, vocab = corpus_and_vocab
    model, losses = overfit
    assert 2 <= len(losses) <= 200
    assert losses[-1] < losses[0]
    assert monotonically_decreasing(losses[:2])
    results = segment_corpus(corpus, model, DEV_CONFIG, vocab)
    assert evaluate_segmentations(results, corpus).f1 == 1.0


def test_zero_learning_rate_keeps_initialization(corpus_and_vocab):
    corpus, vocab = corpus_and_vocab
    initial, _ = train(corpus, tiny_config(vocab), tiny_train_config(epochs=0), vocab)
    trained, losses = train(corpus, tiny_config(vocab), tiny_train_config(epochs=1, learning_rate=0.0), vocab)
    assert len(losses) == 1
    for a, b in zip(tree_leaves(initial.params), tree_leaves(trained.params)):
        assert jnp.array_equal(a, b)


def test_training_is_deterministic(corpus_and_vocab):
    corpus, vocab = corpus_and_vocab
    config = tiny_config(vocab, dropout_rate=0.1)
    first, losses1 = train(corpus, config, tiny_train_config(), vocab)
    second, losses2 = train(corpus, config, tiny_train_config(), vocab)
    assert losses1 == losses2
    for a, b in zip(tree_leaves(first.params), tree_leaves(second.params)):
        assert jnp.array_equal(a, b)


def test_gradient_accumulation_runs(corpus_and_vocab):
    corpus, vocab = corpus_and_vocab
    _, losses = train(corpus, tiny_config(vocab), tiny_train_config(grad_accumulation=2, shuffle=False), vocab)
    assert all(jnp.isfinite(jnp.asarray(losses)))


def test_divergent_loss(monkeypatch, corpus_and_vocab):
    corpus, vocab = corpus_and_vocab
    monkeypatch.setattr(sys.modules["docseg.training.train"], "batch_loss",
                        lambda params, *args, **kwargs: jnp.nan * tree_leaves(params)[0].sum())
    with pytest.raises(FloatingPointError, match="epoch 0, step 0"):
        train(corpus, tiny_config(vocab), tiny_train_config(), vocab)


def test_target_dev_f1_stops_training(caplog, corpus_and_vocab):
    corpus, vocab = corpus_and_vocab
    with caplog.at_level(logging.INFO, logger="docseg.training.train"):
        _, losses = train(corpus, tiny_config(vocab), tiny_train_config(epochs=5, target_dev_f1=0.0), vocab,
                          dev=corpus)
    assert len(losses) == 1
    assert any("reached the target" in record.getMessage() for record in caplog.records)


def test_dev_selection_logs_f1(caplog, corpus_and_vocab):
    corpus, vocab = corpus_and_vocab
    train_docs, dev_docs = split_corpus(corpus, 0.25, seed=0)
    with caplog.at_level(logging.INFO, logger="docseg.training.train"):
        model, losses = train(train_docs, tiny_config(vocab), tiny_train_config(), vocab, dev=dev_docs)
    assert len(losses) == 2
    assert sum("dev F1" in record.getMessage() for record in caplog.records) == 2
    assert model.config == tiny_config(vocab)


def test_cross_segment_head(corpus_and_vocab):
    corpus, vocab = corpus_and_vocab
    small = Corpus(corpus.documents[:4])
    model, losses = train(small, tiny_config(vocab, max_seq_len=32), tiny_train_config(max_seq_len=32,
                          max_sentences=20), vocab, head="cls", left_context=15, right_context=15)
    assert len(losses) == 2
    doc = small.documents[0]
    result = segment_cross_segment(doc, model, InferenceConfig(strategy="cross_segment", left_context=15,
                                                               right_context=15), vocab)
    assert result.n_encoder_calls == doc.num_sentences - 1


def test_short_batches_are_padded(corpus_and_vocab):
    corpus, vocab = corpus_and_vocab
    samples = build_samples(Corpus(corpus.documents[:2]), vocab, None, tiny_train_config())
    arrays, labels = stack_samples(samples, 128, 60)
    assert arrays.token_ids.shape == (len(samples) + 1, 128)
    assert not arrays.token_mask[-1].any() and not arrays.sentence_mask[-1].any()
    assert labels.shape == (len(samples) + 1, 60)


@pytest.mark.parametrize("kwargs, match", [(dict(head="tokens"), "head"), (dict(corpus=Corpus(())), "empty"),
                                           (dict(train_config=tiny_train_config(target_dev_f1=1.5)), "target_dev_f1")])
def test_invalid_arguments(corpus_and_vocab, kwargs, match):
    corpus, vocab = corpus_and_vocab
    args = dict(corpus=corpus, model_config=tiny_config(vocab), train_config=tiny_train_config(), vocab=vocab)
    args.update(kwargs)
    with pytest.raises(ValueError, match=match):
        train(**args)


def test_phone_model_requires_lexicon(corpus_and_vocab):
    corpus, vocab = corpus_and_vocab
    with pytest.raises(ValueError, match="lexicon"):
        train(corpus, tiny_config(vocab, use_phone=True, phone_vocab_size=4), tiny_train_config(), vocab)
