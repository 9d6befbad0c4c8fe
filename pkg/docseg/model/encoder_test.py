import jax.numpy as jnp
import jax.random as jr
import numpy as np
import pytest

from docseg.model.encoder import (attention_weights, backward, classify, embed_input, encode, forward,
                                  pool_sentences, window_probs)
from docseg.model.inputs import WindowInput, pad_window, to_device
from docseg.model.models import ModelConfig, SegModel, init_model
from docseg.tokenizer.wordpiece import CLS

CONFIG = ModelConfig(vocab_size=20, phone_vocab_size=6, d_model=8, n_layers=2, n_heads=2, d_ff=16,
                     max_seq_len=16, dropout_rate=0.1)

WINDOW = WindowInput(token_ids=(CLS, 5, 6, 7, 8, 9, 10), sentence_spans=((1, 3), (3, 4), (4, 7)))


@pytest.fixture
def model():
    return init_model(CONFIG, jr.PRNGKey(0), init_std=0.3)


def with_classifier(model, weights, bias):
    classifier = model.params.classifier._replace(weights=weights, bias=bias)
    return model._replace(params=model.params._replace(classifier=classifier))


def test_embedding_without_phones_is_plain_sum(model):
    arrays = to_device(pad_window(WINDOW, 7, 3))
    emb = model.params.embeddings
    expected = emb.token[jnp.array(WINDOW.token_ids)] + emb.position[:7] + emb.segment[0]
    assert jnp.array_equal(embed_input(emb, arrays, use_phone=False), expected)


def test_phone_term_is_mean_of_phone_embeddings():
    model = init_model(CONFIG._replace(use_phone=True), jr.PRNGKey(1))
    emb = model.params.embeddings
    window = WindowInput((CLS, 5, 6, 7), ((1, 2), (2, 4)), phone_ids=((), (2,), (1, 4), (1, 4)))
    arrays = to_device(pad_window(window, 4, 2, num_phones=2))
    phone_term = embed_input(emb, arrays, True) - embed_input(emb, arrays, False)
    assert jnp.allclose(phone_term[0], 0.0)
    assert jnp.allclose(phone_term[1], emb.phone[2], atol=1e-6)
    assert jnp.allclose(phone_term[2], (emb.phone[1] + emb.phone[4]) / 2, atol=1e-6)
    # both subword tokens of a word, and any word with the same phones, share the term
    assert jnp.allclose(phone_term[2], phone_term[3], atol=1e-6)


def test_zero_phone_embeddings_match_phone_free_model():
    config = CONFIG._replace(use_phone=True)
    model = init_model(config, jr.PRNGKey(2))
    emb = model.params.embeddings
    with_phones = model._replace(params=model.params._replace(embeddings=emb._replace(phone=jnp.zeros_like(emb.phone))))
    without = SegModel(config._replace(use_phone=False, phone_vocab_size=0),
                       model.params._replace(embeddings=emb._replace(phone=None)))
    window = WINDOW._replace(phone_ids=((), (1,), (1, 2), (3,), (), (4, 5), (0,)))
    plain = WINDOW
    assert jnp.array_equal(forward(with_phones, window), forward(without, plain))


def test_empty_stack_is_identity():
    config = CONFIG._replace(n_layers=0)
    model = init_model(config, jr.PRNGKey(0))
    x = jr.normal(jr.PRNGKey(1), (5, config.d_model))
    assert jnp.array_equal(encode(x, jnp.ones(5, bool), model.params.layers, config), x)


def test_single_token_attends_to_itself(model):
    x = jr.normal(jr.PRNGKey(3), (1, CONFIG.d_model))
    weights = attention_weights(x, jnp.ones(1, bool), model.params.layers[0].attention, CONFIG.n_heads)
    assert jnp.allclose(weights, 1.0)


def test_pad_positions_do_not_leak(model):
    arrays = pad_window(WINDOW, 12, 3)
    other = arrays.token_ids.copy()
    other[8], other[10] = 11, 4
    h = []
    for token_ids in (arrays.token_ids, other):
        inputs = to_device(arrays._replace(token_ids=token_ids))
        x = embed_input(model.params.embeddings, inputs, False)
        h.append(encode(x, inputs.token_mask, model.params.layers, CONFIG))
    assert jnp.array_equal(h[0][:7], h[1][:7])


def test_padding_does_not_change_probs(model):
    tight = window_probs(model.params, to_device(pad_window(WINDOW, 7, 3)), CONFIG)
    loose = window_probs(model.params, to_device(pad_window(WINDOW, 16, 5)), CONFIG)
    assert jnp.allclose(tight, loose[:3], atol=1e-6)


def test_mean_pooling():
    h = jnp.array([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0], [2.0, 2.0], [7.0, -1.0]])
    sentence_ids = jnp.array([0, 0, 1, 1, 2])
    pooled = pool_sentences(h, sentence_ids, 4)
    assert jnp.allclose(pooled[0], jnp.array([0.5, 0.5]))
    assert jnp.allclose(pooled[1], jnp.array([2.0, 2.0]))
    assert jnp.allclose(pooled[2], h[4])
    assert jnp.allclose(pooled[3], 0.0)
    assert jnp.allclose(pool_sentences(3.5 * h, sentence_ids, 4), 3.5 * pooled)
    assert jnp.allclose(pool_sentences(h[jnp.array([1, 0, 3, 2, 4])], jnp.array([0, 0, 1, 1, 2]), 4), pooled)


def test_classify(model):
    sentences = jr.normal(jr.PRNGKey(4), (3, CONFIG.d_model))
    uniform = model.params.classifier._replace(weights=jnp.zeros((8, 2)), bias=jnp.zeros(2))
    assert jnp.allclose(classify(sentences, uniform), 0.5)
    saturated = uniform._replace(bias=jnp.array([0.0, 50.0]))
    assert jnp.allclose(classify(sentences, saturated), 1.0)
    probs = classify(sentences, model.params.classifier)
    assert jnp.all((probs >= 0) & (probs <= 1))


def test_forward_is_deterministic_in_eval_mode(model):
    probs = forward(model, WINDOW)
    assert probs.shape == (3,)
    assert jnp.array_equal(probs, forward(model, WINDOW))


def test_dropout_only_in_train_mode(model):
    a = forward(model, WINDOW, train_mode=True, key=jr.PRNGKey(0))
    b = forward(model, WINDOW, train_mode=True, key=jr.PRNGKey(1))
    assert not jnp.allclose(a, b)
    assert jnp.array_equal(forward(model, WINDOW, train_mode=False, key=jr.PRNGKey(0)), forward(model, WINDOW))
    with pytest.raises(ValueError):
        forward(model, WINDOW, train_mode=True)


def test_forward_rejects_bad_windows(model):
    with pytest.raises(ValueError):
        forward(model, WindowInput((5, 6, 7), ((1, 3),)))
    with pytest.raises(ValueError):
        forward(model, WindowInput((CLS, 6, 7), ((1, 2), (1, 3))))
    with pytest.raises(ValueError):
        forward(model, WindowInput((CLS, 99), ((1, 2),)))


def test_forward_detects_overflow(model):
    broken = with_classifier(model, jnp.full((8, 2), jnp.nan), jnp.zeros(2))
    with pytest.raises(FloatingPointError, match="numerical overflow"):
        forward(broken, WINDOW)


def test_uniform_classifier_loss_is_log_two(model):
    uniform = with_classifier(model, jnp.zeros((8, 2)), jnp.zeros(2))
    loss, grads = backward(uniform, WINDOW, [False, True, True])
    assert jnp.allclose(loss, np.log(2.0), atol=1e-6)
    assert grads.classifier.weights.shape == (8, 2)
    assert len(grads.layers) == CONFIG.n_layers


def test_saturated_predictions_have_tiny_loss(model):
    saturated = with_classifier(model, jnp.zeros((8, 2)), jnp.array([-30.0, 30.0]))
    loss, grads = backward(saturated, WINDOW, [True, True, True])
    assert loss < 1e-6
    assert jnp.abs(grads.classifier.bias).max() < 1e-6


def test_backward_label_count(model):
    with pytest.raises(ValueError):
        backward(model, WINDOW, [True])
