from functools import partial
from typing import Optional, Sequence, Tuple

import jax
import jax.numpy as jnp
import jax.random as jr
from jax import jit, value_and_grad, vmap
from jaxtyping import Array, Bool, Float, Int
from tensorflow_probability.substrates.jax import distributions as tfd

from docseg.model.inputs import WindowArrays, WindowInput, pad_window, to_device, validate_window
from docseg.model.models import (ModelConfig, ParamsAttention, ParamsClassifier, ParamsEmbeddings,
                                 ParamsEncoderLayer, ParamsFeedForward, ParamsLayerNorm, ParamsSegModel,
                                 SegModel)
from docseg.types import PRNGKey, Scalar

_MASKED_SCORE = -1e9


def dropout(x: Array, rate: float, key: Optional[PRNGKey]) -> Array:
    """Inverted dropout; the identity when ``key`` is None or ``rate`` is zero."""
    if key is None or rate == 0.0:
        return x
    keep = jr.bernoulli(key, 1.0 - rate, x.shape)
    return jnp.where(keep, x / (1.0 - rate), 0.0)


def embed_input(params: ParamsEmbeddings, inputs: WindowArrays, use_phone: bool) -> Float[Array, "num_tokens d_model"]:
    r"""Input representation of a (padded) window.

    Row $t$ is ``token[id_t] + position[t] + segment[0] + phone_t`` where
    ``phone_t`` is the mean phone embedding of the token's source word, or
    zero when phones are disabled or the word has no pronunciation.

    """
    num_tokens = inputs.token_ids.shape[-1]
    x = params.token[inputs.token_ids] + params.position[:num_tokens] + params.segment[0]
    if use_phone and params.phone is not None:
        weights = inputs.phone_mask.astype(x.dtype)
        summed = jnp.einsum("tj,tjd->td", weights, params.phone[inputs.phone_ids])
        x = x + summed / jnp.maximum(weights.sum(-1, keepdims=True), 1.0)
    return x


def layer_norm(x: Array, params: ParamsLayerNorm, eps: float) -> Array:
    mean = x.mean(-1, keepdims=True)
    var = jnp.square(x - mean).mean(-1, keepdims=True)
    return (x - mean) / jnp.sqrt(var + eps) * params.scale + params.bias


def _heads(x, weights, bias, n_heads):
    num_tokens, d = x.shape
    return (x @ weights + bias).reshape(num_tokens, n_heads, d // n_heads)


def attention_weights(x: Float[Array, "num_tokens d_model"],
                      mask: Bool[Array, "num_tokens"],
                      params: ParamsAttention,
                      n_heads: int) -> Float[Array, "n_heads num_tokens num_tokens"]:
    """Scaled dot-product attention weights; masked keys get exactly zero weight."""
    q = _heads(x, params.query, params.query_bias, n_heads)
    k = _heads(x, params.key, 0.0, n_heads)
    scores = jnp.einsum("qhd,khd->hqk", q, k) / jnp.sqrt(q.shape[-1]).astype(x.dtype)
    scores = jnp.where(mask[None, None, :], scores, _MASKED_SCORE)
    return jax.nn.softmax(scores, axis=-1)


def multi_head_attention(x, mask, params: ParamsAttention, n_heads: int, rate: float = 0.0, key=None):
    weights = dropout(attention_weights(x, mask, params, n_heads), rate, key)
    v = _heads(x, params.value, params.value_bias, n_heads)
    out = jnp.einsum("hqk,khd->qhd", weights, v).reshape(x.shape)
    return out @ params.output + params.output_bias


def feed_forward(x, params: ParamsFeedForward):
    return jax.nn.gelu(x @ params.hidden + params.hidden_bias, approximate=False) @ params.output + params.output_bias


def encoder_layer(x, mask, params: ParamsEncoderLayer, config: ModelConfig, key=None):
    keys = (None, None, None) if key is None else jr.split(key, 3)
    rate, eps = config.dropout_rate, config.layer_norm_eps
    h = layer_norm(x, params.attention_norm, eps)
    x = x + dropout(multi_head_attention(h, mask, params.attention, config.n_heads, rate, keys[0]), rate, keys[1])
    h = layer_norm(x, params.feed_forward_norm, eps)
    return x + dropout(feed_forward(h, params.feed_forward), rate, keys[2])


def encode(x: Float[Array, "num_tokens d_model"],
           mask: Bool[Array, "num_tokens"],
           layers: Sequence[ParamsEncoderLayer],
           config: ModelConfig,
           key: Optional[PRNGKey] = None) -> Float[Array, "num_tokens d_model"]:
    r"""Run the pre-norm transformer stack.

    Args:
        x: input representation.
        mask: True at non-PAD positions; PAD positions are never attended to.
        layers: block parameters.
        config: architecture.
        key: dropout key; dropout is active only when a key is given.

    Returns:
        hidden states (``x`` itself when there are no layers).

    """
    for i, layer in enumerate(layers):
        x = encoder_layer(x, mask, layer, config, None if key is None else jr.fold_in(key, i))
    return x


def pool_sentences(h: Float[Array, "num_tokens d_model"],
                   sentence_ids: Int[Array, "num_tokens"],
                   num_sentences: int) -> Float[Array, "num_sentences d_model"]:
    """Mean of the hidden states of each sentence's tokens (zero for empty slots)."""
    onehot = (sentence_ids[:, None] == jnp.arange(num_sentences)[None, :]).astype(h.dtype)
    counts = onehot.sum(0)
    return (onehot.T @ h) / jnp.maximum(counts, 1.0)[:, None]


def classifier_logits(sentences: Float[Array, "num_sentences d_model"], params: ParamsClassifier):
    return sentences @ params.weights + params.bias


def classify(sentences: Float[Array, "num_sentences d_model"],
             params: ParamsClassifier) -> Float[Array, "num_sentences"]:
    """Boundary probability of each sentence encoding (softmax over two classes)."""
    return jax.nn.softmax(classifier_logits(sentences, params), axis=-1)[..., 1]


def window_logits(params: ParamsSegModel, inputs: WindowArrays, config: ModelConfig,
                  key: Optional[PRNGKey] = None) -> Float[Array, "num_sentences 2"]:
    """Embed, encode, pool and score one padded window."""
    k_embed, k_encode = (None, None) if key is None else jr.split(key)
    x = dropout(embed_input(params.embeddings, inputs, config.use_phone), config.dropout_rate, k_embed)
    h = encode(x, inputs.token_mask, params.layers, config, k_encode)
    sentences = pool_sentences(h, inputs.sentence_ids, inputs.sentence_mask.shape[-1])
    return classifier_logits(sentences, params.classifier)


@partial(jit, static_argnames=["config"])
def window_probs(params: ParamsSegModel, inputs: WindowArrays, config: ModelConfig,
                 key: Optional[PRNGKey] = None) -> Float[Array, "num_sentences"]:
    return jax.nn.softmax(window_logits(params, inputs, config, key), axis=-1)[..., 1]


def _loss_terms(params, inputs, labels, config, key=None):
    logits = window_logits(params, inputs, config, key)
    log_probs = tfd.Categorical(logits=logits).log_prob(labels)
    mask = inputs.sentence_mask.astype(logits.dtype)
    return -(log_probs * mask).sum(), mask.sum()


def window_loss(params: ParamsSegModel, inputs: WindowArrays, labels: Int[Array, "num_sentences"],
                config: ModelConfig, key: Optional[PRNGKey] = None) -> Scalar:
    """Mean softmax cross-entropy over the window's real sentences."""
    total, count = _loss_terms(params, inputs, labels, config, key)
    return total / jnp.maximum(count, 1.0)


def batch_loss(params: ParamsSegModel, batch: WindowArrays, labels: Int[Array, "batch num_sentences"],
               config: ModelConfig, key: Optional[PRNGKey] = None) -> Scalar:
    """Mean cross-entropy over all sentences of a batch of windows."""
    if key is None:
        totals, counts = vmap(lambda x, y: _loss_terms(params, x, y, config))(batch, labels)
    else:
        keys = jr.split(key, labels.shape[0])
        totals, counts = vmap(lambda x, y, k: _loss_terms(params, x, y, config, k))(batch, labels, keys)
    return totals.sum() / jnp.maximum(counts.sum(), 1.0)


_window_loss_and_grad = jit(value_and_grad(window_loss), static_argnames=["config"])


def _arrays_for(window: WindowInput, config: ModelConfig) -> WindowArrays:
    validate_window(window, config, cls_span=window.sentence_spans[:1] == ((0, 1),))
    num_phones = max([len(p) for p in window.phone_ids or ()] + [1])
    return to_device(pad_window(window, len(window.token_ids), window.num_sentences, num_phones))


def forward(model: SegModel, window: WindowInput, train_mode: bool = False,
            key: Optional[PRNGKey] = None) -> Float[Array, "num_sentences"]:
    r"""Boundary probability for each sentence of ``window``.

    Args:
        model: the segmentation model.
        window: encoder input.
        train_mode: enable dropout (requires ``key``).
        key: dropout key.

    Returns:
        one probability per sentence span.

    """
    if train_mode and key is None:
        raise ValueError("train mode requires a dropout key")
    probs = window_probs(model.params, _arrays_for(window, model.config), model.config,
                         key if train_mode else None)
    if not bool(jnp.all(jnp.isfinite(probs))):
        raise FloatingPointError("numerical overflow")
    return probs


def backward(model: SegModel, window: WindowInput, labels: Sequence[bool]) -> Tuple[Scalar, ParamsSegModel]:
    r"""Loss and exact parameter gradients for one window, dropout disabled.

    Returns:
        the mean cross-entropy over sentences and a gradient pytree shaped like ``model.params``.

    """
    if len(labels) != window.num_sentences:
        raise ValueError(f"expected {window.num_sentences} labels, got {len(labels)}")
    arrays = _arrays_for(window, model.config)
    return _window_loss_and_grad(model.params, arrays, jnp.asarray(labels, dtype=jnp.int32), model.config)
