from typing import NamedTuple, Optional, Tuple

import jax.numpy as jnp
import jax.random as jr
from jaxtyping import Array, Float

from docseg.types import PRNGKey


class ModelConfig(NamedTuple):
    r"""Architecture of the segmentation encoder.

    The tuple is hashable, so it is passed to jitted functions as a static argument.

    :param vocab_size: number of subword tokens.
    :param phone_vocab_size: number of phone symbols (0 if phones are unused).
    :param d_model: embedding and hidden width.
    :param n_layers: number of transformer blocks.
    :param n_heads: attention heads per block; must divide ``d_model``.
    :param d_ff: feed-forward width.
    :param max_seq_len: number of position embeddings, i.e. longest window in tokens.
    :param dropout_rate: dropout probability in training mode.
    :param use_phone: whether phone embeddings are added to the input.
    :param layer_norm_eps: layer norm epsilon.

    """
    vocab_size: int
    phone_vocab_size: int = 0
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 128
    max_seq_len: int = 512
    dropout_rate: float = 0.1
    use_phone: bool = False
    layer_norm_eps: float = 1e-12


def validate_config(config: ModelConfig) -> None:
    if config.vocab_size < 5:
        raise ValueError("vocab_size must cover the special tokens")
    if config.d_model < 1 or config.n_heads < 1 or config.d_model % config.n_heads != 0:
        raise ValueError(f"d_model={config.d_model} must be divisible by n_heads={config.n_heads}")
    if config.n_layers < 0 or config.d_ff < 1:
        raise ValueError("n_layers must be non-negative and d_ff positive")
    if config.max_seq_len < 8:
        raise ValueError("max_seq_len must be at least 8")
    if not 0.0 <= config.dropout_rate < 1.0:
        raise ValueError("dropout_rate must be in [0, 1)")
    if config.use_phone and config.phone_vocab_size < 1:
        raise ValueError("use_phone requires a positive phone_vocab_size")


class ParamsEmbeddings(NamedTuple):
    r"""Input representation: token, position, segment and (optional) phone embeddings."""
    token: Float[Array, "vocab_size d_model"]
    position: Float[Array, "max_seq_len d_model"]
    segment: Float[Array, "2 d_model"]
    phone: Optional[Float[Array, "phone_vocab_size d_model"]] = None


class ParamsLayerNorm(NamedTuple):
    scale: Float[Array, "d_model"]
    bias: Float[Array, "d_model"]


class ParamsAttention(NamedTuple):
    query: Float[Array, "d_model d_model"]
    query_bias: Float[Array, "d_model"]
    key: Float[Array, "d_model d_model"] # no key bias: attention weights are invariant to it
    value: Float[Array, "d_model d_model"]
    value_bias: Float[Array, "d_model"]
    output: Float[Array, "d_model d_model"]
    output_bias: Float[Array, "d_model"]


class ParamsFeedForward(NamedTuple):
    hidden: Float[Array, "d_model d_ff"]
    hidden_bias: Float[Array, "d_ff"]
    output: Float[Array, "d_ff d_model"]
    output_bias: Float[Array, "d_model"]


class ParamsEncoderLayer(NamedTuple):
    r"""One pre-norm transformer block: ``x + Attn(LN(x))`` then ``x + FF(LN(x))``."""
    attention_norm: ParamsLayerNorm
    attention: ParamsAttention
    feed_forward_norm: ParamsLayerNorm
    feed_forward: ParamsFeedForward


class ParamsClassifier(NamedTuple):
    r"""Softmax binary classifier; class 1 is "boundary"."""
    weights: Float[Array, "d_model 2"]
    bias: Float[Array, "2"]


class ParamsSegModel(NamedTuple):
    embeddings: ParamsEmbeddings
    layers: Tuple[ParamsEncoderLayer, ...]
    classifier: ParamsClassifier


class SegModel(NamedTuple):
    r"""A segmentation model: static architecture plus trainable parameters.

    :param config: architecture.
    :param params: parameter pytree.

    """
    config: ModelConfig
    params: ParamsSegModel


def init_params(config: ModelConfig,
                key: PRNGKey,
                init_std: float = 0.02,
                dtype=jnp.float32) -> ParamsSegModel:
    r"""Initialize parameters.

    Embeddings and weight matrices are drawn from a normal truncated at two
    standard deviations with std ``init_std``; biases are zero and layer norm
    scales are one.

    """
    validate_config(config)
    d, ff = config.d_model, config.d_ff
    keys = iter(jr.split(key, 8 + 6 * config.n_layers))
    normal = lambda shape: (init_std * jr.truncated_normal(next(keys), -2.0, 2.0, shape)).astype(dtype)
    zeros = lambda shape: jnp.zeros(shape, dtype)
    norm = lambda: ParamsLayerNorm(scale=jnp.ones(d, dtype), bias=zeros(d))

    embeddings = ParamsEmbeddings(
        token=normal((config.vocab_size, d)),
        position=normal((config.max_seq_len, d)),
        segment=normal((2, d)),
        phone=normal((config.phone_vocab_size, d)) if config.use_phone else None)

    layers = []
    for _ in range(config.n_layers):
        attention = ParamsAttention(
            query=normal((d, d)), query_bias=zeros(d),
            key=normal((d, d)),
            value=normal((d, d)), value_bias=zeros(d),
            output=normal((d, d)), output_bias=zeros(d))
        feed_forward = ParamsFeedForward(
            hidden=normal((d, ff)), hidden_bias=zeros(ff),
            output=normal((ff, d)), output_bias=zeros(d))
        layers.append(ParamsEncoderLayer(norm(), attention, norm(), feed_forward))

    classifier = ParamsClassifier(weights=normal((d, 2)), bias=zeros(2))
    return ParamsSegModel(embeddings, tuple(layers), classifier)


def init_model(config: ModelConfig, key: PRNGKey = jr.PRNGKey(0), init_std: float = 0.02,
               dtype=jnp.float32) -> SegModel:
    """Create a freshly initialized :class:`SegModel`."""
    return SegModel(config, init_params(config, key, init_std, dtype))
