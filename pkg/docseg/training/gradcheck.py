import logging
from typing import Optional

import jax.numpy as jnp
import jax.random as jr
from jax import grad, jit
from jax.tree_util import tree_flatten, tree_leaves, tree_unflatten

from docseg.model.encoder import window_loss
from docseg.model.inputs import pad_window, to_device, validate_window
from docseg.model.models import ModelConfig, init_params
from docseg.parameters import ParameterProperties, default_properties, freeze, trainable_leaves
from docseg.training.samples import TrainSample
from docseg.types import PRNGKey
from docseg.utils.utils import double_precision, named_leaves

logger = logging.getLogger(__name__)


def relative_error(analytic, numeric, floor: float = 1e-8) -> float:
    """Largest coordinate-wise ``|a - n| / max(|a| + |n|, floor)``."""
    analytic, numeric = jnp.asarray(analytic), jnp.asarray(numeric)
    scale = jnp.maximum(jnp.abs(analytic) + jnp.abs(numeric), floor)
    return float(jnp.max(jnp.abs(analytic - numeric) / scale, initial=0.0))


def grad_check(model_config: ModelConfig,
               sample: TrainSample,
               epsilon: float = 1e-6,
               num_coordinates: int = 20,
               key: PRNGKey = jr.PRNGKey(0),
               init_std: float = 0.3,
               only: Optional[str] = None) -> float:
    r"""Compare exact gradients with central finite differences.

    A model is initialized in double precision with dropout disabled. For every
    parameter tensor, ``num_coordinates`` randomly chosen entries (all of them
    for smaller tensors) are perturbed by ``±epsilon`` and the difference
    quotient of the loss is compared with the gradient.

    Args:
        model_config: architecture to check.
        sample: window and labels defining the loss.
        epsilon: finite-difference step.
        num_coordinates: sampled entries per tensor.
        key: random key for initialization and coordinate sampling.
        init_std: initialization scale; larger than the training default so
            that every tensor receives a sizeable gradient.
        only: if given, only parameters whose path starts with this prefix
            (e.g. ``classifier``) are trainable; the rest are frozen.

    Returns:
        the largest relative error over all checked coordinates.

    """
    config = model_config._replace(dropout_rate=0.0)
    validate_window(sample.window, config, cls_span=sample.window.sentence_spans[:1] == ((0, 1),))
    if len(sample.labels) != sample.window.num_sentences:
        raise ValueError("label count must equal sentence count")

    with double_precision():
        init_key, coord_key = jr.split(key)
        params = init_params(config, init_key, init_std=init_std, dtype=jnp.float64)
        names = [name for name, _ in named_leaves(params)]
        leaves, treedef = tree_flatten(params)
        props = None
        if only is not None:
            props = default_properties(params)
            for name, prop in zip(names, tree_leaves(props, is_leaf=lambda x: isinstance(x, ParameterProperties))):
                prop.trainable = name.startswith(only)

        num_phones = max([len(p) for p in sample.window.phone_ids or ()] + [1])
        arrays = to_device(pad_window(sample.window, len(sample.window.token_ids), sample.window.num_sentences,
                                      num_phones))
        labels = jnp.asarray(sample.labels, dtype=jnp.int32)

        loss_fn = jit(lambda p: window_loss(freeze(p, props), arrays, labels, config))
        grads = tree_leaves(jit(grad(lambda p: window_loss(freeze(p, props), arrays, labels, config)))(params))

        worst = 0.0
        for i, (name, trainable) in enumerate(zip(names, trainable_leaves(props, params))):
            if not trainable:
                continue
            size = leaves[i].size
            coords = jnp.arange(size) if size <= num_coordinates else \
                jr.choice(jr.fold_in(coord_key, i), size, (num_coordinates,), replace=False)

            numeric = []
            for j in coords.tolist():
                values = []
                for sign in (1.0, -1.0):
                    shifted = list(leaves)
                    shifted[i] = leaves[i].reshape(-1).at[j].add(sign * epsilon).reshape(leaves[i].shape)
                    values.append(float(loss_fn(tree_unflatten(treedef, shifted))))
                numeric.append((values[0] - values[1]) / (2 * epsilon))

            error = relative_error(grads[i].reshape(-1)[coords], jnp.asarray(numeric))
            logger.debug("%s: relative error %.3e", name, error)
            worst = max(worst, error)
    return worst
