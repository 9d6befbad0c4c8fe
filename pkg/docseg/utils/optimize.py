from functools import partial

import jax.numpy as jnp
import jax.random as jr
import optax
from jax import jit

from docseg.utils.utils import pytree_all_finite


def sample_minibatches(key, num_samples, batch_size, shuffle=True):
    """Yield index arrays of successive minibatches over ``num_samples`` items.

    The last minibatch may be smaller than ``batch_size``.
    """
    perm = jr.permutation(key, num_samples) if shuffle else jnp.arange(num_samples)
    for idx in range(0, num_samples, batch_size):
        yield perm[idx:min(idx + batch_size, num_samples)]


def make_optimizer(learning_rate=5e-5, b1=0.9, b2=0.999, eps=1e-8, accumulation_steps=1):
    """Adam, optionally averaging gradients over ``accumulation_steps`` calls before each update."""
    optimizer = optax.adam(learning_rate, b1=b1, b2=b2, eps=eps)
    if accumulation_steps > 1:
        optimizer = optax.MultiSteps(optimizer, every_k_schedule=accumulation_steps)
    return optimizer


def init_adam_state(params):
    """Zero first and second moments and a zero step count for every parameter.

    The state does not depend on the learning rate or the moment decay rates.
    """
    return optax.adam(1.0).init(params)


@partial(jit, static_argnames=["b1", "b2", "eps"])
def _adam_update(params, grads, state, lr, b1, b2, eps):
    updates, state = optax.adam(lr, b1=b1, b2=b2, eps=eps).update(grads, state, params)
    return optax.apply_updates(params, updates), state


def adam_step(params, grads, state, lr, b1=0.9, b2=0.999, eps=1e-8):
    r"""One bias-corrected Adam update.

    Args:
        params: parameter pytree.
        grads: gradient pytree with the same structure.
        state: state from :func:`init_adam_state` or a previous step.
        lr: learning rate.
        b1: first moment decay.
        b2: second moment decay.
        eps: denominator offset.

    Returns:
        updated parameters and optimizer state.

    """
    if not pytree_all_finite(grads):
        raise FloatingPointError("non-finite gradient")
    return _adam_update(params, grads, state, lr, b1, b2, eps)
