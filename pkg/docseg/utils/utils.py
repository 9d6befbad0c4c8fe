from contextlib import contextmanager
from typing import Any, List, Tuple

import jax
import jax.numpy as jnp
from jax.tree_util import tree_leaves


def monotonically_decreasing(x, atol=0, rtol=0):
    """True iff every entry of ``x`` is at most the previous one, up to the tolerances."""
    x = jnp.asarray(x)
    thresh = atol + rtol * jnp.abs(x[:-1])
    return bool(jnp.all(jnp.diff(x) <= thresh))


def pytree_all_finite(pytree) -> bool:
    """True iff every leaf of ``pytree`` is finite."""
    return all(bool(jnp.all(jnp.isfinite(x))) for x in tree_leaves(pytree))


def named_leaves(tree, prefix: str = "") -> List[Tuple[str, Any]]:
    r"""Flatten a tree of named tuples and tuples into ``(path, leaf)`` pairs.

    Paths join field names and tuple indices with ``/``, e.g.
    ``layers/0/attention/query``. The order matches :func:`jax.tree_util.tree_leaves`
    and ``None`` subtrees are skipped.

    """
    if tree is None:
        return []
    if hasattr(tree, "_fields"):
        children = [(name, getattr(tree, name)) for name in tree._fields]
    elif isinstance(tree, (tuple, list)):
        children = [(str(i), child) for i, child in enumerate(tree)]
    else:
        return [(prefix, tree)]

    out = []
    for name, child in children:
        out.extend(named_leaves(child, f"{prefix}/{name}" if prefix else name))
    return out


@contextmanager
def double_precision():
    """Enable 64-bit arrays for the duration of the block, restoring the previous setting afterwards."""
    previous = jax.config.read("jax_enable_x64")
    jax.config.update("jax_enable_x64", True)
    try:
        yield
    finally:
        jax.config.update("jax_enable_x64", previous)
