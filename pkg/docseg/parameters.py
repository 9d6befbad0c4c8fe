from typing import Optional
from jax import lax
from jax.tree_util import tree_leaves, tree_map, register_pytree_node_class
from typing_extensions import Protocol


class ParameterSet(Protocol):
    """Nested :class:`NamedTuple` of model weights, e.g. :class:`docseg.model.ParamsSegModel`."""
    pass

class PropertySet(Protocol):
    """The same nesting as a :class:`ParameterSet`, holding one :class:`ParameterProperties` per weight."""
    pass


@register_pytree_node_class
class ParameterProperties:
    """Per-weight metadata that travels through ``jit`` as static data.

    The ``trainable`` flag lives in the pytree's aux data, so flipping it
    retraces any jitted function that takes the properties as an argument.

    Args:
        trainable (bool): whether gradients flow into this weight.

    """
    def __init__(self, trainable: bool = True) -> None:
        self.trainable = trainable

    def tree_flatten(self):
        return (), (self.trainable,)

    @classmethod
    def tree_unflatten(cls, aux_data, children):
        return cls(*aux_data)

    def __repr__(self):
        return f"ParameterProperties(trainable={self.trainable})"


_is_prop = lambda node: isinstance(node, ParameterProperties)


def default_properties(params: ParameterSet, trainable: bool = True) -> PropertySet:
    """Build a matching property set with every leaf marked ``trainable``."""
    return tree_map(lambda _: ParameterProperties(trainable=trainable), params)


def freeze(params: ParameterSet, props: Optional[PropertySet]) -> ParameterSet:
    """Tag frozen parameters with a stop gradient.

    The gradient of any loss computed from the returned parameters is zero
    for every leaf whose property has ``trainable=False``.

    Args:
        params: (nested) named tuple of parameter arrays.
        props: matching named tuple of :class:`ParameterProperties`, or None
            if everything is trainable.

    Returns:
        params with frozen leaves wrapped in :func:`jax.lax.stop_gradient`.

    """
    if props is None:
        return params
    stop = lambda value, prop: value if prop.trainable else lax.stop_gradient(value)
    return tree_map(stop, params, props, is_leaf=_is_prop)


def trainable_leaves(props: Optional[PropertySet], params: ParameterSet):
    """Return a list of booleans, one per leaf of ``params`` in flattening order."""
    if props is None:
        return [True] * len(tree_leaves(params))
    return [prop.trainable for prop in tree_leaves(props, is_leaf=_is_prop)]
