import json
import logging
from functools import partial

import jax
import jax.numpy as jnp
import jax.random as jr
import numpy as np
from jax.tree_util import tree_flatten, tree_unflatten

from docseg.corpus.documents import PathLike
from docseg.model.models import ModelConfig, SegModel, init_params, validate_config
from docseg.utils.utils import named_leaves

logger = logging.getLogger(__name__)

CONFIG_KEY = "__config__"


def save_model(model: SegModel, path: PathLike) -> None:
    """Write a model as an ``.npz`` archive: the config as JSON plus one array per parameter path."""
    arrays = {name: np.asarray(leaf) for name, leaf in named_leaves(model.params)}
    arrays[CONFIG_KEY] = np.array(json.dumps(model.config._asdict()))
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    logger.info("saved model with %d tensors to %s", len(arrays) - 1, path)


def load_model(path: PathLike) -> SegModel:
    r"""Read a model written by :func:`save_model`.

    Every tensor is checked against the shape implied by the stored config.

    Raises:
        ValueError: if the config is invalid, or a tensor is missing, unexpected or misshapen.

    """
    with np.load(path, allow_pickle=False) as data:
        if CONFIG_KEY not in data.files:
            raise ValueError(f"{path} has no model config")
        config = ModelConfig(**json.loads(str(data[CONFIG_KEY])))
        validate_config(config)

        template = jax.eval_shape(partial(init_params, config, jr.PRNGKey(0)))
        _, treedef = tree_flatten(template)
        expected = named_leaves(template)
        unexpected = set(data.files) - {name for name, _ in expected} - {CONFIG_KEY}
        if unexpected:
            raise ValueError(f"unexpected tensors in checkpoint: {sorted(unexpected)}")

        leaves = []
        for name, spec in expected:
            if name not in data.files:
                raise ValueError(f"missing tensor {name}")
            value = data[name]
            if value.shape != spec.shape:
                raise ValueError(f"tensor {name} has shape {value.shape}, expected {spec.shape}")
            leaves.append(jnp.asarray(value))
    return SegModel(config, tree_unflatten(treedef, leaves))
