import jax.numpy as jnp
import jax.random as jr
import numpy as np
import pytest
from jax.tree_util import tree_leaves, tree_map

from docseg.model.checkpoint import load_model, save_model
from docseg.model.models import ModelConfig, init_model


@pytest.mark.parametrize("use_phone", [False, True])
def test_checkpoint_round_trip(tmp_path, use_phone):
    config = ModelConfig(vocab_size=30, phone_vocab_size=5, d_model=8, n_layers=2, n_heads=2, d_ff=16,
                         max_seq_len=32, use_phone=use_phone)
    model = init_model(config, jr.PRNGKey(7))
    path = tmp_path / "model.npz"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.config == config
    assert all(tree_leaves(tree_map(jnp.array_equal, model.params, loaded.params)))


def test_checkpoint_shape_mismatch(tmp_path):
    model = init_model(ModelConfig(vocab_size=30, d_model=8, n_layers=1, n_heads=2, d_ff=16, max_seq_len=32))
    path = tmp_path / "model.npz"
    save_model(model, path)

    with np.load(path) as data:
        arrays = dict(data)
    arrays["classifier/weights"] = np.zeros((4, 2), dtype=np.float32)
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    with pytest.raises(ValueError, match="classifier/weights"):
        load_model(path)


def test_checkpoint_missing_tensor(tmp_path):
    model = init_model(ModelConfig(vocab_size=30, d_model=8, n_layers=1, n_heads=2, d_ff=16, max_seq_len=32))
    path = tmp_path / "model.npz"
    save_model(model, path)

    with np.load(path) as data:
        arrays = {k: v for k, v in data.items() if k != "layers/0/attention/query"}
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    with pytest.raises(ValueError, match="missing tensor"):
        load_model(path)
