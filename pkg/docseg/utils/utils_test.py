import jax
import jax.numpy as jnp

from docseg.model.models import ModelConfig, init_params
from docseg.utils.utils import double_precision, monotonically_decreasing, named_leaves, pytree_all_finite
from jax.tree_util import tree_leaves


def test_named_leaves_follow_tree_order():
    params = init_params(ModelConfig(vocab_size=10, d_model=8, n_layers=2, n_heads=2, d_ff=16, max_seq_len=16),
                         jax.random.PRNGKey(0))
    names = [name for name, _ in named_leaves(params)]
    assert names[:3] == ["embeddings/token", "embeddings/position", "embeddings/segment"]
    assert "layers/1/attention/query" in names
    assert names[-2:] == ["classifier/weights", "classifier/bias"]
    assert len(names) == len(tree_leaves(params))
    for (_, a), b in zip(named_leaves(params), tree_leaves(params)):
        assert a is b


def test_double_precision_restores_setting():
    before = jax.config.read("jax_enable_x64")
    with double_precision():
        assert jnp.zeros(1, dtype=jnp.float64).dtype == jnp.float64
    assert jax.config.read("jax_enable_x64") == before


def test_all_finite():
    assert pytree_all_finite((jnp.ones(2), jnp.zeros(3)))
    assert not pytree_all_finite((jnp.ones(2), jnp.array([jnp.inf])))


def test_monotonically_decreasing():
    assert monotonically_decreasing([3.0, 2.0, 2.0, 1.0])
    assert not monotonically_decreasing([3.0, 2.0, 2.5])
    assert monotonically_decreasing([3.0, 2.0, 2.01], atol=0.02)
