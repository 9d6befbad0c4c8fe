__version__ = "0.1.0"

# Catch expected warnings from TFP and JAX
import docseg.warnings

# Default to float32 matrix multiplication on TPUs and GPUs
import jax
jax.config.update('jax_default_matmul_precision', 'float32')
