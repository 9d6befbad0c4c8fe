# TensorFlow Probability and JAX log a few annoying messages.
# We suppress these by default.
import logging
import warnings


class CheckTypesFilter(logging.Filter):
    """Drop TFP "check_types" notices sent to the root logger."""
    def filter(self, record):
        return "check_types" not in record.getMessage()


class NoAcceleratorFilter(logging.Filter):
    """Drop the JAX notice about falling back to the CPU backend."""
    def filter(self, record):
        message = record.getMessage()
        return "No GPU/TPU found" not in message and "An NVIDIA GPU may be present" not in message


logging.getLogger().addFilter(CheckTypesFilter())
logging.getLogger("jax._src.xla_bridge").addFilter(NoAcceleratorFilter())

# Catch UserWarning: Explicitly requested dtype float64 requested in zeros is not available...
warnings.filterwarnings("ignore", category=UserWarning, message="Explicitly requested dtype")
warnings.filterwarnings("ignore", category=DeprecationWarning, message="Using or importing the ABCs")
