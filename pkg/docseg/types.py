from typing import Tuple, Union
from jaxtyping import Array, Float, Int

PRNGKey = Union[Array, Int[Array, "2"]]

Scalar = Union[float, Float[Array, ""]] # python float or scalar jax array with dtype float

Span = Tuple[int, int] # half-open [start, end) index range
