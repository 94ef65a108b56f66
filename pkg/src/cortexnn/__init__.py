"""cortexnn: shape-routed multi-task learning with error-driven reflection.

A mixed dataset is partitioned by tensor shape into task groups. Each group
trains a general base network; samples the general network handles poorly
are clustered and handed to freshly trained specialist networks; a
gain-ratio decision tree then routes every future input to the network
that should answer it.
"""

from .tensor import Shape, Tensor, TensorError, flatten, from_array, make_tensor, reshape, shapes_equal

__version__ = "0.1.0"

__all__ = [
    "Shape",
    "Tensor",
    "TensorError",
    "flatten",
    "from_array",
    "make_tensor",
    "reshape",
    "shapes_equal",
    "__version__",
]
