"""Dense numeric arrays with explicit shapes.

Shapes double as the routing key of the sensory stage: two samples belong
to the same task group exactly when their (input shape, output shape)
pairs match. Values are float64 and row-major everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class TensorError(ValueError):
    """Raised for malformed shapes or tensor values."""


@dataclass(frozen=True)
class Shape:
    """An ordered list of positive dimensions, e.g. (28, 28, 1)."""

    dims: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.dims, tuple):
            object.__setattr__(self, "dims", tuple(self.dims))
        if len(self.dims) == 0:
            raise TensorError("shape must have at least one dimension")
        for d in self.dims:
            if not isinstance(d, (int, np.integer)) or d < 1:
                raise TensorError(f"shape dimensions must be positive integers, got {self.dims}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def __str__(self):
        return "x".join(str(d) for d in self.dims)


class Tensor:
    """Immutable flat float64 buffer plus its Shape.

    The buffer is row-major; consumers that need the grid view use
    ``to_array()`` which reshapes without copying.
    """

    __slots__ = ("shape", "data")

    def __init__(self, shape: Shape, data: np.ndarray):
        # Internal constructor: data must already be validated float64.
        object.__setattr__(self, "shape", shape)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    @property
    def values(self) -> list[float]:
        return self.data.tolist()

    def to_array(self) -> np.ndarray:
        """Read-only view with the tensor's full dimensionality."""
        return self.data.reshape(self.shape.dims)

    def __len__(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.shape}, n={self.data.size})"

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        return shapes_equal(self.shape, other.shape) and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.shape, self.data.tobytes()))


def make_tensor(shape: Shape, values) -> Tensor:
    """Construct a tensor owning a copy of ``values``.

    Rejects length mismatches and non-finite entries, naming the first
    offending index so parser errors point at the bad byte/value.
    """
    if not isinstance(shape, Shape):
        shape = Shape(tuple(shape))
    data = np.array(values, dtype=np.float64).ravel()
    if data.size != shape.size:
        raise TensorError(
            f"length mismatch: shape {shape} needs {shape.size} values, got {data.size}"
        )
    finite = np.isfinite(data)
    if not finite.all():
        idx = int(np.argmin(finite))
        raise TensorError(f"non-finite value {data[idx]} at index {idx}")
    return Tensor(shape, data)


def from_array(arr: np.ndarray) -> Tensor:
    """Tensor from a numpy array, keeping its dimensions as the shape."""
    return make_tensor(Shape(tuple(arr.shape)), np.ascontiguousarray(arr, dtype=np.float64))


def flatten(t: Tensor) -> Tensor:
    """Shape-[n] view of the same values in the same row-major order."""
    if len(t.shape.dims) == 1:
        return t
    return Tensor(Shape((t.data.size,)), t.data)


def reshape(t: Tensor, shape: Shape) -> Tensor:
    """Same buffer under a new shape of equal element count."""
    if shape.size != t.data.size:
        raise TensorError(f"length mismatch: cannot view {t.data.size} values as {shape}")
    return Tensor(shape, t.data)


def shapes_equal(a: Shape, b: Shape) -> bool:
    return a.dims == b.dims
