"""
Dense float64 tensor used by every computation in the forecaster.
A Tensor is an immutable wrapper around a read-only numpy array of rank 0-3.
"""

import numpy as np

from .errors import DimensionError

MAX_RANK = 3


class Tensor:
    """
    Immutable dense array with exact shape bookkeeping.

    Rank 0 is allowed for scalars (losses); every other dimension must be a
    positive integer. Values are always stored as 64-bit floats.
    """

    __slots__ = ("_data",)

    def __init__(self, data):
        array = np.array(data, dtype=np.float64)
        if array.ndim > MAX_RANK:
            raise DimensionError(
                f"Tensor rank {array.ndim} exceeds the supported maximum {MAX_RANK}"
            )
        if any(dim <= 0 for dim in array.shape):
            raise DimensionError(
                f"Tensor dimensions must be positive, got shape {array.shape}"
            )
        array.setflags(write=False)
        self._data = array

    @property
    def data(self):
        """Read-only view of the underlying values."""
        return self._data

    @property
    def shape(self):
        return self._data.shape

    @property
    def ndim(self):
        return self._data.ndim

    @property
    def size(self):
        return self._data.size

    def numpy(self):
        """Return a writable copy of the values."""
        return self._data.copy()

    def item(self):
        if self._data.size != 1:
            raise DimensionError(f"item() needs a single value, got shape {self.shape}")
        return float(self._data.reshape(-1)[0])

    def tolist(self):
        return self._data.tolist()

    def is_finite(self):
        return bool(np.all(np.isfinite(self._data)))

    def __repr__(self):
        return f"Tensor(shape={self.shape}, data={self._data.tolist()!r})"

    # Operator sugar; the named functions in ops.py are the real entry points.
    def __matmul__(self, other):
        from .ops import matmul

        return matmul(self, other)

    def __add__(self, other):
        from .ops import add

        return add(self, _as_tensor(other))

    def __sub__(self, other):
        from .ops import sub

        return sub(self, _as_tensor(other))

    def __mul__(self, other):
        from .ops import hadamard, scale

        if isinstance(other, Tensor):
            return hadamard(self, other)
        return scale(self, float(other))

    def __rmul__(self, other):
        from .ops import scale

        return scale(self, float(other))

    def __neg__(self):
        from .ops import scale

        return scale(self, -1.0)


def _as_tensor(value):
    """Wrap arrays and nested lists; pass tensors through untouched."""
    return value if isinstance(value, Tensor) else Tensor(value)
