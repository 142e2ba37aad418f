"""Annotated numpy field types for pydantic models.

Arrays are stored read-only so validated models can be shared across threads,
and serialize to nested lists so ``model_dump_json`` round-trips them.
"""

from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer, WithJsonSchema


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def _as_float_array(value: Any) -> np.ndarray:
    array = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise ValueError("array contains non-finite entries")
    return _frozen(array)


def _as_int_array(value: Any) -> np.ndarray:
    array = np.asarray(value)
    if array.size and not np.issubdtype(array.dtype, np.integer):
        as_int = array.astype(np.int64)
        if not np.array_equal(as_int, array):
            raise ValueError("array must contain integers")
        array = as_int
    return _frozen(array.astype(np.int64))


def _to_list(array: np.ndarray) -> list:
    return array.tolist()


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_float_array),
    PlainSerializer(_to_list, return_type=list),
    WithJsonSchema({"type": "array", "items": {}}),
]

IntArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_int_array),
    PlainSerializer(_to_list, return_type=list),
    WithJsonSchema({"type": "array", "items": {}}),
]


class ArrayModel(BaseModel):
    """Frozen pydantic model whose fields may hold numpy arrays.

    Equality compares array fields elementwise (bit-exact); instances are unhashable.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    __hash__ = None  # type: ignore[assignment]

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        for name in type(self).model_fields:
            mine, theirs = getattr(self, name), getattr(other, name)
            if isinstance(mine, np.ndarray) or isinstance(theirs, np.ndarray):
                if not (isinstance(mine, np.ndarray) and isinstance(theirs, np.ndarray)):
                    return False
                if mine.shape != theirs.shape or not np.array_equal(mine, theirs):
                    return False
            elif mine != theirs:
                return False
        return True
