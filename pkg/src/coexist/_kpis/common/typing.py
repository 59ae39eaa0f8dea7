from typing import Union

import numpy as np
from typing_extensions import Literal

__all__ = [
    "Float",
    "FloatArray",
    "Truncation",
    "Provenance",
    "OverlapMode",
]

_NumpyFloat = Union[np.float16, np.float32, np.float64]

Float = Union[float, _NumpyFloat]
FloatArray = Union[Float, np.ndarray]

Truncation = Literal["paper-literal", "normalized-conditional", "with-failure-tail"]
Provenance = Literal["analytic", "monte-carlo"]
OverlapMode = Literal["sampled", "mean"]
