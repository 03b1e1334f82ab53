"""Kernel backend selection.

The convolution and pooling kernels exist twice: a Cython extension
(``mmattack.backend._ck``) and a pure-numpy fallback. The compiled one is
picked at import time when present; set ``MMATTACK_BACKEND=numpy`` or
``MMATTACK_BACKEND=cython`` to force a choice. Both expose the same four
functions and produce identical results.
"""

import os

from ..errors import ConfigError
from . import numpy_kernels

_forced = os.environ.get("MMATTACK_BACKEND")
if _forced not in (None, "", "numpy", "cython"):
    raise ConfigError(f"MMATTACK_BACKEND must be 'numpy' or 'cython', got {_forced!r}")

_impl = None
if _forced in (None, "", "cython"):
    try:
        from . import _ck as _impl
    except ImportError:
        if _forced == "cython":
            raise ConfigError("MMATTACK_BACKEND=cython but the compiled extension is not built")
        _impl = None
if _impl is None:
    _impl = numpy_kernels

ACTIVE_BACKEND = _impl.BACKEND_NAME

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool2d_forward = _impl.maxpool2d_forward
maxpool2d_backward = _impl.maxpool2d_backward
