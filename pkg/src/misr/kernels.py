"""Backend selection for the hot loops.

The compiled extension ``misr._kernels`` is used when it imports; otherwise,
or when ``MISR_PURE_PYTHON=1`` is set, the numpy implementations in
``misr._kernels_py`` are used.  Both expose the same functions.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("MISR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def ete_upscale(e, filters, origins):
    return _impl.ete_upscale(
        np.ascontiguousarray(e, dtype=np.float64),
        np.ascontiguousarray(filters, dtype=np.float64),
        np.ascontiguousarray(origins, dtype=np.int64),
    )


def btv_value(x, p, alpha):
    return float(_impl.btv_value(np.ascontiguousarray(x, dtype=np.float64), int(p), float(alpha)))


def btv_grad(x, p, alpha):
    return _impl.btv_grad(np.ascontiguousarray(x, dtype=np.float64), int(p), float(alpha))
