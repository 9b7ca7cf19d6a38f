"""Hot-kernel backend selection.

The compiled extension is preferred when importable; the numpy reference
implementation is the fallback. Selection happens once at import time and
can be forced with the environment variable ``H2V_KERNEL_BACKEND``
(``auto`` | ``native`` | ``numpy``).
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ConfigError
from . import reference

_requested = os.environ.get("H2V_KERNEL_BACKEND", "auto")
if _requested not in ("auto", "native", "numpy"):
    raise ConfigError(f"H2V_KERNEL_BACKEND must be auto|native|numpy, got {_requested!r}")

_impl = reference
BACKEND = "numpy"
if _requested in ("auto", "native"):
    try:
        from . import _native as _impl_native

        _impl = _impl_native
        BACKEND = "native"
    except ImportError:
        if _requested == "native":
            raise ConfigError(
                "H2V_KERNEL_BACKEND=native but the compiled extension is not "
                "built; reinstall with a C compiler or use auto/numpy"
            ) from None


def backend() -> str:
    """Name of the active kernel backend ('native' or 'numpy')."""
    return BACKEND


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def im2col(x, kh, kw, sh, sw):
    return _impl.im2col(_f64(x), int(kh), int(kw), int(sh), int(sw))


def col2im(cols, c, h, w, kh, kw, sh, sw):
    return _impl.col2im(_f64(cols), int(c), int(h), int(w), int(kh), int(kw), int(sh), int(sw))


def roi_align_forward(fmap, rois, oh, ow, ratio):
    return _impl.roi_align_forward(_f64(fmap), _f64(rois), int(oh), int(ow), int(ratio))


def roi_align_backward(grad, rois, n, c, h, w, ratio):
    return _impl.roi_align_backward(
        _f64(grad), _f64(rois), int(n), int(c), int(h), int(w), int(ratio)
    )


def ncc_match(image, template, x0, y0, x1, y1):
    return _impl.ncc_match(_f64(image), _f64(template), int(x0), int(y0), int(x1), int(y1))
