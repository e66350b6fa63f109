"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
implementation in ``_kernels_py`` is used.  Setting ``ADVACT_PURE_PYTHON=1``
forces the fallback.  ``BACKEND`` names the active choice.
"""

import os

from advact import _kernels_py

NAMES = (
    "sigmoid_vd",
    "sigmoid_theta_vd",
    "xi_sigmoid_vd",
    "xi_sigmoid_theta_vd",
    "tanh_vd",
    "gelu_vd",
    "tanh_split4_vp",
    "gelu_split4_vp",
    "xi_tanh_fwd",
    "xi_tanh_bwd",
    "xi_gelu_fwd",
    "xi_gelu_bwd",
)


def _load():
    if os.environ.get("ADVACT_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from advact import _kernels
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "cython"


def compiled_module():
    """Return the compiled module, or None when it is not built."""
    try:
        from advact import _kernels
    except ImportError:
        return None
    return _kernels


_impl, BACKEND = _load()

sigmoid_vd = _impl.sigmoid_vd
sigmoid_theta_vd = _impl.sigmoid_theta_vd
xi_sigmoid_vd = _impl.xi_sigmoid_vd
xi_sigmoid_theta_vd = _impl.xi_sigmoid_theta_vd
tanh_vd = _impl.tanh_vd
gelu_vd = _impl.gelu_vd
tanh_split4_vp = _impl.tanh_split4_vp
gelu_split4_vp = _impl.gelu_split4_vp
xi_tanh_fwd = _impl.xi_tanh_fwd
xi_tanh_bwd = _impl.xi_tanh_bwd
xi_gelu_fwd = _impl.xi_gelu_fwd
xi_gelu_bwd = _impl.xi_gelu_bwd
