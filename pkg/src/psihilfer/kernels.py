"""Quadrature kernel backend, chosen once at import.

The compiled extension ``_kernels`` is used when it was built; otherwise, or
when ``PSIHILFER_PURE_PYTHON`` is set to a non-empty value, the numpy
implementation in ``_kernels_py`` is used. Both expose ``cell_weights``,
``rl_weights`` and ``rl_apply`` with identical semantics.
"""

import os

from . import _kernels_py

if os.environ.get("PSIHILFER_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "pure-python" if _impl is _kernels_py else "compiled"

cell_weights = _impl.cell_weights
rl_weights = _impl.rl_weights
rl_apply = _impl.rl_apply

__all__ = ["BACKEND", "cell_weights", "rl_weights", "rl_apply"]
