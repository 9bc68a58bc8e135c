"""Hot-loop kernels, compiled when available.

The Cython build (``_ckernels``) is used unless it failed to build or the
environment variable ``ICNGAME_PURE_PYTHON`` is set to a non-empty value
other than ``0``.  ``BACKEND`` names the implementation in use.
"""

import os

from . import _kernels_py

if os.environ.get("ICNGAME_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

G_NONE = _kernels_py.G_NONE
G_LINEAR = _kernels_py.G_LINEAR
G_MM1 = _kernels_py.G_MM1

closed_demand = _impl.closed_demand
congestion_g = _impl.congestion_g
congestion_fixed_point = _impl.congestion_fixed_point
utility = _impl.utility
own_price_range = _impl.own_price_range
best_response = _impl.best_response
brute_force_nash = _impl.brute_force_nash
max_deviation_gain = _impl.max_deviation_gain

__all__ = [
    "BACKEND",
    "G_NONE",
    "G_LINEAR",
    "G_MM1",
    "closed_demand",
    "congestion_g",
    "congestion_fixed_point",
    "utility",
    "own_price_range",
    "best_response",
    "brute_force_nash",
    "max_deviation_gain",
]
