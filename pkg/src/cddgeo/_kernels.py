"""Kernel backend selection.

The compiled extension is preferred; the pure-Python twin is the fallback.
Set CDDGEO_PURE_KERNELS=1 to force the fallback (used by the benchmark and
the equivalence tests).
"""

import os

if os.environ.get("CDDGEO_PURE_KERNELS"):
    from ._kernels_py import BACKEND, geodesic_rk4
else:
    try:
        from ._kernels_cy import BACKEND, geodesic_rk4
    except ImportError:
        from ._kernels_py import BACKEND, geodesic_rk4

__all__ = ["geodesic_rk4", "BACKEND"]
