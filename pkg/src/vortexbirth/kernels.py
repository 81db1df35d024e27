"""Stencil kernel backend: the compiled extension when built, numpy otherwise.

Set ``VORTEXBIRTH_PURE_PYTHON=1`` to force the numpy implementation.
"""

import os

if os.environ.get("VORTEXBIRTH_PURE_PYTHON"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

advance = _impl.advance
divergence = _impl.divergence
projection_operator = _impl.projection_operator
correct_velocity = _impl.correct_velocity
bilinear = _impl.bilinear

__all__ = ["BACKEND", "advance", "divergence", "projection_operator", "correct_velocity", "bilinear"]
