"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set ``MFGMF_PURE_PYTHON=1`` to force the fallback (used by the benchmark and
the cross-implementation tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("MFGMF_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

IMPLEMENTATION: str = _impl.IMPLEMENTATION
gm_logpdf_points = _impl.gm_logpdf_points
accumulate_density_2d = _impl.accumulate_density_2d
