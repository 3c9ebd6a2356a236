"""Backend selection: compiled extension when available, pure Python otherwise.

Set GELFANDLAB_BACKEND=python to force the fallback (used by the benchmark
and the backend-equivalence tests).
"""

from __future__ import annotations

import os

if os.environ.get("GELFANDLAB_BACKEND", "").lower() == "python":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

BACKEND = kernels.BACKEND_NAME

linear_ode_solve = kernels.linear_ode_solve
radial_shoot = kernels.radial_shoot
