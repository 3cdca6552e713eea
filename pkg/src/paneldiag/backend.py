"""Kernel selection: compiled extension when available, numpy fallback otherwise.

Set ``PANELDIAG_BACKEND=python`` to force the fallback (used by the benchmark
and by tests that compare the two implementations).
"""

import os

if os.environ.get("PANELDIAG_BACKEND", "").lower() == "python":
    from . import _kernel_py as kernel
else:
    try:
        from . import _kernel as kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernel_py as kernel

BACKEND = kernel.BACKEND_NAME

STATUS_CONVERGED = kernel.STATUS_CONVERGED
STATUS_NO_CONVERGENCE = kernel.STATUS_NO_CONVERGENCE
STATUS_SEPARATION = kernel.STATUS_SEPARATION
STATUS_SINGULAR = kernel.STATUS_SINGULAR

newton_logit = kernel.newton_logit
weighted_residual_cross = kernel.weighted_residual_cross
