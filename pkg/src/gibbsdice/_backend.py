"""Select the kernel implementation at import time.

The compiled ``_ckernels`` extension is preferred.  Setting the environment
variable ``GIBBSDICE_PURE=1`` forces the numpy fallback, as does a missing
build.
"""

import os

from . import _pykernels

pure = _pykernels

if os.environ.get("GIBBSDICE_PURE", "") not in ("", "0"):
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:
        kernels = _pykernels
        BACKEND = "python"


def compiled():
    """The compiled module, or ``None`` when it was not built."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels
