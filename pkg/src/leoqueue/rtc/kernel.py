"""Select the call-simulation kernel at import time.

The compiled extension is used when it was built; otherwise (or when
``LEOQUEUE_PURE_PYTHON=1`` is set) the pure-Python reference runs.
"""

from __future__ import annotations

import logging
import os

from . import _core_py

log = logging.getLogger(__name__)

if os.environ.get("LEOQUEUE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _core_py
    KERNEL = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
        KERNEL = "compiled"
    except ImportError:  # extension not built
        log.debug("compiled core unavailable, using pure-Python kernel")
        _impl = _core_py
        KERNEL = "python"

simulate = _impl.simulate
CFG_FIELDS = _core_py.CFG_FIELDS


def compiled_available() -> bool:
    try:
        from . import _core  # noqa: F401
        return True
    except ImportError:
        return False
