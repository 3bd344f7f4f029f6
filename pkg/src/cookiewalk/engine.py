"""Kernel backend selection.

The compiled ``_cengine`` is used when it imports; otherwise, or when the
environment variable ``COOKIEWALK_ENGINE=python`` is set, the pure-Python
``_pyengine`` is used.  Both produce identical numbers.
"""

from __future__ import annotations

import logging
import os

from . import _pyengine

log = logging.getLogger(__name__)

_forced = os.environ.get("COOKIEWALK_ENGINE", "").lower()

try:
    from . import _cengine
except ImportError:  # no compiler at install time
    _cengine = None

if _forced == "python" or _cengine is None:
    if _forced == "cython" and _cengine is None:
        raise ImportError("COOKIEWALK_ENGINE=cython but the compiled engine is not built")
    kernels = _pyengine
else:
    kernels = _cengine

NAME = kernels.NAME
NO_LOWER = _pyengine.NO_LOWER
NO_UPPER = _pyengine.NO_UPPER


def available() -> dict:
    """Backends that can be imported, keyed by name."""
    out = {"python": _pyengine}
    if _cengine is not None:
        out["cython"] = _cengine
    return out


def get(name: str | None = None):
    if name is None:
        return kernels
    try:
        return available()[name]
    except KeyError:
        raise ValueError(f"engine {name!r} is not available") from None
