"""Python bindings for the eps-rank numerical laboratory.

Installed builds ship the compiled module inside this package. When running
from a source tree (ctest's python smoke tests), EPSRANK_MODULE_DIR points at
the CMake build directory holding the freshly built module.
"""

import os
import sys

try:
    from ._core import (  # noqa: F401
        compress,
        gram_spectrum,
        preset_names,
        preset_text,
        probe_lemma,
        rfm_compare,
        run_preset,
    )
except ImportError:
    _dir = os.environ.get("EPSRANK_MODULE_DIR")
    if not _dir:
        raise
    sys.path.insert(0, _dir)
    from _core import (  # noqa: F401
        compress,
        gram_spectrum,
        preset_names,
        preset_text,
        probe_lemma,
        rfm_compare,
        run_preset,
    )

__all__ = [
    "compress",
    "gram_spectrum",
    "preset_names",
    "preset_text",
    "probe_lemma",
    "rfm_compare",
    "run_preset",
]
