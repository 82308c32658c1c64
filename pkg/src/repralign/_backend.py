"""Kernel backend selection.

The compiled module is used when it imports; ``REPRALIGN_PURE_PYTHON=1``
forces the numpy fallback.  Functions taking ``backend=`` accept
``"compiled"``, ``"python"`` or ``None`` (the default chosen here).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

if _ckernels is not None and not os.environ.get("REPRALIGN_PURE_PYTHON"):
    DEFAULT = "compiled"
else:
    DEFAULT = "python"


def available() -> list[str]:
    return ["compiled", "python"] if _ckernels is not None else ["python"]


def kernels(backend: str | None = None) -> ModuleType:
    name = backend or DEFAULT
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built; reinstall or use backend='python'")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
