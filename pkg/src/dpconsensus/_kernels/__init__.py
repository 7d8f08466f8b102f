"""Kernel backend selection.

The compiled extension is preferred when importable; set
``DPCONSENSUS_BACKEND=pure`` (or ``compiled``) to force a choice.
"""

import os

from . import pure as _pure

_choice = os.environ.get("DPCONSENSUS_BACKEND", "auto").lower()

if _choice == "pure":
    _impl = _pure
elif _choice in ("auto", "compiled"):
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _pure
else:
    raise ValueError(f"unknown DPCONSENSUS_BACKEND {_choice!r}")

simulate = _impl.simulate
BACKEND_NAME = _impl.BACKEND_NAME

pure_simulate = _pure.simulate
KernelResult = _pure.KernelResult


def get_backend(name: str):
    """Return the simulate callable for an explicit backend name."""
    if name == "pure":
        return _pure.simulate
    if name == "compiled":
        from . import _fast

        return _fast.simulate
    raise ValueError(f"unknown backend {name!r}")
