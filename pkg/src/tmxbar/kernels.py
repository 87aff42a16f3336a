"""Training kernel selection.

The compiled extension is used when importable; the numpy fallback is
bit-identical, only slower. Set TMXBAR_FORCE_PYTHON_KERNELS=1 to force
the fallback (used by the benchmark and the equivalence tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("TMXBAR_FORCE_PYTHON_KERNELS") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

train_epoch = _impl.train_epoch
gate_threshold = _kernels_py.gate_threshold
float_threshold = _kernels_py.float_threshold


def backend_name() -> str:
    """'compiled' or 'python', whichever train_epoch dispatches to."""
    return _impl.BACKEND
