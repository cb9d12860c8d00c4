"""Kernel backend selection.

The minibatch loss/gradient evaluations are the simulator's hot inner
loop. At import time this package picks the compiled Cython backend when
it is built, falling back to the NumPy reference implementation
otherwise. Set FEDSIM_PURE_PYTHON=1 to force the fallback.

Logit helpers (used only for evaluation, not hot) always come from the
reference backend.
"""

import os

from . import _ref
from ._ref import logreg_logits, mlp_logits

if os.environ.get("FEDSIM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _ref
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _ref

BACKEND = _impl.BACKEND

logreg_loss = _impl.logreg_loss
logreg_grad = _impl.logreg_grad
mlp_loss = _impl.mlp_loss
mlp_grad = _impl.mlp_grad


def available_backends():
    """Names of the backends importable in this installation."""
    names = ["numpy"]
    try:
        from . import _fast  # noqa: F401

        names.append("cython")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Return the backend module for ``name`` ("numpy" or "cython")."""
    if name == "numpy":
        return _ref
    if name == "cython":
        from . import _fast

        return _fast
    raise ValueError(f"unknown kernel backend: {name!r}")
