"""Tree sweep kernels.

A compiled extension (``_ctree``) provides the fast path; a pure numpy
module (``_pytree``) is the fallback and reference implementation. The
backend is picked once at import time. Set ``QUANTALGAMES_PURE=1`` to
force the numpy fallback.
"""

import os

if os.environ.get("QUANTALGAMES_PURE", "") not in ("", "0"):
    from . import _pytree as _impl

    BACKEND = "python"
else:
    try:
        from . import _ctree as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import _pytree as _impl

        BACKEND = "python"

edge_probs = _impl.edge_probs
forward_products = _impl.forward_products
backward_values = _impl.backward_values
infoset_action_values = _impl.infoset_action_values


def backend_name() -> str:
    """Name of the active kernel backend ('compiled' or 'python')."""
    return BACKEND
