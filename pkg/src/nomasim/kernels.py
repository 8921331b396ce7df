"""Kernel backend selection.

The compiled extension is used when it was built; otherwise (or when
``NOMASIM_PURE_PYTHON`` is set) the numpy implementation is used. Both
backends return identical results for identical inputs.
"""

import os

from . import _kernels_py

BACKENDS = {"python": _kernels_py}

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    BACKENDS["compiled"] = _compiled

if _compiled is not None and not os.environ.get("NOMASIM_PURE_PYTHON"):
    BACKEND = "compiled"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]


def get_backend(name=None):
    """Kernel module by name; ``None`` returns the active one."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable (have {sorted(BACKENDS)})") from None


def decode_pairs(alpha, eps, policy):
    return _impl.decode_pairs(alpha, eps, policy)


def orb_slots(orb, level, alpha, alpha_gb, eps_gb, eps_gf):
    return _impl.orb_slots(orb, level, alpha, alpha_gb, eps_gb, eps_gf)
