"""Hot-kernel dispatch: compiled extension when available, NumPy otherwise.

Set ``PARABOLAB_PURE=1`` to force the pure path (used by the benchmark and
the equivalence tests).
"""

import os

from . import pure

if os.environ.get("PARABOLAB_PURE", "") == "1":
    _impl = pure
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = pure

IMPL = _impl.IMPL
pair_oscillations = _impl.pair_oscillations
smoothstep_jets = _impl.smoothstep_jets

__all__ = ["IMPL", "pair_oscillations", "smoothstep_jets", "pure"]
