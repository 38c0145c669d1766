"""Backend selection for the hot interval kernels.

The compiled core is used when it was built; otherwise the numpy fallback
is used.  Setting ``BURGERSCAP_BACKEND=numpy`` forces the fallback.
"""
import os

from . import _fallback

fallback = _fallback

if os.environ.get("BURGERSCAP_BACKEND", "").lower() == "numpy":
    compiled = None
else:
    try:
        from . import _core as compiled
    except ImportError:
        compiled = None

if compiled is not None:
    imatmul = compiled.imatmul
    cconv = compiled.cconv
    BACKEND = "compiled"
else:
    imatmul = _fallback.imatmul
    cconv = _fallback.cconv
    BACKEND = "numpy"
