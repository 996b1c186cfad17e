"""Backend selection for the noise-generation kernels.

Prefers the compiled extension when it imported cleanly; falls back to the
NumPy implementation otherwise.  Set ``GENOSHARE_BACKEND=python`` to force
the fallback (useful for the backend-equivalence tests and the benchmark).
"""

import os

from . import _kernels_py

if os.environ.get("GENOSHARE_BACKEND", "").lower() == "python":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND

fill_independent = _impl.fill_independent
fill_markov = _impl.fill_markov


def available_backends():
    """Names of importable kernel backends (the compiled one may be absent)."""
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    return names
