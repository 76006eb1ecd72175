"""framesim: adaptive displaced-frame simulation of driven cavity-QED/optomechanics."""

import os as _os

__version__ = "0.1.0"

# The hot loops are numba kernels; BLAS only sees small factor-sized
# products, and OpenBLAS's spin-waiting workers otherwise starve the numba
# pool (5x slowdown measured on 2 cores).  Pin BLAS to one thread.
_os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
try:
    from threadpoolctl import threadpool_limits as _limits

    _limits(limits=1, user_api="blas")
except Exception:  # pragma: no cover - threadpoolctl is optional
    pass

from . import analysis, fockops, frames, lindblad, models, protocol, theory  # noqa: F401,E402
