"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``DIFFEVO_PURE=1`` is set, the numpy fallback is used.
"""

import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("DIFFEVO_PURE", "") not in ("", "0"):
        raise ImportError("pure backend forced by DIFFEVO_PURE")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"

# the compiled weight kernel is O(N^2 d) without BLAS; for wide keys the
# fallback's matrix-product expansion is faster
_COMPILED_MAX_DIM = 256


def available_backends():
    return ("compiled", "python") if _compiled is not None else ("python",)


def backend_module(name=None):
    name = name or BACKEND
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        return _compiled
    if name == "python":
        return _fallback
    raise ValueError(f"unknown backend {name!r}")


def origin_weights(queries, keys, log_q, alpha, backend=None):
    """Row-softmax kernel weights; see ``_fallback.origin_weights``."""
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    keys = np.ascontiguousarray(keys, dtype=np.float64)
    log_q = np.ascontiguousarray(log_q, dtype=np.float64)
    mod = backend_module(backend)
    if mod is _compiled and queries.shape[1] > _COMPILED_MAX_DIM and backend is None:
        mod = _fallback
    return mod.origin_weights(queries, keys, log_q, float(alpha))


def rollout_batch(params, sizes, init, max_steps, backend=None):
    """Cart-pole rollouts for (N, P) params and (N, E, 4) initial states."""
    params = np.ascontiguousarray(params, dtype=np.float64)
    sizes = np.ascontiguousarray(sizes, dtype=np.int64)
    init = np.ascontiguousarray(init, dtype=np.float64)
    return backend_module(backend).rollout_batch(params, sizes, init, int(max_steps))
