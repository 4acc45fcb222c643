"""Optional numba acceleration for the hot solver kernels.

JIT compilation is on by default and disabled by setting the environment
variable ``RACELINE_NUMBA`` to ``0``/``false``/``off`` (read once at import
time), or automatically when numba is not installed. With JIT off the same
kernel source runs under the plain interpreter, which keeps results
bit-identical between the two paths and makes debugging possible.
"""

import os


def _env_enabled() -> bool:
    flag = os.environ.get("RACELINE_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off")


JIT_ENABLED = _env_enabled()

if JIT_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        JIT_ENABLED = False

if not JIT_ENABLED:

    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper
