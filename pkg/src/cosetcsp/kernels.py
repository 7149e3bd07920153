"""Selects the refinement kernel: compiled when available, pure Python otherwise.

Set ``COSETCSP_PURE=1`` to force the pure-Python kernel.
"""

import os

from ._refine_py import refine_pass as python_refine_pass

try:
    from ._refine import refine_pass as compiled_refine_pass
except ImportError:  # extension not built
    compiled_refine_pass = None

KERNELS = {"python": python_refine_pass}
if compiled_refine_pass is not None:
    KERNELS["compiled"] = compiled_refine_pass


def default_kernel() -> str:
    if os.environ.get("COSETCSP_PURE") or compiled_refine_pass is None:
        return "python"
    return "compiled"


def get_kernel(name=None):
    name = name or default_kernel()
    if name not in KERNELS:
        raise ValueError(f"kernel {name!r} unavailable; have {sorted(KERNELS)}")
    return name, KERNELS[name]
