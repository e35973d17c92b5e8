"""Backend selection for the batch steady-state kernel.

The compiled Cython extension is used when it was built; otherwise the
pure-numpy implementation takes over. Set ``THINCELL_KERNEL=numpy`` to force
the fallback.
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_IMPLS = {"numpy": _kernels_py.solve_affine}
if _compiled is not None:
    _IMPLS["cython"] = _compiled.solve_affine

_requested = os.environ.get("THINCELL_KERNEL", "").strip().lower()
if _requested and _requested not in ("numpy", "cython"):
    raise ImportError(f"THINCELL_KERNEL={_requested!r}; expected 'numpy' or 'cython'")
if _requested == "cython" and _compiled is None:
    raise ImportError("THINCELL_KERNEL=cython but the compiled extension is missing")

BACKEND = _requested or ("cython" if _compiled is not None else "numpy")


def available_backends():
    return sorted(_IMPLS)


def solve_affine(parts, coeffs, rhs_row=0, backend=None):
    """Solve a batch of systems ``M_n x_n = e_rhs`` with ``M_n = coeffs[n] . parts``.

    Returns ``(x, residual, pivot_ratio)``.
    """
    return _IMPLS[backend or BACKEND](parts, coeffs, rhs_row)
