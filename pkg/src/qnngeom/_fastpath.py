"""Optional numba-compiled kernel for variational-layer sweeps.

Computes bit-for-bit the same layer updates as the numpy path in
``quantum.py`` (permutation gather followed by per-qubit RY pair
rotations), but holds each statevector row in cache across all layers of a
sweep.  Falls back silently when numba is missing or QNNGEOM_NO_NUMBA is
set; callers must produce identical results either way.
"""

from __future__ import annotations

import os

import numpy as np

AVAILABLE = False

if not os.environ.get("QNNGEOM_NO_NUMBA"):
    try:
        from numba import config, njit, prange

        config.THREADING_LAYER = "workqueue"  # always present, warning-free
        AVAILABLE = True
    except ImportError:  # pragma: no cover - depends on environment
        pass


if AVAILABLE:

    @njit(cache=True, parallel=False)
    def _row_layers(row, scratch, perm, cos_half, sin_half, do_perm):
        dim = row.shape[0]
        n_layers, n_qubits = cos_half.shape
        for layer in range(n_layers):
            if do_perm[layer]:
                for i in range(dim):
                    scratch[i] = row[perm[i]]
                for i in range(dim):
                    row[i] = scratch[i]
            for q in range(n_qubits):
                lower = 1 << q
                step = lower << 1
                c = cos_half[layer, q]
                s = sin_half[layer, q]
                for base in range(0, dim, step):
                    for i in range(base, base + lower):
                        a0 = row[i]
                        a1 = row[i + lower]
                        row[i] = c * a0 - s * a1
                        row[i + lower] = s * a0 + c * a1

    @njit(cache=True, parallel=True)
    def _apply_layers(amps, perm, cos_half, sin_half, do_perm):
        for b in prange(amps.shape[0]):
            scratch = np.empty(amps.shape[1], np.complex128)
            _row_layers(amps[b], scratch, perm, cos_half, sin_half, do_perm)

    def apply_var_layers(amps2d, perm, cos_half, sin_half, do_perm):
        """In-place layer sweep over a (batch, dim) C-contiguous array."""
        _apply_layers(
            amps2d,
            np.ascontiguousarray(perm, dtype=np.int64),
            np.ascontiguousarray(cos_half),
            np.ascontiguousarray(sin_half),
            np.ascontiguousarray(do_perm, dtype=np.bool_),
        )

else:

    def apply_var_layers(amps2d, perm, cos_half, sin_half, do_perm):  # pragma: no cover
        raise RuntimeError("numba fast path is unavailable")
