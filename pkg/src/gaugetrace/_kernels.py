"""Hot transport kernels: batched backward RK4 with per-step polar retraction.

The classical one-step scheme integrates P' = A(t) P from the final value
P(1) = I down to t = 0, where A is sampled on the half-step grid
t_j = 1 - j/(2S).  After every step the iterate is retracted onto the
orthogonal group through its polar factor.

Kernels are numba-jitted when numba is importable; set GAUGETRACE_DISABLE_JIT=1
to force the pure-numpy path (same math, vectorized over the batch axis).
"""

from __future__ import annotations

import os

import numpy as np


def _jit_disabled() -> bool:
    return os.environ.get("GAUGETRACE_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}


HAVE_NUMBA = False
if not _jit_disabled():
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAVE_NUMBA = False


def transport_stack_numpy(coeffs: np.ndarray, keep_samples: bool = True):
    """Integrate a batch of transport problems.

    coeffs: (B, 2S+1, m, m) values of A on the half-step grid, descending in t.
    Returns (samples, smin): samples has shape (B, S+1, m, m) ascending in t
    when keep_samples, else (B, 1, m, m) holding only P(0); smin is the
    smallest singular value met during retraction.
    """
    b, k, m, _ = coeffs.shape
    steps = (k - 1) // 2
    h = 1.0 / steps
    p = np.broadcast_to(np.eye(m), (b, m, m)).copy()
    out = np.empty((b, steps + 1 if keep_samples else 1, m, m))
    if keep_samples:
        out[:, steps] = p
    smin = np.inf
    for i in range(steps):
        a0 = coeffs[:, 2 * i]
        a1 = coeffs[:, 2 * i + 1]
        a2 = coeffs[:, 2 * i + 2]
        k1 = a0 @ p
        k2 = a1 @ (p - 0.5 * h * k1)
        k3 = a1 @ (p - 0.5 * h * k2)
        k4 = a2 @ (p - h * k3)
        p = p - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        u, s, vt = np.linalg.svd(p)
        smin = min(smin, float(s.min()))
        p = u @ vt
        if keep_samples:
            out[:, steps - 1 - i] = p
    if not keep_samples:
        out[:, 0] = p
    return out, float(smin)


if HAVE_NUMBA:

    @njit(cache=True)
    def _transport_stack_jit(coeffs, keep_samples):
        b = coeffs.shape[0]
        k = coeffs.shape[1]
        m = coeffs.shape[2]
        steps = (k - 1) // 2
        h = 1.0 / steps
        n_keep = steps + 1 if keep_samples else 1
        out = np.empty((b, n_keep, m, m))
        smin = np.inf
        for ib in range(b):
            p = np.eye(m)
            if keep_samples:
                out[ib, steps] = p
            for i in range(steps):
                a0 = coeffs[ib, 2 * i]
                a1 = coeffs[ib, 2 * i + 1]
                a2 = coeffs[ib, 2 * i + 2]
                k1 = a0 @ p
                k2 = a1 @ (p - 0.5 * h * k1)
                k3 = a1 @ (p - 0.5 * h * k2)
                k4 = a2 @ (p - h * k3)
                p = p - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                u, s, vt = np.linalg.svd(p)
                if s[m - 1] < smin:
                    smin = s[m - 1]
                p = u @ vt
                if keep_samples:
                    out[ib, steps - 1 - i] = p
            if not keep_samples:
                out[ib, 0] = p
        return out, smin

    def transport_stack_numba(coeffs: np.ndarray, keep_samples: bool = True):
        out, smin = _transport_stack_jit(np.ascontiguousarray(coeffs), keep_samples)
        return out, float(smin)

else:
    transport_stack_numba = None


def transport_stack(coeffs: np.ndarray, keep_samples: bool = True):
    """Dispatch to the jitted kernel when available, else the numpy path."""
    if HAVE_NUMBA:
        return transport_stack_numba(coeffs, keep_samples)
    return transport_stack_numpy(coeffs, keep_samples)
