"""Dense eigenvalues of small real matrices via Hessenberg + shifted QR.

Everything here targets the tiny (2N x 2N, N <= ~8) linearization matrices:
a Householder reduction to upper Hessenberg form followed by Francis
double-shift QR sweeps down to real Schur (quasi-triangular) form, reading
eigenvalues off the 1x1 and 2x2 diagonal blocks.

The iteration runs in the dtype of the input matrix.  That matters for the
undamped linearization, whose exact spectrum contains a defective double
zero: any backward-stable solve splits that pair by ~sqrt(u * coupling), or
~1.5e-8 in float64, which straddles the 1e-8 zero-eigenvalue threshold used
downstream.  Feeding a longdouble matrix (see spectral.py) moves the floor
to ~1e-9 and makes the classification robust.  Deflation combines the
neighbor-relative test with a norm-relative floor 8u*||H||_F; zeroing such
subdiagonals is a backward-stable perturbation.
"""

from __future__ import annotations

import numpy as np

from .errors import EigenSolveFailure

MAX_SWEEPS = 500


def _vnorm(v):
    return np.sqrt(np.sum(v * v))


def _hessenberg(h):
    """Householder reduction to upper Hessenberg form, in place."""
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        alpha = _vnorm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vn = _vnorm(v)
        if vn == 0.0:
            continue
        v /= vn
        # P = I - 2 v v^T applied from both sides
        h[k + 1:, k:] -= 2.0 * np.outer(v, v @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def _eigs_2x2(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]]; complex pairs stay exactly conjugate."""
    tr2 = 0.5 * (a + d)
    det = a * d - b * c
    disc = tr2 * tr2 - det
    if disc >= 0.0:
        s = np.sqrt(disc)
        l1 = tr2 + s if tr2 >= 0 else tr2 - s
        l2 = det / l1 if l1 != 0.0 else tr2
        return complex(l1), complex(l2)
    s = np.sqrt(-disc)
    return complex(tr2, s), complex(tr2, -s)


def _apply_householder(h, v, k, lo, hi):
    """Similarity update with the length-2 or -3 reflector v at column k."""
    m = v.shape[0]
    r0 = max(lo, k - 1)
    rows = slice(k, k + m)
    h[rows, r0:] -= 2.0 * np.outer(v, v @ h[rows, r0:])
    c1 = min(k + m + 1, hi + 1)
    h[:c1, rows] -= 2.0 * np.outer(h[:c1, rows] @ v, v)


def _reflector(x):
    """Unit Householder vector annihilating all but the first entry of x."""
    alpha = _vnorm(x)
    if alpha == 0.0:
        return None
    if x[0] > 0:
        alpha = -alpha
    v = x.copy()
    v[0] -= alpha
    vn = _vnorm(v)
    if vn == 0.0:
        return None
    return v / vn


def _francis_sweep(h, lo, hi, exceptional):
    """One implicit double-shift QR sweep on the active block h[lo:hi+1]."""
    n = hi - lo + 1
    if exceptional:
        s = abs(h[hi, hi - 1]) + (abs(h[hi - 1, hi - 2]) if n > 2 else 0.0)
        trace = 1.5 * s
        det = s * s
    else:
        a, b = h[hi - 1, hi - 1], h[hi - 1, hi]
        c, d = h[hi, hi - 1], h[hi, hi]
        trace = a + d
        det = a * d - b * c
    x = h[lo, lo] * h[lo, lo] + h[lo, lo + 1] * h[lo + 1, lo] - trace * h[lo, lo] + det
    y = h[lo + 1, lo] * (h[lo, lo] + h[lo + 1, lo + 1] - trace)
    z = h[lo + 2, lo + 1] * h[lo + 1, lo] if n > 2 else x * 0.0

    for k in range(lo, hi - 1):
        v = _reflector(np.array([x, y, z], dtype=h.dtype))
        if v is not None:
            _apply_householder(h, v, k, lo, hi)
        x = h[k + 1, k]
        y = h[k + 2, k] if k + 2 <= hi else x * 0.0
        z = h[k + 3, k] if k + 3 <= hi else x * 0.0
    v = _reflector(np.array([x, y], dtype=h.dtype))
    if v is not None:
        _apply_householder(h, v, hi - 1, lo, hi)


def eigenvalues(matrix) -> np.ndarray:
    """All eigenvalues (with multiplicity) of a real square matrix.

    Returns complex128 regardless of input dtype.  Raises EigenSolveFailure
    if a block fails to deflate within MAX_SWEEPS QR sweeps.
    """
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    dtype = a.dtype if a.dtype in (np.float32, np.float64, np.longdouble) else np.float64
    h = np.array(a, dtype=dtype, copy=True)
    u = np.finfo(dtype).eps
    n = h.shape[0]
    if n == 1:
        return np.array([complex(h[0, 0])])

    _hessenberg(h)
    norm = float(np.sqrt(np.sum(h * h)))
    if norm == 0.0:
        return np.zeros(n, dtype=complex)
    floor = 8.0 * u * norm

    out: list[complex] = []
    hi = n - 1
    sweeps_on_block = 0
    total_guard = 0
    while hi >= 0:
        total_guard += 1
        if total_guard > MAX_SWEEPS * n:
            raise EigenSolveFailure("QR iteration exceeded global sweep budget")
        for i in range(hi):
            bound = u * (abs(h[i, i]) + abs(h[i + 1, i + 1]))
            if abs(h[i + 1, i]) <= max(bound, floor):
                h[i + 1, i] = 0.0
        lo = hi
        while lo > 0 and h[lo, lo - 1] != 0.0:
            lo -= 1
        if lo == hi:
            out.append(complex(h[hi, hi]))
            hi -= 1
            sweeps_on_block = 0
            continue
        if lo == hi - 1:
            l1, l2 = _eigs_2x2(h[lo, lo], h[lo, hi], h[hi, lo], h[hi, hi])
            out.extend([l2, l1])
            hi -= 2
            sweeps_on_block = 0
            continue
        sweeps_on_block += 1
        if sweeps_on_block > MAX_SWEEPS:
            raise EigenSolveFailure(
                f"block [{lo},{hi}] did not deflate in {MAX_SWEEPS} sweeps"
            )
        _francis_sweep(h, lo, hi, exceptional=(sweeps_on_block % 12 == 0))

    return np.array(out[::-1], dtype=complex)
