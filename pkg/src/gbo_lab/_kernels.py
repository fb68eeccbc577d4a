"""Hot double/triple sums, compiled with numba when available.

Set ``GBO_LAB_NO_NUMBA=1`` to force the pure-numpy path.  Both paths
compute the same sums; ``benchmarks/bench_kernels.py`` times them.
"""

import os

import numpy as np

_DISABLE = os.environ.get("GBO_LAB_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLE:
        raise ImportError
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    nb = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# offset bilinear form:  sum_i sum_j a[i] b[j] table[j - i + center]
# ---------------------------------------------------------------------------

def _offset_bilinear_np(a, b, table, center):
    n = a.shape[0]
    idx = np.arange(n)
    total = 0.0
    for i in range(n):
        total += a[i] * np.dot(b, table[idx - i + center])
    return total


# ---------------------------------------------------------------------------
# shifted commutator pairings
#
#   S[m] = sum_y sum_z  A_m(y) c(z) K_m(y, z)
#   K_m(y, z) = (q[z + sh_m] - q[y + sh_m]) / ((y - z) h)     for y != z
#   K_m(y, y) = -dq[y + sh_m]
#   A_m(y)    = a(y) * w[y + sh_m]
#
# q, dq, w are tables indexed by integer offsets; sh_m = shifts[m].
# ---------------------------------------------------------------------------

def _commutator_np(a, c, q, dq, w, shifts, h):
    n = a.shape[0]
    idx = np.arange(n)
    diff = (idx[:, None] - idx[None, :]).astype(np.float64) * h
    np.fill_diagonal(diff, 1.0)
    out = np.empty(shifts.shape[0])
    for m in range(shifts.shape[0]):
        qs = q[idx + shifts[m]]
        kern = (qs[None, :] - qs[:, None]) / diff
        kern[idx, idx] = -dq[idx + shifts[m]]
        am = a * w[idx + shifts[m]]
        out[m] = am @ kern @ c
    return out


if HAVE_NUMBA:

    @nb.njit(cache=True, fastmath=False)
    def _offset_bilinear_nb(a, b, table, center):
        n = a.shape[0]
        total = 0.0
        for i in range(n):
            ai = a[i]
            if ai == 0.0:
                continue
            acc = 0.0
            base = center - i
            for j in range(n):
                acc += b[j] * table[j + base]
            total += ai * acc
        return total

    @nb.njit(cache=True, fastmath=False)
    def _commutator_nb(a, c, q, dq, w, shifts, h):
        n = a.shape[0]
        nm = shifts.shape[0]
        out = np.empty(nm)
        for m in range(nm):
            sh = shifts[m]
            acc = 0.0
            for y in range(n):
                ay = a[y] * w[y + sh]
                if ay == 0.0:
                    continue
                qy = q[y + sh]
                row = -dq[y + sh] * c[y]
                for z in range(n):
                    if z != y:
                        row += c[z] * (q[z + sh] - qy) / ((y - z) * h)
                acc += ay * row
            out[m] = acc
        return out

else:  # pragma: no cover
    _offset_bilinear_nb = None
    _commutator_nb = None


def offset_bilinear(a, b, table, center, backend=None):
    """Direct O(n^2) sum of ``a[i] * b[j] * table[j - i + center]``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    table = np.ascontiguousarray(table, dtype=np.float64)
    if _use_numba(backend):
        return float(_offset_bilinear_nb(a, b, table, int(center)))
    return float(_offset_bilinear_np(a, b, table, int(center)))


def commutator_sums(a, c, q, dq, shifts, h, w=None, backend=None):
    """Divided-difference commutator pairings for a batch of kernel shifts.

    Returns ``S[m]`` as described in the module comment, without the
    quadrature weights or the ``1/pi`` factor.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    dq = np.ascontiguousarray(dq, dtype=np.float64)
    shifts = np.ascontiguousarray(shifts, dtype=np.int64)
    if w is None:
        w = np.ones_like(q)
    w = np.ascontiguousarray(w, dtype=np.float64)
    n = a.shape[0]
    if shifts.size and (shifts.min() < 0 or shifts.max() + n > q.shape[0]):
        raise IndexError("kernel table too short for requested shifts")
    if _use_numba(backend):
        return _commutator_nb(a, c, q, dq, w, shifts, float(h))
    return _commutator_np(a, c, q, dq, w, shifts, float(h))


def _use_numba(backend):
    if backend is None:
        return HAVE_NUMBA
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but unavailable")
        return True
    if backend == "numpy":
        return False
    raise ValueError(f"unknown backend {backend!r}")
