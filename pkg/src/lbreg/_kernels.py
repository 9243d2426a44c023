"""Hot numerical kernels with an optional numba path.

Each kernel is written once in numpy-compatible form and compiled with
numba when available. Setting the environment variable
``LBREG_DISABLE_NUMBA=1`` (or uninstalling numba) selects the plain
numpy path; ``kernel_backend()`` reports which one is active. Both
paths compute the same quantities, so callers never need to care.
"""

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag instead
    numba = None
    HAS_NUMBA = False

_DISABLED = os.environ.get("LBREG_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")
USE_NUMBA = HAS_NUMBA and not _DISABLED


def kernel_backend():
    """Name of the active kernel path: 'numba' or 'numpy'."""
    return "numba" if USE_NUMBA else "numpy"


def _jit(func):
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def _shrink(v, mu):
    return np.sign(v) * np.maximum(np.abs(v) - mu, 0.0)


def _dual_objective_dense(At, b, y, alpha):
    # f(y) = -b'y + (alpha/2)||shrink(A'y, 1)||^2 for the equality dual
    s = At @ y
    t = np.maximum(np.abs(s) - 1.0, 0.0)
    return -np.dot(b, y) + 0.5 * alpha * np.dot(t, t)


def _dense_point(A, At, b, y, alpha):
    # one shrink pass shared by the primal iterate, objective and gradient
    s = At @ y
    x = alpha * (np.sign(s) * np.maximum(np.abs(s) - 1.0, 0.0))
    g = A @ x - b
    f = -np.dot(b, y) + np.dot(x, x) / (2.0 * alpha)
    return x, f, g


def _kick_jump(v, d, h):
    # Smallest step count s >= 1 at which some dead coordinate of v
    # (|v_i| <= 1, moving since d_i != 0) first reaches |v_i + s*h*d_i| = 1.
    # Returns 0 when no dead coordinate moves.
    best = 0
    for i in range(v.shape[0]):
        vi = v[i]
        di = d[i]
        if -1.0 <= vi <= 1.0 and di != 0.0:
            if di > 0.0:
                need = (1.0 - vi) / (h * di)
            else:
                need = (-1.0 - vi) / (h * di)
            s = int(np.ceil(need))
            if s < 1:
                s = 1
            if best == 0 or s < best:
                best = s
    return best


def _box_muller(w1, w2):
    # w1, w2: uint64 counter-RNG words. The top 53 bits of w1 give
    # u1 in (0, 1] (log-safe); those of w2 give u2 in [0, 1).
    u1 = ((w1 >> np.uint64(11)).astype(np.float64) + 1.0) * (2.0 ** -53)
    u2 = (w2 >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    r = np.sqrt(-2.0 * np.log(u1))
    t = 2.0 * np.pi * u2
    return r * np.cos(t), r * np.sin(t)


shrink_vec = _jit(_shrink)
dual_objective_dense = _jit(_dual_objective_dense)
dense_point = _jit(_dense_point)
kick_jump = _jit(_kick_jump)
box_muller = _jit(_box_muller)

# plain-numpy references, kept importable for benchmarks and tests
shrink_vec_np = _shrink
dual_objective_dense_np = _dual_objective_dense
dense_point_np = _dense_point
kick_jump_np = _kick_jump
box_muller_np = _box_muller


def warmup():
    """Trigger JIT compilation so timings exclude compile cost."""
    A = np.eye(2)
    b = np.ones(2)
    y = np.full(2, 0.5)
    shrink_vec(b, 1.0)
    dual_objective_dense(A, b, y, 2.0)
    dense_point(A, A, b, y, 2.0)
    kick_jump(y, b, 0.1)
    w = np.arange(2, dtype=np.uint64)
    box_muller(w, w)
