"""Linearized Bregman iterations on the smooth dual.

Three variants share one gradient loop: a plain fixed step, the same
fixed step with kicking (consecutive dead-zone iterations consolidated
into a single jump), and Barzilai-Borwein steps safeguarded by a
nonmonotone line search. All of them move the dual variable y and
recover the primal iterate through x = alpha * shrink(A* y, 1).

Traces record one row per solver update. The `k` field carries the
underlying iteration index, so a kick that stands in for s plain steps
advances k by s while adding a single record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .linalg import as_vector, shrink, sv_shrink
from .models import (
    DenseVectorOp,
    Model,
    adjoint_op,
    apply_op,
    dual_objective,
    operator_norm,
)

CONVERGED = "converged"
MAX_ITER = "max_iter"

TRACE_COLUMNS = ["k", "f", "grad_norm", "step", "kicked", "primal_residual"]


class SolverError(RuntimeError):
    """Base class for solver failures."""


class DivergenceError(SolverError):
    """Iterates left the finite range."""


class LineSearchError(SolverError):
    """The backtracking budget ran out without an acceptable step."""


@dataclass(frozen=True)
class BBOptions:
    """Barzilai-Borwein safeguards.

    h_min, h_max clamp the raw BB ratio; a nonpositive curvature
    denominator falls back to h_max. eta weights the running objective
    average of the nonmonotone rule, c_armijo is the sufficient
    decrease coefficient, and each rejected trial multiplies the step
    by `backtrack`, at most `max_backtracks` times.
    """

    h_min: float = 1e-10
    h_max: float = 1e10
    eta: float = 0.85
    c_armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60


@dataclass(frozen=True, eq=False)
class SolverOptions:
    """Shared solver configuration.

    variant selects the update rule ("fixed", "kicking", "bb"). h is
    the fixed step size; when omitted it defaults to 1/(alpha*||A||^2),
    or to safe_step(nu, ...) when a strong-convexity constant nu is
    supplied. y0 overrides the zero start. record_iterates=False keeps
    traces lean (scalars only, no y/x arrays).
    """

    variant: str = "fixed"
    h: float | None = None
    tol: float = 1e-6
    max_iter: int = 20000
    bb: BBOptions = field(default_factory=BBOptions)
    nu: float | None = None
    y0: object = None
    record_iterates: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.h is not None and not self.h > 0:
            raise ValueError("step size h must be positive")


@dataclass
class TraceRecord:
    """One solver update: iterate index, objective, gradient norm, the
    step length applied, whether it was a kick, and ||A x - b||."""

    k: int
    y: object
    x: object
    f: float
    grad_norm: float
    step: float
    kicked: bool
    primal_residual: float


@dataclass
class Trace:
    """Solver run: per-update records plus the final iterate pair."""

    records: list
    status: str
    final_y: np.ndarray
    final_x: np.ndarray

    @property
    def iterations(self):
        """Number of solver updates performed (kicks count once)."""
        return len(self.records) - 1


def safe_step(nu, alpha, norm_a):
    """Step size nu / (alpha^2 ||A||^4), guaranteed inside the
    admissible range (0, 2 nu / (alpha^2 ||A||^4)) for a dual with
    restricted strong convexity constant nu.

    Parameters
    ----------
    nu : float
        Restricted strong convexity constant of the dual.
    alpha : float
        Augmentation weight of the model.
    norm_a : float
        Spectral norm of the sensing operator.

    Returns
    -------
    float
    """
    if not (nu > 0 and alpha > 0 and norm_a > 0):
        raise ValueError("nu, alpha and the operator norm must be positive")
    return nu / (alpha ** 2 * norm_a ** 4)


def _validate(model):
    if not np.any(model.b):
        raise ValueError("b must be nonzero (zero measurements make the "
                         "zero signal optimal)")
    if isinstance(model.op, DenseVectorOp):
        nonzero = model.op.A.any()
    else:
        nonzero = model.op._stack.any() if hasattr(model.op, "_stack") else True
    if not nonzero:
        raise ValueError("sensing operator must be nonzero")
    if model.sigma > 0 and model.sigma >= np.linalg.norm(model.b):
        raise ValueError("noise radius sigma >= ||b||: the zero signal is "
                         "optimal and the dual has no smooth minimizer")


def _auto_step(model, opts, nrm):
    if opts.nu is not None:
        return safe_step(opts.nu, model.alpha, nrm)
    return 1.0 / (model.alpha * nrm * nrm)


def _start_point(model, opts, h0):
    if opts.y0 is not None:
        y0 = as_vector(np.array(opts.y0, dtype=np.float64), "y0").copy()
        if y0.shape[0] != model.m:
            raise ValueError(f"y0 has length {y0.shape[0]}, expected {model.m}")
        if model.sigma > 0 and not y0.any():
            raise ValueError("y0 = 0 is a nondifferentiable point when "
                             "sigma > 0")
        return y0
    if model.sigma > 0:
        # one gradient step from the origin, taken analytically: the
        # noise term is undefined at y = 0, so start just off it
        return h0 * model.b
    return np.zeros(model.m)


def _evaluate(model, y):
    """Primal iterate, objective, gradient, and ||A x - b|| at y."""
    if isinstance(model.op, DenseVectorOp):
        x, f, g = _kernels.dense_point(model.op.A, model.op.At, model.b, y,
                                       model.alpha)
        f = float(f)
    else:
        x = model.alpha * sv_shrink(adjoint_op(model.op, y), 1.0)
        g = apply_op(model.op, x) - model.b
        f = float(-model.b @ y) + float((x * x).sum()) / (2.0 * model.alpha)
    resid = float(np.linalg.norm(g))
    if model.sigma > 0:
        norm_y = float(np.linalg.norm(y))
        if norm_y == 0.0:
            raise ValueError("dual nondifferentiable at origin")
        f += model.sigma * norm_y
        g = g + (model.sigma / norm_y) * y
    return x, f, g, resid


def _record(opts, k, y, x, f, gn, step, kicked, resid):
    if opts.record_iterates:
        return TraceRecord(k, y.copy(), x.copy(), f, gn, step, kicked, resid)
    return TraceRecord(k, None, None, f, gn, step, kicked, resid)


def _kick_length(model, y, g, h):
    # dead coordinates move linearly while x is frozen; jump to the
    # first dead-zone exit (matrix models rotate, so no consolidation)
    if model.is_matrix:
        return 1
    v = adjoint_op(model.op, y)
    d = -adjoint_op(model.op, g)
    s = int(_kernels.kick_jump(v, d, h))
    return max(s, 1)


def _descend(model, opts, kicking):
    _validate(model)
    nrm = operator_norm(model.op)
    h = opts.h if opts.h is not None else _auto_step(model, opts, nrm)
    y = _start_point(model, opts, h)
    x, f, g, resid = _evaluate(model, y)
    gn = float(np.linalg.norm(g))
    records = [_record(opts, 0, y, x, f, gn, 0.0, False, resid)]
    k = 0
    while True:
        if gn < opts.tol:
            status = CONVERGED
            break
        if k >= opts.max_iter:
            status = MAX_ITER
            break
        step_len = h
        advance = 1
        kicked = False
        y_next = y - h * g
        x_next, f_next, g_next, resid_next = _evaluate(model, y_next)
        if kicking and model.sigma == 0.0 and np.array_equal(x_next, x):
            kicked = True
            s = _kick_length(model, y, g, h)
            if s > 1:
                step_len = s * h
                advance = s
                y_next = y - step_len * g
                x_next, f_next, g_next, resid_next = _evaluate(model, y_next)
        gn_next = float(np.linalg.norm(g_next))
        if not (np.isfinite(f_next) and np.isfinite(gn_next)):
            raise DivergenceError(f"iterates diverged at iteration {k}; "
                                  f"step size h={h:g} may exceed the stable "
                                  f"range")
        k += advance
        y, x, f, g, gn, resid = y_next, x_next, f_next, g_next, gn_next, \
            resid_next
        records.append(_record(opts, k, y, x, f, gn, step_len, kicked, resid))
    return Trace(records=records, status=status, final_y=y.copy(),
                 final_x=x.copy())


def lbreg_fixed(model, opts=None):
    """Fixed-step gradient descent on the smooth dual.

    Parameters
    ----------
    model : Model
        Problem instance.
    opts : SolverOptions, optional
        Step size, tolerance, iteration budget, start point.

    Returns
    -------
    Trace
        Status is "converged" once ||grad f|| < tol, else "max_iter".
    """
    return _descend(model, opts or SolverOptions(), kicking=False)


def lbreg_kicking(model, opts=None):
    """Fixed-step descent with kicking.

    When an update leaves the primal iterate bitwise unchanged, the
    gradient is constant until some dead coordinate of A* y exits
    [-1, 1]; that whole stretch is applied as one jump. Iterates agree
    with `lbreg_fixed` at matching iteration indices.

    Parameters
    ----------
    model : Model
        Problem instance.
    opts : SolverOptions, optional

    Returns
    -------
    Trace
    """
    return _descend(model, opts or SolverOptions(), kicking=True)


def lbreg_bb(model, opts=None):
    """Barzilai-Borwein descent with a nonmonotone line search.

    The first update uses h = 1/(alpha ||A||^2). Later steps use the
    BB ratio <s, s>/<s, g_diff> clamped to [h_min, h_max] (h_max when
    the denominator is nonpositive), then backtrack until the averaged
    Armijo condition f(y - t g) <= C_k - c_armijo t ||g||^2 holds,
    where C_k is the Zhang-Hager running average of past objectives.

    Parameters
    ----------
    model : Model
        Problem instance.
    opts : SolverOptions, optional
        BB safeguards live in opts.bb.

    Returns
    -------
    Trace

    Raises
    ------
    LineSearchError
        If max_backtracks halvings never satisfy the Armijo rule.
    """
    opts = opts or SolverOptions(variant="bb")
    _validate(model)
    bb = opts.bb
    nrm = operator_norm(model.op)
    h0 = 1.0 / (model.alpha * nrm * nrm)
    y = _start_point(model, opts, h0)
    x, f, g, resid = _evaluate(model, y)
    gn = float(np.linalg.norm(g))
    records = [_record(opts, 0, y, x, f, gn, 0.0, False, resid)]
    C, Q = f, 1.0
    y_prev = None
    g_prev = None
    k = 0
    while True:
        if gn < opts.tol:
            status = CONVERGED
            break
        if k >= opts.max_iter:
            status = MAX_ITER
            break
        if y_prev is None:
            h = h0
        else:
            s = y - y_prev
            gd = g - g_prev
            sg = float(s @ gd)
            if sg <= 0:
                h = bb.h_max
            else:
                h = min(max(float(s @ s) / sg, bb.h_min), bb.h_max)
        t = h
        gg = gn * gn
        backtracks = 0
        while True:
            y_trial = y - t * g
            f_trial = dual_objective(model, y_trial)
            if np.isfinite(f_trial) and f_trial <= C - bb.c_armijo * t * gg:
                break
            backtracks += 1
            if backtracks > bb.max_backtracks:
                raise LineSearchError(
                    f"no acceptable step after {bb.max_backtracks} "
                    f"backtracks at iteration {k}")
            t *= bb.backtrack
        y_prev, g_prev = y, g
        y = y_trial
        x, f, g, resid = _evaluate(model, y)
        gn = float(np.linalg.norm(g))
        if not (np.isfinite(f) and np.isfinite(gn)):
            raise DivergenceError(f"iterates diverged at iteration {k}")
        k += 1
        Q_next = bb.eta * Q + 1.0
        C = (bb.eta * Q * C + f) / Q_next
        Q = Q_next
        records.append(_record(opts, k, y, x, f, gn, t, False, resid))
    return Trace(records=records, status=status, final_y=y.copy(),
                 final_x=x.copy())


_VARIANTS = {"fixed": lbreg_fixed, "kicking": lbreg_kicking, "bb": lbreg_bb}


def run_solver(model, opts):
    """Dispatch on opts.variant ("fixed", "kicking", or "bb")."""
    fn = _VARIANTS.get(opts.variant)
    if fn is None:
        raise ValueError(f"unknown solver variant {opts.variant!r}; expected "
                         f"one of {sorted(_VARIANTS)}")
    return fn(model, opts)


def v_form_check(model, trace, tol=1e-10):
    """Replay a fixed-step trace in the primal-variable form.

    The recursion x = alpha*shrink(v, 1), v <- v + h A*(b - A x),
    started from v = A* y^(0), must reproduce v = A* y^(k) at every
    recorded iterate. Kicked records are replayed as their underlying
    plain steps.

    Parameters
    ----------
    model : Model
        Must have sigma = 0; the equivalence only holds for the
        equality-constrained dual.
    trace : Trace
        Produced with record_iterates=True.
    tol : float, optional
        Componentwise tolerance on v - A* y.

    Returns
    -------
    bool
    """
    if model.sigma > 0:
        raise ValueError("the v-form equivalence needs sigma = 0")
    recs = trace.records
    if not recs or recs[0].y is None:
        raise ValueError("trace must carry iterates (record_iterates=True)")
    v = adjoint_op(model.op, recs[0].y)
    prev_k = recs[0].k
    for rec in recs[1:]:
        steps = rec.k - prev_k
        h_unit = rec.step / steps
        for _ in range(steps):
            if model.is_matrix:
                x = model.alpha * sv_shrink(v, 1.0)
            else:
                x = model.alpha * shrink(v, 1.0)
            v = v + h_unit * adjoint_op(model.op,
                                        model.b - apply_op(model.op, x))
        if np.max(np.abs(v - adjoint_op(model.op, rec.y))) > tol:
            return False
        prev_k = rec.k
    return True


def write_trace_csv(path, trace, dump_iterates=False):
    """Write a trace as CSV with columns k, f, grad_norm, step, kicked,
    primal_residual (one row per record, header included).

    dump_iterates=True additionally writes <stem>.y.csv and
    <stem>.x.csv with one flattened iterate per row; the trace must
    then carry iterates.
    """
    lines = [",".join(TRACE_COLUMNS)]
    for r in trace.records:
        lines.append(f"{r.k},{r.f:.17g},{r.grad_norm:.17g},{r.step:.17g},"
                     f"{int(r.kicked)},{r.primal_residual:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if dump_iterates:
        if trace.records[0].y is None:
            raise ValueError("trace carries no iterates to dump")
        base = str(path)
        if base.endswith(".csv"):
            base = base[:-4]
        ys = np.vstack([r.y for r in trace.records])
        xs = np.vstack([r.x.reshape(-1) for r in trace.records])
        np.savetxt(base + ".y.csv", ys, delimiter=",", fmt="%.17g")
        np.savetxt(base + ".x.csv", xs, delimiter=",", fmt="%.17g")


def read_trace_csv(path):
    """Read a trace CSV; returns (header, rows) with float rows."""
    with open(path) as fh:
        raw = [line.strip() for line in fh if line.strip()]
    header = raw[0].split(",")
    rows = [[float(tok) for tok in line.split(",")] for line in raw[1:]]
    return header, rows
