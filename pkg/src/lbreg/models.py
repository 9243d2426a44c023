"""Problem definitions for the augmented l1 and nuclear-norm models.

A `Model` bundles a sensing operator, measurements b, the smoothing
weight alpha, and a noise radius sigma. sigma = 0 selects the
equality-constrained dual; sigma > 0 adds the sigma*||y||_2 term. The
same dual objective/gradient code covers vectors and matrices: the
operator variant decides whether the shrink acts componentwise or on
singular values.

Primal points are plain arrays: 1-D for vector models, 2-D for matrix
models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .linalg import as_matrix, as_vector, shrink, spectral_norm, sv_shrink, svd


@dataclass(frozen=True, eq=False)
class DenseVectorOp:
    """x |-> A x for a dense m-by-n sensing matrix."""

    A: np.ndarray
    At: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = as_matrix(self.A, "sensing matrix")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "At", np.ascontiguousarray(A.T))

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def primal_shape(self):
        return (self.A.shape[1],)


@dataclass(frozen=True, eq=False)
class EntrySampler:
    """X |-> observed entries X_ij for (i, j) in omega, in omega order."""

    n1: int
    n2: int
    omega: tuple

    def __post_init__(self):
        pairs = tuple((int(i), int(j)) for i, j in self.omega)
        if len(set(pairs)) != len(pairs):
            raise ValueError("entry sampler indices must be distinct")
        for i, j in pairs:
            if not (0 <= i < self.n1 and 0 <= j < self.n2):
                raise ValueError(f"index ({i}, {j}) out of range for "
                                 f"{self.n1}x{self.n2}")
        object.__setattr__(self, "omega", pairs)
        object.__setattr__(self, "_rows", np.array([p[0] for p in pairs]))
        object.__setattr__(self, "_cols", np.array([p[1] for p in pairs]))

    @property
    def m(self):
        return len(self.omega)

    @property
    def primal_shape(self):
        return (self.n1, self.n2)


@dataclass(frozen=True, eq=False)
class TraceList:
    """X |-> [trace(A_i' X)]_i for a list of measurement matrices."""

    mats: tuple

    def __post_init__(self):
        mats = tuple(as_matrix(M, "measurement matrix") for M in self.mats)
        if not mats:
            raise ValueError("trace list needs at least one matrix")
        shape = mats[0].shape
        if any(M.shape != shape for M in mats):
            raise ValueError("all measurement matrices must share one shape")
        object.__setattr__(self, "mats", mats)
        object.__setattr__(self, "_stack", np.stack(mats))

    @property
    def m(self):
        return len(self.mats)

    @property
    def primal_shape(self):
        return self.mats[0].shape


def is_matrix_op(op):
    """True when the operator acts on matrices rather than vectors."""
    return isinstance(op, (EntrySampler, TraceList))


def _check_primal(op, p):
    p = np.asarray(p, dtype=np.float64)
    if p.shape != op.primal_shape:
        raise ValueError(
            f"primal point of shape {p.shape} does not match operator "
            f"shape {op.primal_shape}"
        )
    return p


def apply_op(op, p):
    """Forward map: A x, sampled entries, or [trace(A_i' X)]_i."""
    p = _check_primal(op, p)
    if isinstance(op, DenseVectorOp):
        return op.A @ p
    if isinstance(op, EntrySampler):
        return p[op._rows, op._cols].copy()
    if isinstance(op, TraceList):
        return np.einsum("kij,ij->k", op._stack, p)
    raise TypeError(f"unknown operator type {type(op).__name__}")


def adjoint_op(op, y):
    """Adjoint map: A'y, scatter into a matrix, or sum_i y_i A_i."""
    y = as_vector(y, "dual point")
    if y.shape[0] != op.m:
        raise ValueError(f"dual point of length {y.shape[0]} does not match "
                         f"operator output dimension {op.m}")
    if isinstance(op, DenseVectorOp):
        return op.At @ y
    if isinstance(op, EntrySampler):
        out = np.zeros((op.n1, op.n2))
        out[op._rows, op._cols] = y
        return out
    if isinstance(op, TraceList):
        return np.tensordot(y, op._stack, axes=1)
    raise TypeError(f"unknown operator type {type(op).__name__}")


def operator_norm(op):
    """Spectral norm of the sensing operator as a map to R^m.

    Dense operators use the matrix 2-norm. An entry sampler selects
    distinct entries, so its norm is exactly 1. A trace list is the
    matrix whose rows are the vectorised measurement matrices.
    """
    if isinstance(op, DenseVectorOp):
        return spectral_norm(op.A)
    if isinstance(op, EntrySampler):
        return 1.0
    if isinstance(op, TraceList):
        return spectral_norm(op._stack.reshape(op.m, -1))
    raise TypeError(f"unknown operator type {type(op).__name__}")


@dataclass(frozen=True, eq=False)
class Model:
    """Operator + measurements + smoothing alpha + noise radius sigma."""

    op: object
    b: np.ndarray
    alpha: float
    sigma: float = 0.0

    def __post_init__(self):
        b = as_vector(self.b, "measurements b")
        if b.shape[0] != self.op.m:
            raise ValueError(f"b has length {b.shape[0]}, operator produces "
                             f"{self.op.m} measurements")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def m(self):
        return self.op.m

    @property
    def is_matrix(self):
        return is_matrix_op(self.op)


def _check_dual(model, y):
    y = as_vector(y, "dual point")
    if y.shape[0] != model.m:
        raise ValueError(f"dual point of length {y.shape[0]} does not match "
                         f"m = {model.m}")
    return y


def dual_objective(model, y):
    """Value of the smooth dual at y.

    -b'y + sigma*||y||_2 + (alpha/2)*||shrink(A* y, 1)||^2, where the
    shrink acts componentwise for vector models and on singular values
    for matrix models (and the norm is then the Frobenius norm).
    """
    y = _check_dual(model, y)
    if isinstance(model.op, DenseVectorOp):
        val = float(_kernels.dual_objective_dense(model.op.At, model.b, y,
                                                  model.alpha))
    else:
        sig = svd(adjoint_op(model.op, y)).sigma
        t = shrink(sig, 1.0)
        val = float(-model.b @ y + 0.5 * model.alpha * (t @ t))
    if model.sigma > 0:
        val += model.sigma * float(np.linalg.norm(y))
    return val


def dual_gradient(model, y):
    """Gradient of the smooth dual: -b + alpha*A(shrink(A* y, 1)),
    plus sigma*y/||y|| when sigma > 0 (undefined at y = 0)."""
    y = _check_dual(model, y)
    if isinstance(model.op, DenseVectorOp):
        _, _, g = _kernels.dense_point(model.op.A, model.op.At, model.b, y,
                                       model.alpha)
    else:
        x_hat = model.alpha * sv_shrink(adjoint_op(model.op, y), 1.0)
        g = apply_op(model.op, x_hat) - model.b
    if model.sigma > 0:
        norm_y = float(np.linalg.norm(y))
        if norm_y == 0.0:
            raise ValueError("dual nondifferentiable at origin")
        g = g + model.sigma * y / norm_y
    return g


def primal_from_dual(model, y):
    """Primal recovery alpha*shrink(A* y, 1) (singular-value shrink for
    matrix models)."""
    y = _check_dual(model, y)
    s = adjoint_op(model.op, y)
    if model.is_matrix:
        return model.alpha * sv_shrink(s, 1.0)
    return model.alpha * shrink(s, 1.0)


def primal_objective(model, p):
    """||x||_1 + ||x||_2^2/(2 alpha), or the nuclear/Frobenius pair."""
    p = _check_primal(model.op, p)
    if model.is_matrix:
        sig = svd(p).sigma
        return float(sig.sum() + (sig @ sig) / (2.0 * model.alpha))
    return float(np.abs(p).sum() + (p @ p) / (2.0 * model.alpha))


# CSV formats: matrices are header-free rows of comma-separated values,
# vectors a single column. Entry samplers store a "n1,n2" dims row then
# one "i,j" row per observed entry. Trace lists store all matrices
# stacked in one data file plus an index file with a "count,n1,n2" row.

def save_matrix_csv(path, A):
    A = as_matrix(A, "matrix")
    np.savetxt(path, A, delimiter=",", fmt="%.17g")


def load_matrix_csv(path):
    A = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return A


def save_vector_csv(path, v):
    v = as_vector(v, "vector")
    np.savetxt(path, v.reshape(-1, 1), delimiter=",", fmt="%.17g")


def load_vector_csv(path):
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=1).reshape(-1)


def save_dense_op(path, op):
    save_matrix_csv(path, op.A)


def load_dense_op(path):
    return DenseVectorOp(load_matrix_csv(path))


def save_entry_sampler(path, op):
    rows = [f"{op.n1},{op.n2}"] + [f"{i},{j}" for i, j in op.omega]
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def load_entry_sampler(path):
    raw = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    n1, n2 = int(raw[0, 0]), int(raw[0, 1])
    omega = [(int(i), int(j)) for i, j in raw[1:]]
    return EntrySampler(n1, n2, omega)


def save_trace_list(data_path, index_path, op):
    n1, n2 = op.primal_shape
    stacked = op._stack.reshape(op.m * n1, n2)
    save_matrix_csv(data_path, stacked)
    with open(index_path, "w") as fh:
        fh.write(f"{op.m},{n1},{n2}\n")


def load_trace_list(data_path, index_path):
    raw = np.loadtxt(index_path, delimiter=",", dtype=np.int64, ndmin=2)
    count, n1, n2 = (int(x) for x in raw[0])
    stacked = load_matrix_csv(data_path)
    if stacked.shape != (count * n1, n2):
        raise ValueError("trace list data does not match its index")
    return TraceList([stacked[k * n1:(k + 1) * n1] for k in range(count)])
