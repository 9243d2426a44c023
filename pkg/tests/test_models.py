import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lbreg.linalg import shrink, svd
from lbreg.models import (
    DenseVectorOp,
    EntrySampler,
    Model,
    TraceList,
    adjoint_op,
    apply_op,
    dual_gradient,
    dual_objective,
    load_dense_op,
    load_entry_sampler,
    load_matrix_csv,
    load_trace_list,
    load_vector_csv,
    primal_from_dual,
    primal_objective,
    save_dense_op,
    save_entry_sampler,
    save_matrix_csv,
    save_trace_list,
    save_vector_csv,
)


def small_floats(lo=-5.0, hi=5.0):
    return st.floats(lo, hi, allow_nan=False, allow_infinity=False)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestOperators:
    def test_dense_apply(self):
        op = DenseVectorOp(np.eye(2))
        assert np.allclose(apply_op(op, np.array([3.0, 4.0])), [3.0, 4.0])

    def test_sampler_apply(self):
        op = EntrySampler(2, 2, [(0, 0)])
        X = np.array([[5.0, 6.0], [7.0, 8.0]])
        assert np.allclose(apply_op(op, X), [5.0])

    def test_trace_apply(self):
        op = TraceList([np.eye(2)])
        X = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.allclose(apply_op(op, X), [5.0])

    def test_dense_adjoint(self):
        op = DenseVectorOp(np.eye(2))
        assert np.allclose(adjoint_op(op, np.array([3.0, 4.0])), [3.0, 4.0])

    def test_trace_adjoint(self):
        op = TraceList([np.eye(2)])
        assert np.allclose(adjoint_op(op, np.array([2.0])), 2 * np.eye(2))

    def test_sampler_adjoint_scatters(self):
        op = EntrySampler(2, 3, [(0, 1), (1, 2)])
        M = adjoint_op(op, np.array([4.0, 5.0]))
        expected = np.zeros((2, 3))
        expected[0, 1] = 4.0
        expected[1, 2] = 5.0
        assert np.allclose(M, expected)

    def test_sampler_rejects_duplicate_indices(self):
        with pytest.raises(ValueError):
            EntrySampler(2, 2, [(0, 0), (0, 0)])

    def test_sampler_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            EntrySampler(2, 2, [(2, 0)])

    def test_trace_list_rejects_mixed_shapes(self):
        with pytest.raises(ValueError):
            TraceList([np.eye(2), np.zeros((3, 2))])

    def test_apply_shape_mismatch(self):
        with pytest.raises(ValueError):
            apply_op(DenseVectorOp(np.eye(2)), np.zeros(3))
        with pytest.raises(ValueError):
            adjoint_op(DenseVectorOp(np.eye(2)), np.zeros(3))

    @given(arrays(np.float64, (3, 4), elements=small_floats()),
           arrays(np.float64, (4,), elements=small_floats()),
           arrays(np.float64, (3,), elements=small_floats()))
    @settings(max_examples=50)
    def test_dense_adjoint_identity(self, A, x, y):
        op = DenseVectorOp(A)
        lhs = np.dot(apply_op(op, x), y)
        rhs = np.sum(x * adjoint_op(op, y))
        assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(lhs)))

    @given(arrays(np.float64, (2, 3), elements=small_floats()),
           arrays(np.float64, (2,), elements=small_floats()))
    @settings(max_examples=50)
    def test_sampler_adjoint_identity(self, X, y):
        op = EntrySampler(2, 3, [(0, 2), (1, 0)])
        lhs = np.dot(apply_op(op, X), y)
        rhs = np.sum(X * adjoint_op(op, y))
        assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(lhs)))

    @given(arrays(np.float64, (4, 2, 3), elements=small_floats()),
           arrays(np.float64, (2, 3), elements=small_floats()),
           arrays(np.float64, (4,), elements=small_floats()))
    @settings(max_examples=50)
    def test_trace_adjoint_identity(self, mats, X, y):
        op = TraceList(list(mats))
        lhs = np.dot(apply_op(op, X), y)
        rhs = np.sum(X * adjoint_op(op, y))
        assert lhs == pytest.approx(rhs, abs=1e-11 * (1 + abs(lhs)))


def vector_model(seed=0, m=4, n=7, alpha=2.0, sigma=0.0):
    g = rng(seed)
    A = g.standard_normal((m, n))
    b = g.standard_normal(m)
    return Model(DenseVectorOp(A), b, alpha, sigma)


def trace_model(seed=0, m=5, n1=3, n2=3, alpha=2.0, sigma=0.0):
    g = rng(seed)
    mats = [g.standard_normal((n1, n2)) for _ in range(m)]
    b = g.standard_normal(m)
    return Model(TraceList(mats), b, alpha, sigma)


class TestModelValidation:
    def test_alpha_must_be_positive(self):
        with pytest.raises(ValueError):
            Model(DenseVectorOp(np.eye(2)), np.ones(2), 0.0)

    def test_sigma_must_be_nonnegative(self):
        with pytest.raises(ValueError):
            Model(DenseVectorOp(np.eye(2)), np.ones(2), 1.0, -0.5)

    def test_b_length_must_match(self):
        with pytest.raises(ValueError):
            Model(DenseVectorOp(np.eye(2)), np.ones(3), 1.0)


class TestDualObjective:
    def test_zero_point_is_zero(self):
        model = vector_model()
        assert dual_objective(model, np.zeros(4)) == 0.0

    def test_dead_zone_is_linear(self):
        # ||A'y||_inf <= 1 kills the shrink term, leaving -b'y
        A = np.eye(3)
        b = np.array([1.0, -2.0, 0.5])
        model = Model(DenseVectorOp(A), b, 5.0)
        y = np.array([0.9, -0.8, 0.3])
        assert dual_objective(model, y) == pytest.approx(-b @ y)

    @given(st.integers(0, 10000))
    @settings(max_examples=30)
    def test_matches_boxed_minimum(self, seed):
        # the smooth dual comes from minimizing (alpha/2)||A'y - z||^2
        # over z in [-1,1]^n, solved per coordinate by clipping
        model = vector_model(seed)
        y = rng(seed + 1).standard_normal(4)
        s = model.op.A.T @ y
        z = np.clip(s, -1.0, 1.0)
        direct = -model.b @ y + 0.5 * model.alpha * np.sum((s - z) ** 2)
        assert dual_objective(model, y) == pytest.approx(direct, rel=1e-12, abs=1e-12)

    def test_matrix_model_uses_singular_values(self):
        model = trace_model(3)
        y = rng(4).standard_normal(5)
        S = adjoint_op(model.op, y)
        sig = svd(S).sigma
        expected = -model.b @ y + 0.5 * model.alpha * np.sum(shrink(sig, 1.0) ** 2)
        assert dual_objective(model, y) == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_noise_term(self):
        model = vector_model(sigma=0.7)
        y = np.full(4, 0.01)
        base = vector_model(sigma=0.0)
        expected = dual_objective(base, y) + 0.7 * np.linalg.norm(y)
        assert dual_objective(model, y) == pytest.approx(expected)

    @given(st.integers(0, 10000))
    @settings(max_examples=30)
    def test_convexity_probe(self, seed):
        model = vector_model(seed % 50, sigma=0.3 if seed % 2 else 0.0)
        g = rng(seed)
        y1 = g.standard_normal(4)
        y2 = g.standard_normal(4)
        mid = dual_objective(model, 0.5 * (y1 + y2))
        avg = 0.5 * (dual_objective(model, y1) + dual_objective(model, y2))
        assert mid <= avg + 1e-12 * (1 + abs(avg))


def finite_difference_gradient(model, y, eps=1e-6):
    g = np.zeros_like(y)
    for i in range(y.size):
        e = np.zeros_like(y)
        e[i] = eps
        g[i] = (dual_objective(model, y + e) - dual_objective(model, y - e)) / (2 * eps)
    return g


def generic_point(model, m, seed, margin=1e-3):
    # a dual point whose shrink arguments stay away from the kinks
    g = rng(seed)
    for _ in range(200):
        y = g.standard_normal(m)
        s = adjoint_op(model.op, y)
        gap = np.abs(np.abs(np.asarray(s)) - 1.0).min()
        if gap > margin and np.linalg.norm(y) > 0.1:
            return y
    raise AssertionError("no generic point found")


class TestDualGradient:
    def test_dead_zone_gradient_is_minus_b(self):
        A = np.eye(3)
        b = np.array([1.0, -2.0, 0.5])
        model = Model(DenseVectorOp(A), b, 5.0)
        y = np.array([0.9, -0.8, 0.3])
        assert np.allclose(dual_gradient(model, y), -b)

    def test_gradient_at_zero_is_minus_b(self):
        model = vector_model()
        assert np.allclose(dual_gradient(model, np.zeros(4)), -model.b)

    def test_noisy_dual_rejects_origin(self):
        model = vector_model(sigma=0.5)
        with pytest.raises(ValueError):
            dual_gradient(model, np.zeros(4))

    @given(st.integers(0, 1000))
    @settings(max_examples=40, deadline=None)
    def test_matches_finite_differences(self, seed):
        model = vector_model(seed % 97, alpha=1.5)
        y = generic_point(model, 4, seed)
        g = dual_gradient(model, y)
        fd = finite_difference_gradient(model, y)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(g), 1.0)

    def test_matrix_gradient_matches_finite_differences(self):
        model = trace_model(11, alpha=1.5)
        g0 = rng(12)
        y = None
        for _ in range(100):
            cand = g0.standard_normal(5)
            sig = svd(adjoint_op(model.op, cand)).sigma
            if np.abs(sig - 1.0).min() > 1e-2:
                y = cand
                break
        assert y is not None
        g = dual_gradient(model, y)
        fd = finite_difference_gradient(model, y)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(g), 1.0)

    def test_noise_term_gradient(self):
        model = vector_model(sigma=0.7)
        base = vector_model(sigma=0.0)
        y = np.array([1.0, 2.0, -1.0, 0.5])
        expected = dual_gradient(base, y) + 0.7 * y / np.linalg.norm(y)
        assert np.allclose(dual_gradient(model, y), expected)


class TestPrimalMaps:
    def test_zero_dual_gives_zero_primal(self):
        model = vector_model()
        assert np.allclose(primal_from_dual(model, np.zeros(4)), 0.0)

    def test_scalar_example(self):
        model = Model(DenseVectorOp(np.eye(1)), np.array([2.0]), 2.0)
        assert np.allclose(primal_from_dual(model, np.array([1.5])), [1.0])

    def test_optimal_dual_reproduces_measurements(self):
        # A=[1], b=[2], alpha=2: alpha*shrink(y)=2 at y*=2, x*=2
        model = Model(DenseVectorOp(np.eye(1)), np.array([2.0]), 2.0)
        y_star = np.array([2.0])
        x_star = primal_from_dual(model, y_star)
        assert np.allclose(apply_op(model.op, x_star), model.b)
        assert np.allclose(dual_gradient(model, y_star), 0.0)

    def test_primal_objective_examples(self):
        model = Model(DenseVectorOp(np.eye(1)), np.array([1.0]), 3.0)
        assert primal_objective(model, np.zeros(1)) == 0.0
        assert primal_objective(model, np.array([3.0])) == pytest.approx(4.5)

    def test_zero_gap_at_optimum(self):
        model = Model(DenseVectorOp(np.eye(1)), np.array([2.0]), 2.0)
        y_star = np.array([2.0])
        x_star = primal_from_dual(model, y_star)
        assert primal_objective(model, x_star) == pytest.approx(
            -dual_objective(model, y_star), abs=1e-12
        )

    def test_matrix_primal_objective(self):
        model = trace_model()
        X = np.diag([3.0, 0.0, 0.0])
        expected = 3.0 + 9.0 / (2 * model.alpha)
        assert primal_objective(model, X) == pytest.approx(expected)


class TestCsv:
    def test_matrix_roundtrip(self, tmp_path):
        A = rng(1).standard_normal((3, 4))
        path = tmp_path / "a.csv"
        save_matrix_csv(path, A)
        assert np.array_equal(load_matrix_csv(path), A)

    def test_vector_roundtrip(self, tmp_path):
        v = rng(2).standard_normal(5)
        path = tmp_path / "v.csv"
        save_vector_csv(path, v)
        assert np.array_equal(load_vector_csv(path), v)

    def test_dense_op_roundtrip(self, tmp_path):
        op = DenseVectorOp(rng(3).standard_normal((2, 5)))
        path = tmp_path / "op.csv"
        save_dense_op(path, op)
        assert np.array_equal(load_dense_op(path).A, op.A)

    def test_sampler_roundtrip(self, tmp_path):
        op = EntrySampler(3, 4, [(0, 1), (2, 3)])
        path = tmp_path / "omega.csv"
        save_entry_sampler(path, op)
        loaded = load_entry_sampler(path)
        assert loaded.n1 == 3 and loaded.n2 == 4
        assert loaded.omega == op.omega

    def test_trace_list_roundtrip(self, tmp_path):
        op = TraceList([rng(k).standard_normal((2, 3)) for k in range(4)])
        data = tmp_path / "mats.csv"
        index = tmp_path / "mats.index.csv"
        save_trace_list(data, index, op)
        loaded = load_trace_list(data, index)
        for got, want in zip(loaded.mats, op.mats):
            assert np.array_equal(got, want)
