import numpy as np
import pytest

from src.autodiff import Tape, Tensor, backward, grad_check, ops
from src.errors import NonFiniteError, ShapeError, SingularMatrixError, TapeError


def weighted_sum(t: Tensor, seed: int = 0) -> Tensor:
    """Scalar readout with fixed random weights so no gradient entry is trivially symmetric"""
    weights = np.random.default_rng(seed).normal(size=t.shape)
    return ops.reduce_sum(ops.mul(t, weights))


def halves(x: Tensor):
    rows = x.shape[0] // 2
    return ops.slice_axis(x, 0, rows), ops.slice_axis(x, rows, 2 * rows)


def attention_weights(rng, heads: int = 2, d: int = 6, d_head: int = 3):
    """Per-head (wq, wk, wv, wo) lists for a d-feature input"""
    projections = [[rng.normal(size=(d_head, d)) for _ in range(heads)] for _ in range(3)]
    return projections + [[rng.normal(size=(d, d_head)) for _ in range(heads)]]


ATTENTION = attention_weights(np.random.default_rng(17))

PRIMITIVES = {
    "add": lambda x: weighted_sum(ops.add(*halves(x))),
    "sub": lambda x: weighted_sum(ops.sub(*halves(x))),
    "mul": lambda x: weighted_sum(ops.mul(*halves(x))),
    "div": lambda x: weighted_sum(ops.div(halves(x)[0], ops.add(ops.square(halves(x)[1]), np.ones((3, 4))))),
    "scale": lambda x: weighted_sum(ops.scale(x, -2.5)),
    "exp": lambda x: weighted_sum(ops.exp(x)),
    "sqrt": lambda x: weighted_sum(ops.sqrt(ops.add(ops.square(x), np.ones(x.shape)))),
    "square": lambda x: weighted_sum(ops.square(x)),
    "matmul": lambda x: weighted_sum(ops.matmul(halves(x)[0], ops.transpose(halves(x)[1]))),
    "transpose": lambda x: weighted_sum(ops.transpose(x)),
    "solve": lambda x: weighted_sum(
        ops.solve(ops.add(ops.slice_axis(halves(x)[0], 0, 3, axis=1), 4.0 * np.eye(3)), halves(x)[1])
    ),
    "concat": lambda x: weighted_sum(ops.concat([ops.square(halves(x)[0]), halves(x)[1]], axis=1)),
    "split": lambda x: weighted_sum(ops.split(x, [1, 2, 1], axis=1)[1]),
    "add_columns": lambda x: weighted_sum(ops.add_columns(halves(x)[0], ops.slice_axis(halves(x)[1], 0, 1, axis=1))),
    "reduce_sum_axis": lambda x: weighted_sum(ops.square(ops.reduce_sum(x, axis=0))),
    "reduce_mean_axis": lambda x: weighted_sum(ops.square(ops.reduce_mean(x, axis=1))),
    "softmax_columns": lambda x: weighted_sum(ops.softmax_columns(x)),
    "layer_norm_columns": lambda x: weighted_sum(
        ops.layer_norm_columns(x, ops.constant(np.linspace(0.5, 1.5, 6)[:, None]), ops.constant(np.ones((6, 1))))
    ),
    "attention_heads": lambda x: weighted_sum(ops.attention_heads(x, *ATTENTION)),
}


class TestPrimitiveGradients:
    @pytest.mark.parametrize("name", sorted(PRIMITIVES))
    def test_matches_central_differences(self, name):
        point = np.random.default_rng(11).normal(size=(6, 4))
        result = grad_check(PRIMITIVES[name], point)
        assert result.max_norm_error <= 1e-6, name

    def test_relu_away_from_kink(self):
        point = np.random.default_rng(5).normal(size=(4, 3))
        point = np.where(np.abs(point) < 1e-3, 0.5, point)
        result = grad_check(lambda x: weighted_sum(ops.relu(x)), point)
        assert result.max_norm_error <= 1e-6

    def test_layer_norm_gain_and_bias(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(5, 3))

        def builder(p):
            gain = ops.slice_axis(p, 0, 5)
            bias = ops.slice_axis(p, 5, 10)
            return weighted_sum(ops.layer_norm_columns(ops.constant(x), gain, bias))

        result = grad_check(builder, rng.normal(size=(10, 1)))
        assert result.max_norm_error <= 1e-6

    def test_linear_map_is_exact(self):
        weights = np.random.default_rng(2).normal(size=(3, 3))
        result = grad_check(lambda x: weighted_sum(ops.matmul(weights, x)), np.ones((3, 2)))
        assert result.max_norm_error <= 1e-10

    @pytest.mark.parametrize("kind", range(4))
    def test_attention_projection_gradients(self, kind):
        rng = np.random.default_rng(21)
        x = rng.normal(size=(6, 4))
        weights = attention_weights(rng)

        def builder(w):
            sets = [list(ws) for ws in weights]
            sets[kind][1] = w
            return weighted_sum(ops.attention_heads(ops.constant(x), *sets))

        assert grad_check(builder, weights[kind][1]).max_norm_error <= 1e-6

    def test_sqrt_gradient_at_zero(self):
        tape = Tape()
        x = tape.leaf([0.0, 4.0])
        grads = backward(tape, ops.reduce_sum(ops.sqrt(x)))
        np.testing.assert_array_equal(grads[x], [0.0, 0.25])


def random_graph(rng, depth: int):
    """Chain of smooth primitives on a 4×3 input with fixed random constants"""
    choices = []
    for _ in range(depth):
        kind = rng.integers(6)
        const = rng.normal(size=(4, 4)) * 0.5
        gain = rng.uniform(0.5, 1.5, size=(4, 1))
        choices.append((kind, const, gain))

    def builder(x):
        t = x
        for kind, const, gain in choices:
            if kind == 0:
                t = ops.matmul(const, t)
            elif kind == 1:
                t = ops.exp(ops.scale(t, 0.3))
            elif kind == 2:
                t = ops.softmax_columns(t)
            elif kind == 3:
                t = ops.layer_norm_columns(t, ops.constant(gain), ops.constant(np.zeros((4, 1))))
            elif kind == 4:
                t = ops.div(t, ops.add(ops.square(t), np.ones(t.shape)))
            else:
                t = ops.solve(ops.add(ops.constant(const), 3.0 * np.eye(4)), t)
        return weighted_sum(t, seed=1)

    return builder


class TestComposedGraphs:
    def test_random_graphs_match_central_differences(self):
        rng = np.random.default_rng(2024)
        for _ in range(50):
            builder = random_graph(rng, depth=int(rng.integers(2, 7)))
            result = grad_check(builder, rng.normal(size=(4, 3)))
            assert result.max_norm_error <= 1e-6

    def test_matmul_chain_depth_five(self):
        rng = np.random.default_rng(8)
        mats = [rng.normal(size=(3, 3)) / np.sqrt(3) for _ in range(5)]

        def builder(x):
            t = x
            for a in mats:
                t = ops.matmul(a, t)
            return weighted_sum(t)

        assert grad_check(builder, rng.normal(size=(3, 2))).max_norm_error <= 1e-6

    def test_layer_norm_then_softmax(self):
        rng = np.random.default_rng(9)
        gain, bias = ops.constant(np.ones((5, 1))), ops.constant(np.zeros((5, 1)))
        builder = lambda x: weighted_sum(ops.softmax_columns(ops.layer_norm_columns(x, gain, bias)))
        assert grad_check(builder, rng.normal(size=(5, 4))).max_norm_error <= 1e-5

    def test_replay_is_bit_identical(self):
        rng = np.random.default_rng(4)
        builder = random_graph(rng, depth=5)
        point = rng.normal(size=(4, 3))
        first, second = grad_check(builder, point), grad_check(builder, point)
        assert np.array_equal(first.analytic, second.analytic)


class TestForwardValues:
    def test_relu(self):
        np.testing.assert_array_equal(ops.relu(Tensor([-1.0, 0.0, 2.0])).data, [0.0, 0.0, 2.0])

    def test_relu_subgradient_at_zero(self):
        tape = Tape()
        x = tape.leaf([0.0, 1.0])
        grads = backward(tape, ops.reduce_sum(ops.relu(x)))
        np.testing.assert_array_equal(grads[x], [0.0, 1.0])

    def test_softmax_of_constant_column(self):
        out = ops.softmax_columns(Tensor(np.full((4, 1), 3.7))).data
        np.testing.assert_allclose(out, 0.25, atol=1e-15)

    def test_softmax_columns_sum_to_one(self):
        out = ops.softmax_columns(Tensor(np.random.default_rng(1).normal(size=(6, 5)) * 5)).data
        np.testing.assert_allclose(out.sum(axis=0), 1.0, atol=1e-12)
        assert np.all((out > 0) & (out < 1))

    def test_layer_norm_without_eps_standardizes(self):
        x = Tensor(np.random.default_rng(2).normal(size=(7, 4)) * 3 + 1)
        out = ops.layer_norm_columns(x, Tensor(np.ones((7, 1))), Tensor(np.zeros((7, 1))), eps=0.0).data
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.var(axis=0), 1.0, atol=1e-10)

    def test_layer_norm_default_eps(self):
        data = np.random.default_rng(3).normal(size=(6, 3))
        out = ops.layer_norm_columns(Tensor(data), Tensor(np.ones((6, 1))), Tensor(np.zeros((6, 1)))).data
        var = data.var(axis=0)
        np.testing.assert_allclose(out.var(axis=0), var / (var + ops.LAYER_NORM_EPS), rtol=1e-10)

    def test_solve_identity(self):
        b = np.random.default_rng(4).normal(size=(3, 2))
        np.testing.assert_allclose(ops.solve(np.eye(3), b).data, b, atol=1e-15)

    def test_attention_heads_match_composed_heads(self):
        rng = np.random.default_rng(8)
        x = Tensor(rng.normal(size=(6, 5)))
        wq, wk, wv, wo = attention_weights(rng, heads=3)
        expected = np.zeros((6, 5))
        for t in range(3):
            q, k, v = ops.matmul(wq[t], x), ops.matmul(wk[t], x), ops.matmul(wv[t], x)
            weights = ops.softmax_columns(ops.scale(ops.matmul(ops.transpose(k), q), 1.0 / np.sqrt(3)))
            expected += ops.matmul(wo[t], ops.matmul(v, weights)).data
        np.testing.assert_allclose(ops.attention_heads(x, wq, wk, wv, wo).data, expected, rtol=1e-12, atol=1e-12)

    def test_square_gradient(self):
        tape = Tape()
        x = tape.leaf([3.0])
        np.testing.assert_allclose(backward(tape, ops.reduce_sum(ops.square(x)))[x], [6.0])


class TestErrors:
    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ops.add(Tensor(np.ones((2, 2))), Tensor(np.ones((2, 3))))
        with pytest.raises(ShapeError):
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_singular_solve(self):
        with pytest.raises(SingularMatrixError) as info:
            ops.solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones((2, 1)))
        assert info.value.condition is None or info.value.condition > ops.MAX_CONDITION

    def test_condition_threshold(self):
        with pytest.raises(SingularMatrixError) as info:
            ops.solve(np.diag([1.0, 1e-13]), np.ones((2, 1)))
        assert info.value.condition == pytest.approx(1e13, rel=1e-6)
        np.testing.assert_allclose(ops.solve(np.diag([1.0, 1e-11]), np.ones((2, 1))).data, [[1.0], [1e11]])

    def test_non_finite_system(self):
        with pytest.raises(SingularMatrixError):
            ops.solve(np.array([[1.0, np.nan], [0.0, 1.0]]), np.ones((2, 1)))

    def test_non_finite_output(self):
        tape = Tape()
        with pytest.raises(NonFiniteError):
            ops.exp(tape.leaf([1000.0]))

    def test_constant_chain_is_checked_by_its_caller(self):
        assert np.isinf(ops.exp(Tensor([1000.0])).data[0])

    def test_attention_head_counts(self):
        wq, wk, wv, wo = attention_weights(np.random.default_rng(0))
        with pytest.raises(ShapeError):
            ops.attention_heads(Tensor(np.ones((6, 2))), wq, wk, wv, wo[:1])
        with pytest.raises(ShapeError):
            ops.attention_heads(Tensor(np.ones((5, 2))), wq, wk, wv, wo)

    def test_non_scalar_root(self):
        tape = Tape()
        x = tape.leaf(np.ones(3))
        with pytest.raises(TapeError):
            backward(tape, ops.square(x))

    def test_mixed_tapes(self):
        a, b = Tape().leaf([1.0]), Tape().leaf([2.0])
        with pytest.raises(TapeError):
            ops.add(a, b)

    def test_disconnected_leaf_gets_zero(self):
        tape = Tape()
        x, y = tape.leaf([1.0, 2.0]), tape.leaf(np.ones((2, 2)))
        grads = backward(tape, ops.reduce_sum(ops.square(x)))
        np.testing.assert_array_equal(grads[y], np.zeros((2, 2)))
        assert y not in grads

    def test_foreign_tensor_lookup(self):
        tape = Tape()
        x = tape.leaf([1.0])
        grads = backward(tape, ops.reduce_sum(x))
        with pytest.raises(TapeError):
            grads[Tape().leaf([1.0])]


class TestGradCheckReports:
    def test_wrong_gradient_is_reported_not_raised(self):
        def builder(x):
            if x.tape is None:
                return ops.reduce_sum(x)
            # deliberately doubled backward rule
            bad = x.tape.record("bad_identity", x.data.copy(), (x,), lambda g: (2.0 * g,))
            return ops.reduce_sum(bad)

        result = grad_check(builder, np.ones(3))
        assert not result.passed(1e-3)
        np.testing.assert_allclose(result.analytic, 2.0)
        np.testing.assert_allclose(result.numeric, 1.0, rtol=1e-8)
