import numpy as np
import pytest

from skeldiff import ops
from skeldiff.errors import NonFiniteError, ShapeError
from skeldiff.tensor import Tensor, no_grad


class TestTensorBasics:
    def test_shape_matches_buffer(self):
        t = Tensor(np.arange(6.0).reshape(2, 3))
        assert t.shape == (2, 3)
        assert t.size == 6

    def test_nan_rejected_at_creation(self):
        with pytest.raises(NonFiniteError):
            Tensor(np.array([1.0, np.nan]))

    def test_inf_rejected_at_creation(self):
        with pytest.raises(NonFiniteError):
            Tensor(np.array([np.inf, -np.inf]))

    @pytest.mark.filterwarnings("ignore:overflow")
    def test_nonfinite_op_result_raises(self):
        big = Tensor(np.array([1e308]))
        with pytest.raises(NonFiniteError):
            ops.add(big, big)

    def test_item_requires_scalar(self):
        with pytest.raises(ShapeError):
            Tensor(np.zeros(3)).item()


class TestElementwise:
    def test_add(self):
        out = ops.add(Tensor([1.0, 2.0]), Tensor([3.0, 4.0]))
        assert np.array_equal(out.data, [4.0, 6.0])

    def test_sub_broadcast_scalar(self):
        out = ops.sub(Tensor([1.0, 9.0]), Tensor([2.0]))
        assert np.array_equal(out.data, [-1.0, 7.0])

    def test_mul_by_zeros_zeroes_grad(self):
        x = Tensor([3.0, -4.0], requires_grad=True)
        loss = ops.sum_all(ops.mul(x, Tensor([0.0, 0.0])))
        loss.backward()
        assert np.array_equal(loss.data, 0.0)
        assert np.array_equal(x.grad, [0.0, 0.0])

    def test_incompatible_shapes_rejected(self):
        with pytest.raises(ShapeError):
            ops.add(Tensor(np.zeros(3)), Tensor(np.zeros(2)))
        with pytest.raises(ShapeError):
            ops.add(Tensor(np.zeros(3)), Tensor(np.zeros((2, 3))))

    def test_broadcast_grad_is_sum_over_expanded_axes(self, nprng):
        a = nprng.standard_normal((4, 5))
        b = nprng.standard_normal((1, 5))
        tb = Tensor(b, requires_grad=True)
        ops.sum_all(ops.mul(Tensor(a), tb)).backward()
        assert np.allclose(tb.grad, a.sum(axis=0, keepdims=True))

    def test_channel_bias_broadcast(self, nprng):
        x = nprng.standard_normal((3, 4, 5))
        b = Tensor(np.array([1.0, -2.0, 0.5]), requires_grad=True)
        out = ops.add_channel_bias(Tensor(x), b)
        assert np.allclose(out.data, x + np.array([1.0, -2.0, 0.5])[:, None, None])
        ops.sum_all(out).backward()
        assert np.allclose(b.grad, [20.0, 20.0, 20.0])


class TestMeanAbs:
    def test_identical_inputs(self):
        x = Tensor(np.arange(4.0))
        assert ops.mean_abs(x, x).item() == 0.0

    def test_hand_value(self):
        assert ops.mean_abs(Tensor([1.0, 3.0]), Tensor([0.0, 1.0])).item() == 1.5

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ops.mean_abs(Tensor(np.zeros(2)), Tensor(np.zeros(3)))


class TestConcat:
    def test_slices_recover_inputs(self, nprng):
        a = nprng.standard_normal((2, 5, 4))
        b = nprng.standard_normal((3, 5, 4))
        out = ops.concat_channels([Tensor(a), Tensor(b)])
        assert out.shape == (5, 5, 4)
        assert np.array_equal(out.data[:2], a)
        assert np.array_equal(out.data[2:], b)

    def test_mismatched_tails_rejected(self):
        with pytest.raises(ShapeError):
            ops.concat_channels([Tensor(np.zeros((2, 5, 4))),
                                 Tensor(np.zeros((2, 5, 3)))])


class TestBackward:
    def test_sum_of_squares_gradient(self):
        x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
        loss = ops.sum_all(ops.mul(x, x))
        loss.backward()
        assert np.array_equal(x.grad, [2.0, -4.0, 6.0])

    def test_backward_needs_scalar(self):
        x = Tensor(np.zeros(3), requires_grad=True)
        with pytest.raises(ShapeError):
            ops.mul(x, x).backward()

    def test_repeated_backward_accumulates(self):
        x = Tensor([2.0], requires_grad=True)
        loss = ops.sum_all(ops.mul(x, x))
        loss.backward()
        first = x.grad.copy()
        loss.backward()
        assert np.array_equal(x.grad, 2 * first)

    def test_constant_gets_no_grad(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        c = Tensor([5.0, 5.0])
        ops.sum_all(ops.mul(x, c)).backward()
        assert c.grad is None
        assert np.array_equal(x.grad, [5.0, 5.0])

    def test_shared_input_grads_add(self):
        x = Tensor([3.0], requires_grad=True)
        loss = ops.sum_all(ops.add(ops.mul(x, x), x))  # x^2 + x
        loss.backward()
        assert np.allclose(x.grad, [7.0])

    def test_no_grad_suppresses_graph(self):
        x = Tensor([1.0], requires_grad=True)
        with no_grad():
            out = ops.mul(x, x)
        assert out._grad_fn is None and not out.requires_grad

    def test_intermediates_with_requires_grad_are_populated(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        mid = ops.mul(x, x)
        ops.sum_all(mid).backward()
        assert mid.requires_grad and np.array_equal(mid.grad, [1.0, 1.0])
