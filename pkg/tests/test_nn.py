import math

import numpy as np
import pytest

from core.autodiff import Tape, Tensor, add, matmul, square_sum
from core.errors import ConfigurationError, DataError, ShapeError, TrainingStateError
from core.nn import (
    DropoutContext,
    DropoutMask,
    DropoutMode,
    cross_entropy_l2,
    dropout,
    kaiming_uniform,
    linear,
    softmax,
)
from core.optim import AdamState, adam_step
from core.seeding import stream


class TestDropout:
    def test_off_is_identity(self):
        x = Tensor(np.arange(6.0).reshape(2, 3))
        assert DropoutContext(DropoutMode.OFF, 0.5)(x) is x

    @pytest.mark.parametrize("rate", [-0.1, 1.0, 1.5])
    def test_rate_outside_range(self, rate):
        with pytest.raises(ConfigurationError):
            DropoutContext(DropoutMode.TRAIN, rate)
        with pytest.raises(ConfigurationError):
            DropoutMask.sample((3,), rate, DropoutMode.TRAIN, np.random.default_rng(0))

    def test_sampling_needs_rng(self):
        with pytest.raises(ConfigurationError):
            DropoutMask.sample((3,), 0.2, DropoutMode.MC_SAMPLE, None)

    def test_mask_values_and_expectation(self):
        mask = DropoutMask.sample((200_000,), 0.3, DropoutMode.TRAIN, np.random.default_rng(3)).mask
        assert set(np.unique(mask)) <= {0.0, 1.0 / 0.7}
        assert abs(mask.mean() - 1.0) < 0.01

    def test_zero_rate_keeps_everything(self):
        x = Tensor(np.ones(5))
        out = DropoutContext(DropoutMode.MC_SAMPLE, 0.0, np.random.default_rng(0))(x)
        np.testing.assert_array_equal(out.data, np.ones(5))

    def test_same_stream_same_mask(self):
        a = DropoutMask.sample((4, 4), 0.5, DropoutMode.MC_SAMPLE, stream(9, 1)).mask
        b = DropoutMask.sample((4, 4), 0.5, DropoutMode.MC_SAMPLE, stream(9, 1)).mask
        c = DropoutMask.sample((4, 4), 0.5, DropoutMode.MC_SAMPLE, stream(9, 2)).mask
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_mask_shape_must_match(self):
        mask = DropoutMask.sample((3,), 0.5, DropoutMode.TRAIN, np.random.default_rng(0))
        with pytest.raises(ShapeError):
            dropout(np.ones(4), mask)

    def test_gradient_through_fixed_mask(self, gradcheck, rng):
        tape = Tape()
        w = tape.parameter("w", rng.standard_normal((3, 4)))
        x = Tensor(rng.standard_normal((2, 3)))
        gradcheck(lambda: square_sum(DropoutContext(DropoutMode.TRAIN, 0.4, stream(5, 0))(matmul(x, w))), tape)


class TestSoftmaxAndLoss:
    def test_softmax_rows_sum_to_one(self):
        probs = softmax(np.array([[1000.0, 1000.0], [0.0, -50.0], [3.0, 1.0]])).data
        np.testing.assert_allclose(probs.sum(axis=1), 1.0)
        np.testing.assert_allclose(probs[0], [0.5, 0.5])

    def test_softmax_needs_two_classes(self):
        with pytest.raises(ShapeError):
            softmax(np.ones((3, 1)))

    def test_cross_entropy_value(self):
        loss = cross_entropy_l2(np.array([[0.2, 0.8], [0.9, 0.1]]), [1, 0], None, 0.0)
        assert loss.item() == pytest.approx(-math.log(0.8) - math.log(0.9))

    def test_l2_penalises_weights_only(self):
        tape = Tape()
        tape.parameter("w", np.array([1.0, 2.0]))
        tape.parameter("b", np.array([10.0]), weight=False)
        loss = cross_entropy_l2(np.array([[0.5, 0.5]]), [1], tape, 0.5)
        assert loss.item() == pytest.approx(math.log(2.0) + 0.25 * 5.0)

    def test_labels_must_be_binary(self):
        with pytest.raises(DataError):
            cross_entropy_l2(np.array([[0.5, 0.5]]), [2], None, 0.0)

    def test_negative_lambda(self):
        with pytest.raises(ConfigurationError):
            cross_entropy_l2(np.array([[0.5, 0.5]]), [1], None, -1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            cross_entropy_l2(np.array([[0.5, 0.5]]), [1, 0], None, 0.0)

    def test_loss_gradient(self, gradcheck, rng):
        tape = Tape()
        w = tape.parameter("w", rng.standard_normal((4, 2)))
        b = tape.parameter("b", rng.standard_normal(2), weight=False)
        x = Tensor(rng.standard_normal((6, 4)))
        labels = np.array([1, 0, 0, 1, 1, 0])
        gradcheck(lambda: cross_entropy_l2(softmax(linear(x, w, b)), labels, tape, 0.1), tape)

    def test_kaiming_bound(self):
        values = kaiming_uniform(np.random.default_rng(0), 6, (100, 6))
        assert np.all(np.abs(values) <= 1.0)


class TestAdam:
    def test_step_before_backward(self):
        tape = Tape()
        tape.parameter("w", np.ones(2))
        with pytest.raises(TrainingStateError):
            adam_step(AdamState(), tape)

    def test_zero_learning_rate_keeps_parameters(self):
        tape = Tape()
        w = tape.parameter("w", np.array([1.0, -2.0]))
        tape.backward(square_sum(w))
        adam_step(AdamState(lr=0.0), tape)
        np.testing.assert_array_equal(w.data, [1.0, -2.0])
        np.testing.assert_array_equal(w.grad, [0.0, 0.0])

    def test_first_step_moves_by_lr(self):
        tape = Tape()
        w = tape.parameter("w", np.array([1.0, -2.0]))
        tape.backward(square_sum(w))
        adam_step(AdamState(lr=0.1), tape)
        # bias correction makes the first step lr * sign(grad)
        np.testing.assert_allclose(w.data, [0.9, -1.9], atol=1e-6)

    def test_converges_on_quadratic(self):
        tape = Tape()
        w = tape.parameter("w", np.array([3.0, -4.0, 0.5]))
        target = np.array([1.0, 2.0, -1.0])
        state = AdamState(lr=0.05)
        for _ in range(2000):
            tape.backward(square_sum(add(w, -target)))
            adam_step(state, tape)
        np.testing.assert_allclose(w.data, target, atol=0.02)
        assert state.step == 2000
