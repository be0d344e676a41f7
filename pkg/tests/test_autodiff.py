import numpy as np
import pytest

from app.errors import ShapeMismatchError, TapeError
from app.services.autodiff import (
    Tape,
    Tensor,
    backward,
    clamp01,
    concat_channels,
    conv2d,
    conv_transpose2d,
    maxpool2d,
    mse_loss,
    relu,
    zero_grad,
)
from app.services.optimizer import AdamState, adam_step


def create_tensor(data, requires_grad=True) -> Tensor:
    return Tensor(data=np.asarray(data, dtype=np.float64), requires_grad=requires_grad)


def reference_conv(x, w, b, pad):
    batch, in_ch, height, width = x.shape
    out_ch, _, k, _ = w.shape
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out_h, out_w = height + 2 * pad - k + 1, width + 2 * pad - k + 1
    out = np.zeros((batch, out_ch, out_h, out_w))
    for n in range(batch):
        for o in range(out_ch):
            for i in range(out_h):
                for j in range(out_w):
                    out[n, o, i, j] = np.sum(padded[n, :, i:i + k, j:j + k] * w[o]) + b[o]
    return out


def test_conv2d_matches_direct_loop(rng):
    x = rng.standard_normal((2, 3, 5, 4))
    w = rng.standard_normal((4, 3, 3, 3))
    b = rng.standard_normal(4)
    out = conv2d(create_tensor(x), create_tensor(w), create_tensor(b), pad=1)
    assert out.shape == (2, 4, 5, 4)
    np.testing.assert_allclose(out.data, reference_conv(x, w, b, 1), rtol=1e-12, atol=1e-12)


def test_conv2d_identity_kernel():
    x = np.arange(16.0).reshape(1, 1, 4, 4)
    w = np.zeros((1, 1, 3, 3))
    w[0, 0, 1, 1] = 1.0
    out = conv2d(create_tensor(x), create_tensor(w), create_tensor([0.0]))
    np.testing.assert_array_equal(out.data, x)


def test_conv2d_rejects_channel_mismatch():
    with pytest.raises(ShapeMismatchError):
        conv2d(create_tensor(np.zeros((1, 2, 4, 4))), create_tensor(np.zeros((1, 3, 3, 3))), create_tensor([0.0]))


def test_conv_transpose_scatters_blocks():
    """Each input pixel becomes its own 2x2 output block weighted by the kernel."""
    x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
    w = np.array([[[[1.0, 10.0], [100.0, 1000.0]]]])
    out = conv_transpose2d(create_tensor(x), create_tensor(w), create_tensor([0.5]))
    expected = np.array(
        [
            [1, 10, 2, 20],
            [100, 1000, 200, 2000],
            [3, 30, 4, 40],
            [300, 3000, 400, 4000],
        ],
        dtype=float,
    ) + 0.5
    np.testing.assert_array_equal(out.data[0, 0], expected)


def test_maxpool_forward_and_tie_break():
    x = create_tensor([[[[1.0, 5.0, 2.0, 2.0], [3.0, 4.0, 2.0, 2.0]]]])
    tape = Tape()
    out = maxpool2d(x, tape=tape)
    np.testing.assert_array_equal(out.data, [[[[5.0, 2.0]]]])
    loss = mse_loss(out, np.zeros((1, 1, 1, 2)), tape=tape)
    backward(tape, loss)
    # d/dout of mean(out^2) = out; ties route to the first cell in row-major order
    np.testing.assert_array_equal(x.grad, [[[[0.0, 5.0, 2.0, 0.0], [0.0, 0.0, 0.0, 0.0]]]])


def test_relu_and_clamp_gradients():
    x = create_tensor([[[[-1.0, 0.5, 2.0]]]])
    tape = Tape()
    out = clamp01(relu(x, tape=tape), tape=tape)
    np.testing.assert_array_equal(out.data, [[[[0.0, 0.5, 1.0]]]])
    loss = mse_loss(out, np.zeros((1, 1, 1, 3)), tape=tape)
    backward(tape, loss)
    np.testing.assert_allclose(x.grad, [[[[0.0, 2 * 0.5 / 3, 0.0]]]])


def test_concat_splits_gradient():
    a = create_tensor(np.ones((1, 1, 2, 2)))
    b = create_tensor(np.full((1, 2, 2, 2), 2.0))
    tape = Tape()
    out = concat_channels([a, b], tape=tape)
    assert out.shape == (1, 3, 2, 2)
    backward(tape, mse_loss(out, np.zeros(out.shape), tape=tape))
    assert a.grad.shape == a.shape and b.grad.shape == b.shape
    np.testing.assert_allclose(a.grad, 2 * 1.0 / 12)
    np.testing.assert_allclose(b.grad, 2 * 2.0 / 12)


def test_mse_value_and_gradient():
    pred = create_tensor([1.0, 2.0, 3.0])
    target = np.array([1.0, 0.0, 0.0])
    tape = Tape()
    loss = mse_loss(pred, target, tape=tape)
    assert float(loss.data) == pytest.approx(13 / 3)
    backward(tape, loss)
    np.testing.assert_allclose(pred.grad, [0.0, 4 / 3, 2.0])


def test_shared_input_accumulates_gradient():
    x = create_tensor([[[[0.5]]]])
    tape = Tape()
    doubled = concat_channels([x, x], tape=tape)
    backward(tape, mse_loss(doubled, np.zeros((1, 2, 1, 1)), tape=tape))
    np.testing.assert_allclose(x.grad, [[[[1.0]]]])


def test_backward_on_unrecorded_value():
    x = create_tensor([1.0])
    loss = mse_loss(x, np.zeros(1))
    with pytest.raises(TapeError):
        backward(Tape(), loss)


def test_backward_needs_scalar():
    x = create_tensor(np.ones((1, 1, 2, 2)))
    tape = Tape()
    out = relu(x, tape=tape)
    with pytest.raises(ShapeMismatchError):
        backward(tape, out)


def test_backward_is_deterministic(rng):
    x = rng.standard_normal((2, 2, 4, 4))
    w = rng.standard_normal((3, 2, 3, 3))
    grads = []
    for _ in range(2):
        weight = create_tensor(w)
        tape = Tape()
        out = relu(conv2d(create_tensor(x, requires_grad=False), weight, create_tensor(np.zeros(3)), tape=tape), tape=tape)
        backward(tape, mse_loss(out, np.ones(out.shape), tape=tape))
        grads.append(weight.grad)
    assert grads[0].tobytes() == grads[1].tobytes()


def test_adam_zero_learning_rate_is_identity(rng):
    params = [rng.standard_normal((3, 3))]
    before = params[0].copy()
    state = AdamState.for_params(params)
    adam_step(params, [rng.standard_normal((3, 3))], state, lr=0.0)
    np.testing.assert_array_equal(params[0], before)
    assert state.step == 1


def test_adam_first_step_moves_by_learning_rate():
    """With bias correction the first step is lr * sign(g) (up to eps)."""
    params = [np.array([1.0, -1.0])]
    state = AdamState.for_params(params)
    adam_step(params, [np.array([0.3, -2.0])], state, lr=0.1)
    np.testing.assert_allclose(params[0], [0.9, -0.9], atol=1e-7)


def test_adam_rejects_shape_mismatch():
    params = [np.zeros(2)]
    with pytest.raises(ShapeMismatchError):
        adam_step(params, [np.zeros(3)], AdamState.for_params(params), lr=0.1)


def test_second_backward_doubles_gradients(rng):
    weight = create_tensor(rng.standard_normal((2, 1, 3, 3)))
    x = create_tensor(rng.standard_normal((1, 1, 4, 4)), requires_grad=False)
    tape = Tape()
    out = conv2d(x, weight, create_tensor(np.zeros(2)), pad=1, tape=tape)
    loss = mse_loss(out, np.ones(out.shape), tape=tape)
    backward(tape, loss)
    first = weight.grad.copy()
    backward(tape, loss)
    np.testing.assert_array_equal(weight.grad, 2 * first)

    zero_grad([weight])
    assert weight.grad is None
    backward(tape, loss)
    np.testing.assert_array_equal(weight.grad, first)


def test_zero_loss_gives_zero_gradients(rng):
    weight = create_tensor(rng.standard_normal((2, 1, 3, 3)))
    bias = create_tensor(rng.standard_normal(2))
    x = create_tensor(rng.standard_normal((1, 1, 4, 4)), requires_grad=False)
    tape = Tape()
    out = relu(conv2d(x, weight, bias, pad=1, tape=tape), tape=tape)
    loss = mse_loss(out, out.data.copy(), tape=tape)
    assert float(loss.data) == 0.0
    backward(tape, loss)
    assert np.all(weight.grad == 0.0)
    assert np.all(bias.grad == 0.0)


def test_adam_zero_gradient_leaves_parameters(rng):
    params = [rng.standard_normal((3, 3))]
    before = params[0].copy()
    state = AdamState.for_params(params)
    for _ in range(3):
        adam_step(params, [np.zeros((3, 3))], state, lr=0.1)
    np.testing.assert_array_equal(params[0], before)


def test_adam_matches_reference_over_two_steps(rng):
    lr, beta1, beta2, eps = 0.01, 0.9, 0.999, 1e-8
    start = rng.standard_normal(5)
    grads = [rng.standard_normal(5), rng.standard_normal(5)]

    expected = start.copy()
    m = np.zeros(5)
    v = np.zeros(5)
    for step, g in enumerate(grads, start=1):
        for i in range(5):
            m[i] = beta1 * m[i] + (1 - beta1) * g[i]
            v[i] = beta2 * v[i] + (1 - beta2) * g[i] ** 2
            m_hat = m[i] / (1 - beta1 ** step)
            v_hat = v[i] / (1 - beta2 ** step)
            expected[i] -= lr * m_hat / (np.sqrt(v_hat) + eps)

    params = [start.copy()]
    state = AdamState.for_params(params)
    for g in grads:
        adam_step(params, [g], state, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    np.testing.assert_allclose(params[0], expected, rtol=0, atol=1e-12)
    assert state.step == 2
