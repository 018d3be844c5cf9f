import numpy as np
import pytest

from wavedetect.autodiff import Tensor, tsum
from wavedetect.errors import ContractError, DomainError, ShapeError
from wavedetect.nn import (
    LSTMParams,
    bce_loss,
    conv1d,
    conv_output_length,
    deconv1d,
    deconv_output_length,
    linear,
    lstm_cell,
    mse_loss,
)

from conftest import max_rel_err, numeric_grad


def conv1d_naive(x, w, b, stride, padding):
    """Independent triple-loop oracle for the convolution definition."""
    cin, t = x.shape
    cout, _, k = w.shape
    xp = np.zeros((cin, t + 2 * padding))
    xp[:, padding:padding + t] = x
    tout = (t + 2 * padding - k) // stride + 1
    out = np.zeros((cout, tout))
    for co in range(cout):
        for pos in range(tout):
            acc = 0.0
            for ci in range(cin):
                for j in range(k):
                    acc += w[co, ci, j] * xp[ci, pos * stride + j]
            out[co, pos] = acc + b[co]
    return out


def lstm_reference(a, h, c, p):
    """Direct evaluation of the six gate equations."""

    def sig(z):
        return 1.0 / (1.0 + np.exp(-z))

    i = sig(p.w_ii.data @ a + p.b_ii.data + p.w_hi.data @ h + p.b_hi.data)
    f = sig(p.w_if.data @ a + p.b_if.data + p.w_hf.data @ h + p.b_hf.data)
    g = np.tanh(p.w_ig.data @ a + p.b_ig.data + p.w_hg.data @ h + p.b_hg.data)
    o = sig(p.w_io.data @ a + p.b_io.data + p.w_ho.data @ h + p.b_ho.data)
    c_new = f * c + i * g
    return o * np.tanh(c_new), c_new


class TestConv1d:
    def test_moving_sum(self):
        out = conv1d(Tensor([[1.0, 2.0, 3.0]]), Tensor([[[1.0, 1.0]]]), Tensor([0.0]))
        assert np.allclose(out.data, [[3.0, 5.0]])

    def test_zero_input_yields_bias(self, rng):
        w = Tensor(rng.normal(size=(3, 2, 4)))
        out = conv1d(Tensor(np.zeros((2, 16))), w, Tensor([1.0, -2.0, 0.5]), stride=2, padding=1)
        assert np.allclose(out.data, np.array([1.0, -2.0, 0.5])[:, None] * np.ones((3, out.data.shape[1])))

    @pytest.mark.parametrize("stride,padding", [(1, 0), (2, 0), (2, 3), (3, 2)])
    def test_matches_naive_oracle(self, rng, stride, padding):
        x = rng.normal(size=(4, 32))
        w = rng.normal(size=(8, 4, 5))
        b = rng.normal(size=8)
        out = conv1d(Tensor(x), Tensor(w), Tensor(b), stride=stride, padding=padding)
        assert np.max(np.abs(out.data - conv1d_naive(x, w, b, stride, padding))) < 1e-12

    def test_channel_mismatch_raises(self):
        with pytest.raises(ShapeError):
            conv1d(Tensor(np.ones((3, 8))), Tensor(np.ones((2, 4, 3))), Tensor(np.zeros(2)))

    def test_kernel_wider_than_input_raises(self):
        with pytest.raises(ContractError):
            conv1d(Tensor(np.ones((1, 4))), Tensor(np.ones((1, 1, 9))), Tensor(np.zeros(1)))

    def test_gradients_match_finite_differences(self, rng):
        x = Tensor(rng.normal(size=(2, 12)), requires_grad=True)
        w = Tensor(rng.normal(size=(3, 2, 4)), requires_grad=True)
        b = Tensor(rng.normal(size=3), requires_grad=True)
        target = rng.normal(size=(3, 6))
        mse_loss(conv1d(x, w, b, stride=2, padding=1), Tensor(target)).backward()

        def f():
            pred = conv1d_naive(x.data, w.data, b.data, 2, 1)
            return float(np.mean((pred - target) ** 2))

        for t in (x, w, b):
            assert max_rel_err(t.grad, numeric_grad(f, t)) < 1e-4


class TestDeconv1d:
    def test_single_tap_spread(self):
        out = deconv1d(Tensor([[1.0]]), Tensor([[[1.0, 2.0, 3.0]]]), Tensor([0.0]))
        assert np.allclose(out.data, [[1.0, 2.0, 3.0]])

    def test_restores_conv_input_length(self, rng):
        x = rng.normal(size=(2, 20))
        w = rng.normal(size=(5, 2, 3))
        y = conv1d(Tensor(x), Tensor(w), Tensor(np.zeros(5)))
        back = deconv1d(y, Tensor(np.moveaxis(w, 0, 0)), Tensor(np.zeros(2)))
        # stride 1, padding 0, same kernel width: shape algebra restores T
        assert deconv_output_length(y.data.shape[1], 3, 1, 0) == 20
        assert back.data.shape == (2, 20)

    @pytest.mark.parametrize("cin,cout,t,k,stride,padding", [
        (3, 5, 16, 4, 2, 1),
        (2, 4, 21, 3, 1, 0),
        (4, 2, 10, 6, 2, 2),
        (1, 7, 10, 4, 3, 0),
    ])
    def test_adjoint_identity_with_conv(self, rng, cin, cout, t, k, stride, padding):
        # remainder-free shapes: conv consumes the whole padded input
        assert (t + 2 * padding - k) % stride == 0
        x = rng.normal(size=(cin, t))
        w = rng.normal(size=(cout, cin, k))
        y = rng.normal(size=(cout, conv_output_length(t, k, stride, padding)))
        cx = conv1d(Tensor(x), Tensor(w), Tensor(np.zeros(cout)), stride, padding).data
        dy = deconv1d(Tensor(y), Tensor(w), Tensor(np.zeros(cin)), stride, padding).data
        assert dy.shape == (cin, t)
        assert abs(float(np.vdot(cx, y)) - float(np.vdot(x, dy))) < 1e-10

    def test_channel_mismatch_raises(self):
        with pytest.raises(ShapeError):
            deconv1d(Tensor(np.ones((3, 8))), Tensor(np.ones((2, 4, 3))), Tensor(np.zeros(4)))

    def test_gradients_match_finite_differences(self, rng):
        x = Tensor(rng.normal(size=(3, 6)), requires_grad=True)
        w = Tensor(rng.normal(size=(3, 2, 4)), requires_grad=True)
        b = Tensor(rng.normal(size=2), requires_grad=True)
        target = rng.normal(size=(2, deconv_output_length(6, 4, 2, 1)))
        mse_loss(deconv1d(x, w, b, stride=2, padding=1), Tensor(target)).backward()

        def f():
            from wavedetect.autodiff import no_grad
            with no_grad():
                pred = deconv1d(Tensor(x.data), Tensor(w.data), Tensor(b.data), 2, 1).data
            return float(np.mean((pred - target) ** 2))

        for t in (x, w, b):
            assert max_rel_err(t.grad, numeric_grad(f, t)) < 1e-4


class TestLstmCell:
    def make_params(self, input_size, hidden_size, seed=3):
        return LSTMParams.init(input_size, hidden_size, np.random.default_rng(seed))

    def zero_params(self, input_size, hidden_size):
        p = self.make_params(input_size, hidden_size)
        for _, t in p.named():
            t.data[...] = 0.0
        return p

    def test_all_zero_weights_and_state(self):
        p = self.zero_params(2, 3)
        h, c = lstm_cell(Tensor(np.zeros(2)), Tensor(np.zeros(3)), Tensor(np.zeros(3)), p)
        # i = f = o = 0.5 and g = 0, so both outputs stay zero
        assert np.allclose(c.data, 0.0)
        assert np.allclose(h.data, 0.0)

    def test_forget_gate_arithmetic(self):
        p = self.zero_params(1, 1)
        h, c = lstm_cell(Tensor([0.0]), Tensor([0.0]), Tensor([1.0]), p)
        assert np.allclose(c.data, [0.5])
        assert np.allclose(h.data, [0.5 * np.tanh(0.5)])
        assert abs(h.data[0] - 0.23105857863) < 1e-9

    def test_matches_six_equation_oracle(self, rng):
        p = self.make_params(3, 2, seed=11)
        a, h0, c0 = rng.normal(size=3), rng.normal(size=2), rng.normal(size=2)
        h, c = lstm_cell(Tensor(a), Tensor(h0), Tensor(c0), p)
        h_ref, c_ref = lstm_reference(a, h0, c0, p)
        assert np.max(np.abs(h.data - h_ref)) < 1e-12
        assert np.max(np.abs(c.data - c_ref)) < 1e-12

    def test_cell_state_conservation(self):
        # saturate the forget gate open and the input gate closed
        p = self.zero_params(2, 3)
        p.b_if.data[...] = 40.0
        p.b_ii.data[...] = -40.0
        c_prev = np.array([0.3, -1.2, 2.0])
        _, c = lstm_cell(Tensor(np.zeros(2)), Tensor(np.zeros(3)), Tensor(c_prev), p)
        assert np.allclose(c.data, c_prev, atol=1e-12)

    def test_dimension_mismatch_raises(self):
        p = self.make_params(3, 2)
        with pytest.raises(ShapeError):
            lstm_cell(Tensor(np.zeros(4)), Tensor(np.zeros(2)), Tensor(np.zeros(2)), p)
        with pytest.raises(ShapeError):
            lstm_cell(Tensor(np.zeros(3)), Tensor(np.zeros(5)), Tensor(np.zeros(2)), p)


class TestLinear:
    def test_identity(self):
        x = Tensor([1.0, -2.0, 3.0])
        out = linear(x, Tensor(np.eye(3)), Tensor(np.zeros(3)))
        assert np.allclose(out.data, x.data)

    def test_zero_weight_gives_bias(self):
        out = linear(Tensor(np.ones(4)), Tensor(np.zeros((2, 4))), Tensor([5.0, -1.0]))
        assert np.allclose(out.data, [5.0, -1.0])

    def test_matches_dot_product_oracle(self, rng):
        x, w, b = rng.normal(size=5), rng.normal(size=(3, 5)), rng.normal(size=3)
        out = linear(Tensor(x), Tensor(w), Tensor(b))
        ref = np.array([sum(w[o, i] * x[i] for i in range(5)) + b[o] for o in range(3)])
        assert np.max(np.abs(out.data - ref)) < 1e-12


class TestLosses:
    def test_mse_zero_when_equal(self, rng):
        x = rng.normal(size=(3, 4))
        assert mse_loss(Tensor(x), Tensor(x.copy())).item() == 0.0

    def test_mse_value(self):
        assert mse_loss(Tensor([2.0]), Tensor([0.0])).item() == 4.0

    def test_mse_gradient_formula(self, rng):
        pred = Tensor(rng.normal(size=6), requires_grad=True)
        target = rng.normal(size=6)
        mse_loss(pred, Tensor(target)).backward()
        assert max_rel_err(pred.grad, 2.0 * (pred.data - target) / 6.0) < 1e-12

        def f():
            return float(np.mean((pred.data - target) ** 2))

        assert max_rel_err(pred.grad, numeric_grad(f, pred)) < 1e-5

    def test_mse_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mse_loss(Tensor(np.ones(3)), Tensor(np.ones(4)))

    def test_bce_values(self):
        assert abs(bce_loss(Tensor([0.5]), 0).item() - np.log(2.0)) < 1e-12
        assert abs(bce_loss(Tensor([0.5]), 1).item() - np.log(2.0)) < 1e-12
        assert abs(bce_loss(Tensor([0.9]), 0).item() - (-np.log(0.1))) < 1e-12
        assert bce_loss(Tensor([1.0 - 1e-9]), 1).item() < 1e-8

    def test_bce_domain_error(self):
        with pytest.raises(DomainError):
            bce_loss(Tensor([1.5]), 1)
        with pytest.raises(ContractError):
            bce_loss(Tensor([0.5]), 2)

    def test_bce_gradient(self, rng):
        p = Tensor([0.3], requires_grad=True)
        bce_loss(p, 1).backward()
        assert abs(p.grad[0] + 1.0 / 0.3) < 1e-9


def test_composite_chain_gradients_match_finite_differences(rng):
    """conv -> lstm -> linear -> mse, checked end to end against FD."""
    x = rng.normal(size=(2, 10))
    conv_w = Tensor(rng.normal(size=(3, 2, 4)) * 0.5, requires_grad=True)
    conv_b = Tensor(rng.normal(size=3) * 0.1, requires_grad=True)
    p = LSTMParams.init(3, 2, np.random.default_rng(5))
    out_w = Tensor(rng.normal(size=(2, 2)) * 0.5, requires_grad=True)
    out_b = Tensor(rng.normal(size=2) * 0.1, requires_grad=True)
    target = rng.normal(size=2)

    def forward():
        from wavedetect.autodiff import col
        acts = conv1d(Tensor(x), conv_w, conv_b, stride=2, padding=1)
        h = Tensor(np.zeros(2))
        c = Tensor(np.zeros(2))
        for t in range(acts.data.shape[1]):
            h, c = lstm_cell(col(acts, t), h, c, p)
        return mse_loss(linear(h, out_w, out_b), Tensor(target))

    forward().backward()
    params = [conv_w, conv_b, out_w, out_b] + [t for _, t in p.named()]

    def f():
        from wavedetect.autodiff import no_grad
        with no_grad():
            return forward().item()

    for t in params:
        assert max_rel_err(t.grad, numeric_grad(f, t)) < 1e-4
