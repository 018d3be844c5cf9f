"""Differentiable building blocks: 1-D convolutions, an LSTM cell, dense
layers, and the two loss functions used for training.

Convolutions follow the cross-correlation convention common in sequence
models (no kernel flip). ``deconv1d`` is the exact linear adjoint of
``conv1d`` with the same stride and padding: reinterpreting a conv kernel
bank of shape (out,in,k) as a deconv bank of shape (in,out,k) satisfies
<conv(x), y> == <x, deconv(y)> whenever the conv consumed its input without
a stride remainder.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .autodiff import (
    Tensor,
    _as_tensor,
    _trace,
    add,
    clamp,
    log,
    matmul,
    mul,
    neg,
    sigmoid,
    sub,
    tanh,
    tmean,
)
from .errors import ContractError, DomainError, ShapeError


def conv_output_length(length: int, kernel: int, stride: int, padding: int) -> int:
    return (length + 2 * padding - kernel) // stride + 1


def deconv_output_length(length: int, kernel: int, stride: int, padding: int) -> int:
    return (length - 1) * stride - 2 * padding + kernel


def conv1d(x, kernels, bias, stride: int = 1, padding: int = 0) -> Tensor:
    """Multi-channel 1-D convolution: (Cin,T) -> (Cout,T').

    Every output channel sums over all input channels, so the very first
    layer of an encoder mixes the full channel set.
    """
    x, kernels, bias = _as_tensor(x), _as_tensor(kernels), _as_tensor(bias)
    if x.data.ndim != 2 or kernels.data.ndim != 3:
        raise ShapeError(f"conv1d expects (Cin,T) input and (Cout,Cin,K) kernels; got {x.shape}, {kernels.shape}")
    cin, t = x.data.shape
    cout, kcin, k = kernels.data.shape
    if kcin != cin:
        raise ShapeError(f"kernel channel count {kcin} does not match input channels {cin}")
    if bias.data.shape != (cout,):
        raise ShapeError(f"bias shape {bias.shape} does not match {cout} output channels")
    if stride < 1:
        raise ContractError("conv1d stride must be >= 1")
    if padding < 0:
        raise ContractError("conv1d padding must be >= 0")
    padded = t + 2 * padding
    if k > padded:
        raise ContractError(f"kernel width {k} exceeds padded length {padded}")

    xp = x.data
    if padding:
        xp = np.zeros((cin, padded))
        xp[:, padding : padding + t] = x.data
    tout = (padded - k) // stride + 1
    gather = stride * np.arange(tout)[None, :] + np.arange(k)[:, None]  # (k, tout)
    cols = xp[:, gather].reshape(cin * k, tout)
    wmat = kernels.data.reshape(cout, cin * k)
    out = Tensor(wmat @ cols + bias.data[:, None])

    if _trace((x, kernels, bias)):

        def vjp(g):
            dw = (g @ cols.T).reshape(cout, cin, k)
            db = g.sum(axis=1)
            dcols = (wmat.T @ g).reshape(cin, k, tout)
            dxp = np.zeros((cin, padded))
            base = stride * np.arange(tout)
            for j in range(k):
                dxp[:, base + j] += dcols[:, j, :]
            dx = dxp[:, padding : padding + t] if padding else dxp
            return dx, dw, db

        out.requires_grad, out._parents, out._vjp = True, (x, kernels, bias), vjp
    return out


def deconv1d(x, kernels, bias, stride: int = 1, padding: int = 0) -> Tensor:
    """Transposed 1-D convolution: (Cin,T) -> (Cout,(T-1)*stride-2*padding+K)."""
    x, kernels, bias = _as_tensor(x), _as_tensor(kernels), _as_tensor(bias)
    if x.data.ndim != 2 or kernels.data.ndim != 3:
        raise ShapeError(f"deconv1d expects (Cin,T) input and (Cin,Cout,K) kernels; got {x.shape}, {kernels.shape}")
    cin, t = x.data.shape
    kcin, cout, k = kernels.data.shape
    if kcin != cin:
        raise ShapeError(f"kernel channel count {kcin} does not match input channels {cin}")
    if bias.data.shape != (cout,):
        raise ShapeError(f"bias shape {bias.shape} does not match {cout} output channels")
    if stride < 1:
        raise ContractError("deconv1d stride must be >= 1")
    if padding < 0:
        raise ContractError("deconv1d padding must be >= 0")
    tfull = (t - 1) * stride + k
    tout = tfull - 2 * padding
    if tout < 1:
        raise ContractError("padding removes the entire deconv output")

    # spread[cout,k,t] = sum_cin x[cin,t] * kernels[cin,cout,k]
    spread = np.tensordot(kernels.data, x.data, axes=([0], [0]))
    ypad = np.zeros((cout, tfull))
    base = stride * np.arange(t)
    for j in range(k):
        ypad[:, base + j] += spread[:, j, :]
    out = Tensor(ypad[:, padding : padding + tout] + bias.data[:, None])

    if _trace((x, kernels, bias)):
        gather = stride * np.arange(t)[None, :] + np.arange(k)[:, None]  # (k, t)

        def vjp(g):
            gpad = np.zeros((cout, tfull))
            gpad[:, padding : padding + tout] = g
            gq = gpad[:, gather]  # (cout, k, t)
            dker = np.tensordot(x.data, gq, axes=([1], [2]))  # (cin, cout, k)
            dx = np.tensordot(kernels.data, gq, axes=([1, 2], [0, 1]))  # (cin, t)
            db = g.sum(axis=1)
            return dx, dker, db

        out.requires_grad, out._parents, out._vjp = True, (x, kernels, bias), vjp
    return out


def linear(x, weight, bias) -> Tensor:
    """Dense map: weight @ x + bias."""
    return add(matmul(weight, x), bias)


@dataclass
class LSTMParams:
    """Per-gate weight matrices and biases for one LSTM cell.

    Gate order is input, forget, candidate, output; each gate has an
    input-to-hidden matrix, a hidden-to-hidden matrix, and two biases.
    """

    w_ii: Tensor
    w_hi: Tensor
    b_ii: Tensor
    b_hi: Tensor
    w_if: Tensor
    w_hf: Tensor
    b_if: Tensor
    b_hf: Tensor
    w_ig: Tensor
    w_hg: Tensor
    b_ig: Tensor
    b_hg: Tensor
    w_io: Tensor
    w_ho: Tensor
    b_io: Tensor
    b_ho: Tensor

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: np.random.Generator) -> "LSTMParams":
        si = np.sqrt(1.0 / input_size)
        sh = np.sqrt(1.0 / hidden_size)
        vals = {}
        for gate in "ifgo":
            vals[f"w_i{gate}"] = Tensor(rng.uniform(-si, si, (hidden_size, input_size)), requires_grad=True)
            vals[f"w_h{gate}"] = Tensor(rng.uniform(-sh, sh, (hidden_size, hidden_size)), requires_grad=True)
            vals[f"b_i{gate}"] = Tensor(rng.uniform(-si, si, hidden_size), requires_grad=True)
            vals[f"b_h{gate}"] = Tensor(rng.uniform(-sh, sh, hidden_size), requires_grad=True)
        return cls(**vals)

    def named(self):
        for f in fields(self):
            yield f.name, getattr(self, f.name)

    @property
    def hidden_size(self) -> int:
        return self.w_ii.data.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_ii.data.shape[1]


def _gate(w_i, b_i, w_h, b_h, a, h, activation):
    return activation(add(add(matmul(w_i, a), b_i), add(matmul(w_h, h), b_h)))


def lstm_cell(a, h_prev, c_prev, params: LSTMParams):
    """One LSTM step; returns (h, c)."""
    a, h_prev, c_prev = _as_tensor(a), _as_tensor(h_prev), _as_tensor(c_prev)
    hid = params.hidden_size
    if a.data.shape != (params.input_size,):
        raise ShapeError(f"lstm_cell input shape {a.shape} does not match input size {params.input_size}")
    if h_prev.data.shape != (hid,) or c_prev.data.shape != (hid,):
        raise ShapeError("lstm_cell state shapes do not match the hidden size")
    i = _gate(params.w_ii, params.b_ii, params.w_hi, params.b_hi, a, h_prev, sigmoid)
    f = _gate(params.w_if, params.b_if, params.w_hf, params.b_hf, a, h_prev, sigmoid)
    g = _gate(params.w_ig, params.b_ig, params.w_hg, params.b_hg, a, h_prev, tanh)
    o = _gate(params.w_io, params.b_io, params.w_ho, params.b_ho, a, h_prev, sigmoid)
    c = add(mul(f, c_prev), mul(i, g))
    h = mul(o, tanh(c))
    return h, c


def mse_loss(pred, target) -> Tensor:
    """Mean of squared elementwise differences."""
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.data.shape != target.data.shape:
        raise ShapeError(f"mse_loss shapes differ: {pred.shape} vs {target.shape}")
    d = sub(pred, target)
    return tmean(mul(d, d))


_BCE_EPS = 1e-12


def bce_loss(p, label: int) -> Tensor:
    """Binary cross-entropy of a probability against a 0/1 label."""
    p = _as_tensor(p)
    if p.data.size != 1:
        raise ShapeError(f"bce_loss expects a scalar probability, got shape {p.shape}")
    value = float(p.data.reshape(()))
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"probability {value} outside [0, 1]")
    if label not in (0, 1):
        raise ContractError(f"label must be 0 or 1, got {label!r}")
    pc = clamp(p, _BCE_EPS, 1.0 - _BCE_EPS)
    if label == 1:
        return tmean(neg(log(pc)))
    return tmean(neg(log(sub(1.0, pc))))
