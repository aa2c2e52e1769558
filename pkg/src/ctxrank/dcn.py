"""Deep cross network with manual forward and backward passes.

The network maps a feature vector x0 through L cross layers

    x_{l+1} = x0 * (W_l x_l + b_l) + x_l        (elementwise product)

which preserve the input dimension, then through dense hidden layers with an
elementwise activation, and finally through a linear head to a scalar score.
All passes operate on row-major batches; the single-vector entry points wrap
a batch of one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "identity")


@dataclass
class DcnParams:
    input_dim: int
    cross_w: list[np.ndarray]  # L matrices, each (p, p)
    cross_b: list[np.ndarray]  # L vectors, each (p,)
    hidden_w: list[np.ndarray]  # (width_i, prev_width)
    hidden_b: list[np.ndarray]  # (width_i,)
    head_w: np.ndarray  # (last_width,)
    head_b: float
    activation: str = "relu"

    @property
    def n_cross(self) -> int:
        return len(self.cross_w)

    @property
    def hidden_widths(self) -> list[int]:
        return [w.shape[0] for w in self.hidden_w]

    def as_list(self) -> list[np.ndarray]:
        """Flat parameter list in a fixed order (head bias as a 1-vector)."""
        out: list[np.ndarray] = []
        for w, b in zip(self.cross_w, self.cross_b):
            out.extend([w, b])
        for w, b in zip(self.hidden_w, self.hidden_b):
            out.extend([w, b])
        out.append(self.head_w)
        out.append(np.array([self.head_b]))
        return out

    @classmethod
    def from_list(cls, template: "DcnParams", arrays: list[np.ndarray]) -> "DcnParams":
        it = iter(arrays)
        cross_w, cross_b = [], []
        for _ in template.cross_w:
            cross_w.append(next(it))
            cross_b.append(next(it))
        hidden_w, hidden_b = [], []
        for _ in template.hidden_w:
            hidden_w.append(next(it))
            hidden_b.append(next(it))
        head_w = next(it)
        head_b = float(next(it)[0])
        return cls(
            input_dim=template.input_dim,
            cross_w=cross_w,
            cross_b=cross_b,
            hidden_w=hidden_w,
            hidden_b=hidden_b,
            head_w=head_w,
            head_b=head_b,
            activation=template.activation,
        )


@dataclass
class ForwardCache:
    """Intermediates from one forward pass, shaped (batch, dim)."""

    x0: np.ndarray
    cross_affine: list[np.ndarray]  # u_l = x_l W_l^T + b_l per cross layer
    cross_out: list[np.ndarray]  # x_1 .. x_L
    hidden_pre: list[np.ndarray]
    hidden_act: list[np.ndarray]  # inputs to each hidden layer's successor


def init(input_dim: int, n_cross: int, hidden_widths: list[int], seed: int, activation: str = "relu") -> DcnParams:
    """Seeded uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] weights, zero biases."""
    if input_dim <= 0:
        raise ValueError(f"input_dim must be positive, got {input_dim}")
    if any(w <= 0 for w in hidden_widths):
        raise ValueError(f"zero-dim hidden layer in {hidden_widths}")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    cross_w = [uniform((input_dim, input_dim), input_dim) for _ in range(n_cross)]
    cross_b = [np.zeros(input_dim) for _ in range(n_cross)]
    hidden_w, hidden_b = [], []
    prev = input_dim
    for width in hidden_widths:
        hidden_w.append(uniform((width, prev), prev))
        hidden_b.append(np.zeros(width))
        prev = width
    head_w = uniform((prev,), prev)
    return DcnParams(
        input_dim=input_dim,
        cross_w=cross_w,
        cross_b=cross_b,
        hidden_w=hidden_w,
        hidden_b=hidden_b,
        head_w=head_w,
        head_b=0.0,
        activation=activation,
    )


def _activate(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(pre, 0.0)
    return pre


def forward_batch(params: DcnParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Score a (batch, input_dim) matrix; returns (batch,) scores and the cache."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise ValueError(f"expected shape (batch, {params.input_dim}), got {x.shape}")
    x0 = x
    cross_affine: list[np.ndarray] = []
    cross_out: list[np.ndarray] = []
    cur = x0
    for w, b in zip(params.cross_w, params.cross_b):
        u = cur @ w.T + b
        cur = x0 * u + cur
        cross_affine.append(u)
        cross_out.append(cur)
    hidden_pre: list[np.ndarray] = []
    hidden_act: list[np.ndarray] = [cur]
    h = cur
    for w, b in zip(params.hidden_w, params.hidden_b):
        pre = h @ w.T + b
        h = _activate(pre, params.activation)
        hidden_pre.append(pre)
        hidden_act.append(h)
    scores = h @ params.head_w + params.head_b
    cache = ForwardCache(
        x0=x0,
        cross_affine=cross_affine,
        cross_out=cross_out,
        hidden_pre=hidden_pre,
        hidden_act=hidden_act,
    )
    return scores, cache


def forward(params: DcnParams, x: np.ndarray) -> tuple[float, ForwardCache]:
    """Score one feature vector."""
    scores, cache = forward_batch(params, np.asarray(x, dtype=np.float64)[None, :])
    return float(scores[0]), cache


@dataclass
class DcnGrads:
    cross_w: list[np.ndarray]
    cross_b: list[np.ndarray]
    hidden_w: list[np.ndarray]
    hidden_b: list[np.ndarray]
    head_w: np.ndarray
    head_b: float
    d_input: np.ndarray

    def as_list(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.cross_w, self.cross_b):
            out.extend([w, b])
        for w, b in zip(self.hidden_w, self.hidden_b):
            out.extend([w, b])
        out.append(self.head_w)
        out.append(np.array([self.head_b]))
        return out


def backward_batch(params: DcnParams, cache: ForwardCache, dscores: np.ndarray) -> DcnGrads:
    """Exact gradients of sum(dscores * scores) w.r.t. every parameter.

    The ReLU subgradient at exactly zero is taken as zero. ``d_input``
    holds the gradient w.r.t. the input rows.
    """
    dscores = np.asarray(dscores, dtype=np.float64)
    if dscores.shape != (cache.x0.shape[0],):
        raise ValueError(f"dscores shape {dscores.shape} does not match batch {cache.x0.shape[0]}")

    # head
    last_act = cache.hidden_act[-1]
    d_head_w = dscores @ last_act
    d_head_b = float(dscores.sum())
    dh = np.outer(dscores, params.head_w)

    # hidden layers, reversed
    d_hidden_w = [np.empty(0)] * len(params.hidden_w)
    d_hidden_b = [np.empty(0)] * len(params.hidden_b)
    for i in reversed(range(len(params.hidden_w))):
        if params.activation == "relu":
            dpre = dh * (cache.hidden_pre[i] > 0.0)
        else:
            dpre = dh
        d_hidden_w[i] = dpre.T @ cache.hidden_act[i]
        d_hidden_b[i] = dpre.sum(axis=0)
        dh = dpre @ params.hidden_w[i]

    # cross layers, reversed; dh now carries dL/dx_L
    x0 = cache.x0
    d_cross_w = [np.empty(0)] * len(params.cross_w)
    d_cross_b = [np.empty(0)] * len(params.cross_b)
    dx0_acc = np.zeros_like(x0)
    g = dh
    for l in reversed(range(len(params.cross_w))):
        x_in = cache.cross_out[l - 1] if l > 0 else x0
        du = g * x0
        d_cross_w[l] = du.T @ x_in
        d_cross_b[l] = du.sum(axis=0)
        dx0_acc += g * cache.cross_affine[l]
        g = du @ params.cross_w[l] + g
    d_input = g + dx0_acc

    return DcnGrads(
        cross_w=d_cross_w,
        cross_b=d_cross_b,
        hidden_w=d_hidden_w,
        hidden_b=d_hidden_b,
        head_w=d_head_w,
        head_b=d_head_b,
        d_input=d_input,
    )


def backward(params: DcnParams, cache: ForwardCache, upstream_dscore: float) -> DcnGrads:
    """Gradients for a single-sample cache."""
    if cache.x0.shape[0] != 1:
        raise ValueError("backward expects a single-sample cache; use backward_batch")
    grads = backward_batch(params, cache, np.array([upstream_dscore]))
    grads.d_input = grads.d_input[0]
    return grads


def zero_grads_like(params: DcnParams) -> DcnGrads:
    return DcnGrads(
        cross_w=[np.zeros_like(w) for w in params.cross_w],
        cross_b=[np.zeros_like(b) for b in params.cross_b],
        hidden_w=[np.zeros_like(w) for w in params.hidden_w],
        hidden_b=[np.zeros_like(b) for b in params.hidden_b],
        head_w=np.zeros_like(params.head_w),
        head_b=0.0,
        d_input=np.zeros((1, params.input_dim)),
    )
