"""A small U-shaped encoder-decoder CNN with exact reverse-mode gradients.

All tensors are float64 with layout ``(batch, channels, rows, cols)``.

Layer order (the serialization order of :class:`CnnWeights`)::

    enc0 .. enc{n-1}                 3x3 conv + ReLU, 2x2 average pool before levels >= 1
    up{n-2}, merge{n-2} .. up0, merge0
                                     nearest upsample, conv + ReLU, concat skip, conv + ReLU
    head                             3x3 conv, linear

Convolutions use reflection padding so every layer preserves size.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from ..validation import check_positive_int


@dataclass(frozen=True)
class CnnArchitecture:
    """U-Net shape.

    ``residual=True`` adds the input to the head output, so the layers
    learn the correction rather than the clean image.
    """

    num_levels: int = 2
    base_filters: int = 16
    kernel_size: int = 3
    skip_connections: bool = True
    in_channels: int = 2
    out_channels: int = 2
    residual: bool = False

    def __post_init__(self):
        check_positive_int(self.num_levels, "num_levels")
        if self.residual and self.in_channels != self.out_channels:
            raise ValueError("a residual network needs in_channels == out_channels")
        check_positive_int(self.base_filters, "base_filters")
        check_positive_int(self.kernel_size, "kernel_size")
        if self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd, got {self.kernel_size}")

    def filters(self, level):
        return self.base_filters * 2**level

    def layers(self):
        """``(name, in_channels, out_channels)`` in declaration order."""
        specs = []
        for level in range(self.num_levels):
            cin = self.in_channels if level == 0 else self.filters(level - 1)
            specs.append((f"enc{level}", cin, self.filters(level)))
        for level in range(self.num_levels - 2, -1, -1):
            f = self.filters(level)
            specs.append((f"up{level}", self.filters(level + 1), f))
            specs.append((f"merge{level}", 2 * f if self.skip_connections else f, f))
        specs.append(("head", self.filters(0), self.out_channels))
        return specs

    def param_shapes(self):
        k = self.kernel_size
        shapes = []
        for _, cin, cout in self.layers():
            shapes += [(cout, cin, k, k), (cout,)]
        return shapes

    @property
    def multiple(self):
        """Spatial sizes must be divisible by this (inputs are padded otherwise)."""
        return 2 ** (self.num_levels - 1)

    def to_header(self):
        return {
            "num_levels": self.num_levels,
            "base_filters": self.base_filters,
            "kernel_size": self.kernel_size,
            "skip_connections": int(self.skip_connections),
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "residual": int(self.residual),
        }


class CnnWeights:
    """Kernel/bias arrays in declaration order: ``[k_enc0, b_enc0, ...]``."""

    def __init__(self, arch, params):
        shapes = arch.param_shapes()
        if len(params) != len(shapes):
            raise ValueError(f"expected {len(shapes)} parameter arrays, got {len(params)}")
        for p, shape in zip(params, shapes):
            if np.shape(p) != shape:
                raise ValueError(f"parameter shape {np.shape(p)} does not match architecture {shape}")
        self.arch = arch
        self.params = [np.array(p, dtype=np.float64) for p in params]

    @classmethod
    def zeros(cls, arch):
        return cls(arch, [np.zeros(s) for s in arch.param_shapes()])

    @classmethod
    def initialize(cls, arch, rng):
        """He-normal kernels (unit-gain for the linear head), zero biases.

        A residual network starts with a zero head, i.e. as the identity map.
        """
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        params = []
        names = [name for name, _, _ in arch.layers()]
        for name, shape in zip(np.repeat(names, 2), arch.param_shapes()):
            if len(shape) == 1 or (name == "head" and arch.residual):
                params.append(np.zeros(shape))
                continue
            fan_in = shape[1] * shape[2] * shape[3]
            gain = 1.0 if name == "head" else 2.0
            params.append(rng.standard_normal(shape) * np.sqrt(gain / fan_in))
        return cls(arch, params)

    def copy(self):
        return CnnWeights(self.arch, [p.copy() for p in self.params])

    def num_parameters(self):
        return sum(p.size for p in self.params)

    def checksum(self):
        h = hashlib.sha256()
        for p in self.params:
            h.update(np.ascontiguousarray(p, dtype="<f8").tobytes())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, CnnWeights) or other.arch != self.arch:
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.params, other.params))


# -- primitive layers --------------------------------------------------------


def reflect_pad(x, pads):
    """Reflection-pad the last two axes by ``(top, bottom, left, right)``."""
    top, bottom, left, right = pads
    return np.pad(x, ((0, 0), (0, 0), (top, bottom), (left, right)), mode="reflect")


def reflect_pad_adjoint(g, pads):
    """Adjoint of :func:`reflect_pad` (pad widths smaller than the axis length)."""
    top, bottom, left, right = pads
    n = g.shape[2] - top - bottom
    m = g.shape[3] - left - right
    gr = g[:, :, top : top + n, :].copy()
    for i in range(top):
        gr[:, :, top - i, :] += g[:, :, i, :]
    for j in range(bottom):
        gr[:, :, n - 2 - j, :] += g[:, :, top + n + j, :]
    gx = gr[:, :, :, left : left + m].copy()
    for i in range(left):
        gx[:, :, :, left - i] += gr[:, :, :, i]
    for j in range(right):
        gx[:, :, :, m - 2 - j] += gr[:, :, :, left + m + j]
    return gx


def conv2d(x, kernel, bias):
    """Size-preserving cross-correlation with reflection padding."""
    k = kernel.shape[-1]
    p = k // 2
    xp = reflect_pad(x, (p, p, p, p))
    b, _, h, w = x.shape
    out = np.zeros((kernel.shape[0], b, h, w))
    for i in range(k):
        for j in range(k):
            out += np.tensordot(kernel[:, :, i, j], xp[:, :, i : i + h, j : j + w], axes=([1], [1]))
    out += bias[:, None, None, None]
    return out.transpose(1, 0, 2, 3)


def conv2d_backward(dy, x, kernel):
    """Gradients of :func:`conv2d` w.r.t. input, kernel and bias."""
    k = kernel.shape[-1]
    p = k // 2
    xp = reflect_pad(x, (p, p, p, p))
    b, c, h, w = x.shape
    dkernel = np.empty_like(kernel)
    dxp = np.zeros((c, b, h + 2 * p, w + 2 * p))
    for i in range(k):
        for j in range(k):
            window = xp[:, :, i : i + h, j : j + w]
            dkernel[:, :, i, j] = np.tensordot(dy, window, axes=([0, 2, 3], [0, 2, 3]))
            dxp[:, :, i : i + h, j : j + w] += np.tensordot(kernel[:, :, i, j], dy, axes=([0], [1]))
    dx = reflect_pad_adjoint(dxp.transpose(1, 0, 2, 3), (p, p, p, p))
    return dx, dkernel, dy.sum(axis=(0, 2, 3))


def relu(x):
    return np.maximum(x, 0.0)


def avg_pool2(x):
    b, c, h, w = x.shape
    return x.reshape(b, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))


def avg_pool2_backward(dy):
    return np.repeat(np.repeat(dy, 2, axis=2), 2, axis=3) * 0.25


def upsample2(x):
    return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)


def upsample2_backward(dy):
    b, c, h, w = dy.shape
    return dy.reshape(b, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


# -- network ----------------------------------------------------------------


def _check(weights, arch, x):
    if weights.arch != arch:
        raise ValueError("weights were built for a different architecture")
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 3
    if squeeze:
        x = x[None]
    if x.ndim != 4 or x.shape[1] != arch.in_channels:
        raise ValueError(
            f"input must have shape (n, {arch.in_channels}, rows, cols), got {x.shape}"
        )
    return x, squeeze


def _size_pads(shape, multiple):
    h, w = shape[-2:]
    return (0, (-h) % multiple, 0, (-w) % multiple)


def _forward(weights, arch, x):
    """Forward pass keeping every intermediate needed by the backward pass."""
    params = iter(weights.params)
    cache = {"input": x}
    h = x
    skips = []
    for level in range(arch.num_levels):
        if level > 0:
            h = avg_pool2(h)
        cache[f"enc{level}_in"] = h
        h = relu(conv2d(h, next(params), next(params)))
        cache[f"enc{level}_out"] = h
        skips.append(h)
    for level in range(arch.num_levels - 2, -1, -1):
        h = upsample2(h)
        cache[f"up{level}_in"] = h
        h = relu(conv2d(h, next(params), next(params)))
        cache[f"up{level}_out"] = h
        if arch.skip_connections:
            h = np.concatenate([h, skips[level]], axis=1)
        cache[f"merge{level}_in"] = h
        h = relu(conv2d(h, next(params), next(params)))
        cache[f"merge{level}_out"] = h
    cache["head_in"] = h
    out = conv2d(h, next(params), next(params))
    if arch.residual:
        out = out + x
    return out, cache


def cnn_forward(weights, arch, t):
    """Apply the network to ``(2, r, c)`` or ``(n, 2, r, c)`` input.

    Sizes not divisible by ``2**(num_levels - 1)`` are reflection-padded at
    the bottom/right and cropped back afterwards.
    """
    x, squeeze = _check(weights, arch, t)
    pads = _size_pads(x.shape, arch.multiple)
    if any(pads):
        x = reflect_pad(x, pads)
    out, _ = _forward(weights, arch, x)
    out = out[:, :, : out.shape[2] - pads[1], : out.shape[3] - pads[3]]
    return out[0] if squeeze else out


def cnn_backward(weights, arch, t, upstream):
    """Reverse-mode gradients of ``cnn_forward`` given ``dL/d(output)``.

    Returns
    -------
    grads : list of ndarray
        Gradients aligned with ``weights.params``.
    dinput : ndarray
        Gradient with respect to the input tensor.
    """
    x, squeeze = _check(weights, arch, t)
    upstream = np.asarray(upstream, dtype=np.float64)
    if squeeze:
        upstream = upstream[None]
    if upstream.shape[:2] != (x.shape[0], arch.out_channels) or upstream.shape[2:] != x.shape[2:]:
        raise ValueError(f"upstream gradient shape {upstream.shape} does not match output")
    pads = _size_pads(x.shape, arch.multiple)
    if any(pads):
        x = reflect_pad(x, pads)
        upstream = np.pad(upstream, ((0, 0), (0, 0), (0, pads[1]), (0, pads[3])))
    _, cache = _forward(weights, arch, x)
    grads, dh = _backward(weights, arch, cache, upstream)
    if any(pads):
        dh = reflect_pad_adjoint(dh, pads)
    return grads, (dh[0] if squeeze else dh)


def _backward(weights, arch, cache, upstream):
    names = [name for name, _, _ in arch.layers()]
    kernels = dict(zip(names, weights.params[0::2]))
    grads = {}

    def conv_back(name, dy):
        dx, dk, db = conv2d_backward(dy, cache[f"{name}_in"], kernels[name])
        grads[name] = (dk, db)
        return dx

    dh = conv_back("head", upstream)
    skip_grads = {}
    for level in range(arch.num_levels - 1):
        dh = dh * (cache[f"merge{level}_out"] > 0)
        dh = conv_back(f"merge{level}", dh)
        if arch.skip_connections:
            f = arch.filters(level)
            skip_grads[level] = dh[:, f:]
            dh = dh[:, :f]
        dh = dh * (cache[f"up{level}_out"] > 0)
        dh = upsample2_backward(conv_back(f"up{level}", dh))
    for level in range(arch.num_levels - 1, -1, -1):
        if level in skip_grads:
            dh = dh + skip_grads[level]
        dh = dh * (cache[f"enc{level}_out"] > 0)
        dh = conv_back(f"enc{level}", dh)
        if level > 0:
            dh = avg_pool2_backward(dh)
    if arch.residual:
        dh = dh + upstream
    return [g for name in names for g in grads[name]], dh


def mse_loss(pred, target):
    """Mean squared difference over every channel and pixel."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {pred.shape} does not match target {target.shape}")
    return float(np.mean((pred - target) ** 2))


def mse_loss_gradient(pred, target):
    return 2.0 * (pred - target) / pred.size


def loss_and_gradients(weights, arch, noisy, clean):
    """MSE of the network output and its gradient w.r.t. every parameter.

    Inputs must already have sizes divisible by ``arch.multiple``.
    """
    x, _ = _check(weights, arch, noisy)
    clean = np.asarray(clean, dtype=np.float64).reshape(x.shape[0], arch.out_channels, *x.shape[2:])
    if any(_size_pads(x.shape, arch.multiple)):
        raise ValueError(f"training tiles must be multiples of {arch.multiple}, got {x.shape[2:]}")
    pred, cache = _forward(weights, arch, x)
    grads, _ = _backward(weights, arch, cache, mse_loss_gradient(pred, clean))
    return mse_loss(pred, clean), grads
