"""Recalibrated aggregation module.

A three-stage convolutional pyramid over the encoder features: two
down-sample blocks halve the channel count twice (feature abstraction), a
lateral block keeps it (feature smoothing), and two up-sample blocks
restore it (feature aggregation), with a skip addition at the middle
width and a final element-wise gate against the input:

    d1 = down(h); d2 = down(d1); l1 = lateral(d2)
    u1 = up(l1) + d1
    out = dropout(tanh(up(u1) * h))

Every block is conv(+norm) -> tanh -> conv(+norm) with width-3 kernels;
the first conv of a down block halves channels, of an up block doubles
them (transposed convolution), all second convs preserve them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    NormState,
    Tensor,
    batch_norm1d,
    conv1d,
    dropout,
    mul,
    reshape,
    tanh,
    transposed_conv1d,
)
from .errors import ConfigError


@dataclass
class BlockParams:
    """Two width-3 convolutions with their norm layers; ``kind`` selects
    whether the first conv halves, keeps or doubles the channel count."""

    kind: str                  # "down" | "lateral" | "up"
    kernel1: Tensor
    bias1: Tensor
    norm1: NormState
    kernel2: Tensor
    bias2: Tensor
    norm2: NormState

    def named(self, prefix):
        return {
            f"{prefix}.kernel1": self.kernel1,
            f"{prefix}.bias1": self.bias1,
            f"{prefix}.norm1.gamma": self.norm1.gamma,
            f"{prefix}.norm1.beta": self.norm1.beta,
            f"{prefix}.kernel2": self.kernel2,
            f"{prefix}.bias2": self.bias2,
            f"{prefix}.norm2.gamma": self.norm2.gamma,
            f"{prefix}.norm2.beta": self.norm2.beta,
        }

    def norm_states(self, prefix):
        return {f"{prefix}.norm1": self.norm1, f"{prefix}.norm2": self.norm2}


@dataclass
class RamParams:
    down1: BlockParams
    down2: BlockParams
    lateral: BlockParams
    up1: BlockParams
    up2: BlockParams
    dropout_rate: float = 0.2

    def blocks(self):
        return {"ram.down1": self.down1, "ram.down2": self.down2, "ram.lateral": self.lateral,
                "ram.up1": self.up1, "ram.up2": self.up2}

    def named(self):
        out = {}
        for prefix, block in self.blocks().items():
            out.update(block.named(prefix))
        return out

    def norm_states(self):
        out = {}
        for prefix, block in self.blocks().items():
            out.update(block.norm_states(prefix))
        return out


def _conv_tensor(rng, c_out, c_in, dtype):
    bound = 1.0 / np.sqrt(3 * c_in)
    return Tensor(rng.uniform(-bound, bound, size=(c_out, c_in, 3)).astype(dtype),
                  requires_grad=True)


def _tconv_tensor(rng, c_in, c_out, dtype):
    bound = 1.0 / np.sqrt(3 * c_in)
    return Tensor(rng.uniform(-bound, bound, size=(c_in, c_out, 3)).astype(dtype),
                  requires_grad=True)


def _bias(c, dtype):
    return Tensor(np.zeros(c, dtype=dtype), requires_grad=True)


def init_block(rng, kind, c_in, dtype=np.float32):
    if kind == "down":
        if c_in % 2:
            raise ConfigError(f"down block needs an even channel count, got {c_in}")
        c_mid = c_in // 2
        k1 = _conv_tensor(rng, c_mid, c_in, dtype)
    elif kind == "lateral":
        c_mid = c_in
        k1 = _conv_tensor(rng, c_mid, c_in, dtype)
    elif kind == "up":
        c_mid = 2 * c_in
        k1 = _tconv_tensor(rng, c_in, c_mid, dtype)
    else:
        raise ConfigError(f"unknown block kind {kind!r}")
    return BlockParams(kind=kind,
                       kernel1=k1, bias1=_bias(c_mid, dtype), norm1=NormState(c_mid, dtype=dtype),
                       kernel2=_conv_tensor(rng, c_mid, c_mid, dtype), bias2=_bias(c_mid, dtype),
                       norm2=NormState(c_mid, dtype=dtype))


def init_ram(rng, d_r, dropout_rate=0.2, dtype=np.float32):
    """Channel plan 2*d_r -> d_r -> d_r/2 -> d_r/2 -> d_r -> 2*d_r."""
    if d_r % 2:
        raise ConfigError(f"the aggregation module needs d_r divisible by 2, got {d_r}")
    return RamParams(
        down1=init_block(rng, "down", 2 * d_r, dtype),
        down2=init_block(rng, "down", d_r, dtype),
        lateral=init_block(rng, "lateral", d_r // 2, dtype),
        up1=init_block(rng, "up", d_r // 2, dtype),
        up2=init_block(rng, "up", d_r, dtype),
        dropout_rate=dropout_rate,
    )


def _as3d(x):
    if x.ndim == 2:
        return reshape(x, (1,) + x.shape), True
    return x, False


def block_forward(x, p, training, mask=None):
    """conv(+norm) -> tanh -> conv(+norm) for one block."""
    x3, squeeze = _as3d(x)
    if p.kind == "down" and x3.shape[2] % 2:
        raise ConfigError(f"down block input must have even channels, got {x3.shape[2]}")
    first = transposed_conv1d if p.kind == "up" else conv1d
    h = first(x3, p.kernel1, p.bias1)
    h = batch_norm1d(h, p.norm1, training, mask)
    h = tanh(h)
    h = conv1d(h, p.kernel2, p.bias2)
    h = batch_norm1d(h, p.norm2, training, mask)
    return reshape(h, h.shape[1:]) if squeeze else h


def down_block(x, p, training=False, mask=None):
    return block_forward(x, p, training, mask)


def lateral_block(x, p, training=False, mask=None):
    return block_forward(x, p, training, mask)


def up_block(x, p, training=False, mask=None):
    return block_forward(x, p, training, mask)


def ram_forward(h, params, training=False, seed=0, mask=None):
    """Recalibrated features, same shape as the (..., n, 2*d_r) input."""
    d1 = block_forward(h, params.down1, training, mask)
    d2 = block_forward(d1, params.down2, training, mask)
    l1 = block_forward(d2, params.lateral, training, mask)
    u1 = block_forward(l1, params.up1, training, mask) + d1
    out = tanh(mul(block_forward(u1, params.up2, training, mask), h))
    return dropout(out, params.dropout_rate, training, seed=seed)
