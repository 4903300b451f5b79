"""Embedding lookup and bidirectional GRU encoder.

The per-token hidden matrix is the horizontal concatenation of a forward
and a backward GRU pass, shape (n, 2*d_r).  Gate equations:

    z = sigmoid(x W_z + h U_z + b_z)
    r = sigmoid(x W_r + h U_r + b_r)
    c = tanh(x W_h + (r * h) U_h + b_h)
    h' = (1 - z) * h + z * c

Padded positions carry the previous hidden state forward unchanged and
contribute zero rows to the output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, concat, embedding_lookup, mul, reshape, sigmoid, stack, tanh


@dataclass
class GruGateParams:
    w_z: Tensor
    u_z: Tensor
    b_z: Tensor
    w_r: Tensor
    u_r: Tensor
    b_r: Tensor
    w_h: Tensor
    u_h: Tensor
    b_h: Tensor

    def named(self, prefix):
        return {f"{prefix}.{f}": getattr(self, f) for f in
                ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h")}


@dataclass
class EncoderParams:
    embedding: Tensor          # |V| x d_e, row 0 reserved for padding
    fwd: GruGateParams
    bwd: GruGateParams

    @property
    def d_e(self):
        return self.embedding.shape[1]

    @property
    def d_r(self):
        return self.fwd.u_z.shape[0]

    def named(self):
        out = {"encoder.embedding": self.embedding}
        out.update(self.fwd.named("encoder.fwd"))
        out.update(self.bwd.named("encoder.bwd"))
        return out


def _init_gates(rng, d_e, d_r, dtype):
    bi = 1.0 / np.sqrt(d_e)
    br = 1.0 / np.sqrt(d_r)

    def w():
        return Tensor(rng.uniform(-bi, bi, size=(d_e, d_r)).astype(dtype), requires_grad=True)

    def u():
        return Tensor(rng.uniform(-br, br, size=(d_r, d_r)).astype(dtype), requires_grad=True)

    def b():
        return Tensor(np.zeros(d_r, dtype=dtype), requires_grad=True)

    return GruGateParams(w_z=w(), u_z=u(), b_z=b(), w_r=w(), u_r=u(), b_r=b(),
                         w_h=w(), u_h=u(), b_h=b())


def init_encoder(rng, embedding_matrix, d_r, dtype=np.float32):
    emb = Tensor(np.asarray(embedding_matrix, dtype=dtype), requires_grad=True)
    d_e = emb.shape[1]
    return EncoderParams(embedding=emb,
                         fwd=_init_gates(rng, d_e, d_r, dtype),
                         bwd=_init_gates(rng, d_e, d_r, dtype))


def embed_sequence(tokens, params):
    """Token ids (n,) or (batch, n) to embedding rows; pad rows stay zero
    because embedding row 0 is zero and never receives gradient."""
    return embedding_lookup(params.embedding, np.asarray(tokens))


def _gru_step(x_t, h, g):
    z = sigmoid(x_t @ g.w_z + h @ g.u_z + g.b_z)
    r = sigmoid(x_t @ g.w_r + h @ g.u_r + g.b_r)
    c = tanh(x_t @ g.w_h + mul(r, h) @ g.u_h + g.b_h)
    return (1.0 - z) * h + z * c


def _run_direction(xs, gates, mask_cols, d_r, dtype, reverse):
    batch = xs[0].shape[0]
    h = Tensor(np.zeros((batch, d_r), dtype=dtype))
    order = range(len(xs) - 1, -1, -1) if reverse else range(len(xs))
    outputs = [None] * len(xs)
    for t in order:
        h_new = _gru_step(xs[t], h, gates)
        m = mask_cols[t]
        h = m * h_new + (1.0 - m) * h
        outputs[t] = m * h
    return outputs


def bigru_forward(x, params, mask=None):
    """Hidden matrix H for embedded input of shape (n, d_e) or (batch, n, d_e).

    ``mask`` (n,) or (batch, n) marks real tokens; output rows at padded
    positions are zero and the output shape is (..., n, 2*d_r).
    """
    squeeze = x.ndim == 2
    if squeeze:
        x = reshape(x, (1,) + x.shape)
    batch, n, _ = x.shape
    if mask is None:
        mask = np.ones((batch, n), dtype=bool)
    mask = np.asarray(mask, dtype=bool).reshape(batch, n)
    d_r = params.d_r
    dtype = x.dtype
    xs = [x[:, t, :] for t in range(n)]
    mask_cols = [Tensor(mask[:, t:t + 1].astype(dtype)) for t in range(n)]
    fwd = _run_direction(xs, params.fwd, mask_cols, d_r, dtype, reverse=False)
    bwd = _run_direction(xs, params.bwd, mask_cols, d_r, dtype, reverse=True)
    h = concat([stack(fwd, axis=1), stack(bwd, axis=1)], axis=2)
    return reshape(h, (n, 2 * d_r)) if squeeze else h
