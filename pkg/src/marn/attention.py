"""Label-aware attention heads and per-code scoring.

One head per coding branch.  For features O (n, 2*d_r) and a head with
d_m codes:

    A = masked_softmax(O Q)        # (n, d_m), one distribution per code
    V = A^T O                      # (d_m, 2*d_r) code-attentive features
    s_m = sum_h W[m, h] V[m, h] + b[m]
    prob = sigmoid(s)

The per-code score is the row-wise dot product of the classifier weights
with the attended features (the printed matrix form is kept as the
element-wise product followed by a sum pool over the hidden axis, which
is what matches the stated score-vector shape).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, masked_softmax, matmul, mul, sigmoid, tensor_sum, transpose


@dataclass
class AttentionHead:
    q: Tensor   # (2*d_r, d_m) attention queries
    w: Tensor   # (d_m, 2*d_r) per-code classifier weights
    b: Tensor   # (d_m,) per-code bias

    @property
    def d_m(self):
        return self.q.shape[1]

    def named(self, prefix):
        return {f"{prefix}.q": self.q, f"{prefix}.w": self.w, f"{prefix}.b": self.b}


def init_head(rng, d_hidden, d_m, dtype=np.float32):
    bound = 1.0 / np.sqrt(d_hidden)
    return AttentionHead(
        q=Tensor(rng.uniform(-bound, bound, size=(d_hidden, d_m)).astype(dtype), requires_grad=True),
        w=Tensor(rng.uniform(-bound, bound, size=(d_m, d_hidden)).astype(dtype), requires_grad=True),
        b=Tensor(np.zeros(d_m, dtype=dtype), requires_grad=True),
    )


def attention_scores(o, head, mask=None):
    """Per-code attention over positions; masked positions get zero weight."""
    return masked_softmax(matmul(o, head.q), mask)


def attend(o, a):
    """Code-attentive features V = A^T O, shape (..., d_m, 2*d_r)."""
    axes = None if a.ndim == 2 else (0, 2, 1)
    return matmul(transpose(a, axes), o)


def score_and_activate(v, head):
    """Per-code probabilities in (0, 1) from attended features."""
    scores = tensor_sum(mul(v, head.w), axis=-1) + head.b
    return sigmoid(scores)


def head_forward(o, head, mask=None):
    a = attention_scores(o, head, mask)
    return score_and_activate(attend(o, a), head)
