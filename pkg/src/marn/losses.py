"""Focal loss, binary cross-entropy and the weighted multitask joint loss.

The focal loss over one branch's probabilities sums, across its d_m
codes,

    -y * alpha * (1 - p)^gamma * log(p)
    - (1 - y) * (1 - alpha) * p^gamma * log(1 - p)

so gamma > 0 down-weights confident predictions and alpha near 1 puts
almost all weight on present codes.  For batched inputs both losses
average the per-document sums, keeping scale independent of batch size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, clamp, log, power, tensor_sum
from .errors import ConfigError, InputError

PROB_CLAMP = 1e-7


@dataclass
class LossConfig:
    alpha: float = 0.999
    gamma: float = 2.0
    lambda_d: float = 0.7
    lambda_s: float = 0.3
    prob_clamp: float = PROB_CLAMP

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.lambda_d < 0 or self.lambda_s < 0:
            raise ConfigError("branch loss weights must be non-negative")


def _check_targets(targets):
    t = np.asarray(targets)
    if not np.isin(t, (0, 1)).all():
        raise InputError("targets must be binary")
    return t


def _reduce(per_doc):
    # per_doc: (d_m,) sums to a scalar, (batch, d_m) to a batch mean
    total = tensor_sum(per_doc, axis=-1)
    return total if total.ndim == 0 else total.mean()


def focal_loss(probs, targets, cfg):
    """Focal loss of one branch; ``probs`` (d_m,) or (batch, d_m)."""
    t = Tensor(_check_targets(targets).astype(probs.dtype))
    p = clamp(probs, cfg.prob_clamp, 1.0 - cfg.prob_clamp)
    pos = t * power(1.0 - p, cfg.gamma) * log(p) * (-cfg.alpha)
    neg = (1.0 - t) * power(p, cfg.gamma) * log(1.0 - p) * (-(1.0 - cfg.alpha))
    return _reduce(pos + neg)


def bce_loss(probs, targets, prob_clamp=PROB_CLAMP):
    """Plain summed binary cross-entropy with the same reduction rules."""
    t = Tensor(_check_targets(targets).astype(probs.dtype))
    p = clamp(probs, prob_clamp, 1.0 - prob_clamp)
    per_code = -(t * log(p) + (1.0 - t) * log(1.0 - p))
    return _reduce(per_code)


def joint_loss(fl_icd, fl_ccs, cfg):
    """Weighted multitask combination lambda_d * icd + lambda_s * ccs."""
    return fl_icd * cfg.lambda_d + fl_ccs * cfg.lambda_s
