"""Multi-label evaluation: macro/micro AUC-ROC, macro/micro F1 and
precision-at-k.

AUC uses the midrank statistic (ties get average ranks), so uninformative
constant scores give exactly 0.5.  Macro averages skip codes lacking a
positive or a negative in the split and report them as excluded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


@dataclass
class MetricsReport:
    macro_auc: float
    micro_auc: float
    macro_f1: float
    micro_f1: float
    p_at_k: dict
    n_docs: int
    n_codes: int
    excluded_codes: list = field(default_factory=list)

    def to_json(self):
        payload = {
            "macro_auc": self.macro_auc,
            "micro_auc": self.micro_auc,
            "macro_f1": self.macro_f1,
            "micro_f1": self.micro_f1,
            "p_at_k": {str(k): v for k, v in self.p_at_k.items()},
            "n_docs": self.n_docs,
            "n_codes": self.n_codes,
            "excluded_codes": self.excluded_codes,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _midranks(x):
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0   # average of 1-based ranks
        i = j + 1
    return ranks


def _binary_auc(scores, truth):
    n_pos = int(truth.sum())
    n_neg = len(truth) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _midranks(scores)
    return (ranks[truth == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auc_roc(scores, truth):
    """(macro, micro, excluded code indices) over a docs x codes matrix."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    if not np.isfinite(scores).all():
        raise InputError("auc_roc: scores must be finite")
    per_code = []
    excluded = []
    for c in range(scores.shape[1]):
        auc = _binary_auc(scores[:, c], truth[:, c])
        if auc is None:
            excluded.append(c)
        else:
            per_code.append(auc)
    if not per_code:
        raise InputError("auc_roc: no code has both a positive and a negative")
    micro = _binary_auc(scores.reshape(-1), truth.reshape(-1))
    if micro is None:
        raise InputError("auc_roc: flattened labels are single-class")
    return float(np.mean(per_code)), float(micro), excluded


def f1_scores(scores, truth, threshold=0.5):
    """(macro, micro) F1 at a probability threshold; 0/0 counts as 0."""
    scores = np.asarray(scores)
    truth = np.asarray(truth).astype(bool)
    pred = scores >= threshold
    tp = (pred & truth).sum(axis=0).astype(np.float64)
    fp = (pred & ~truth).sum(axis=0).astype(np.float64)
    fn = (~pred & truth).sum(axis=0).astype(np.float64)
    denom = 2 * tp + fp + fn
    per_code = np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1.0), 0.0)
    macro = float(per_code.mean())
    pooled = 2 * tp.sum() + fp.sum() + fn.sum()
    micro = float(2 * tp.sum() / pooled) if pooled > 0 else 0.0
    return macro, micro


def precision_at_k(scores, truth, k):
    """Mean, over documents, of the fraction of the k top-scored codes
    present in the truth set; ties break toward the lower code index."""
    scores = np.asarray(scores)
    truth = np.asarray(truth)
    n_codes = scores.shape[1]
    if k > n_codes:
        raise InputError(f"precision_at_k: k={k} exceeds {n_codes} codes")
    # stable argsort of -scores: equal scores keep ascending code order
    top = np.argsort(-scores, axis=1, kind="stable")[:, :k]
    hits = np.take_along_axis(truth, top, axis=1).sum(axis=1)
    return float(hits.mean() / k)


def evaluate_scores(scores, truth, ks=(5, 8, 15), threshold=0.5):
    """Full MetricsReport for one branch on one split."""
    scores = np.asarray(scores)
    truth = np.asarray(truth)
    macro_auc, micro_auc, excluded = auc_roc(scores, truth)
    macro_f1, micro_f1 = f1_scores(scores, truth, threshold)
    p_at_k = {k: precision_at_k(scores, truth, k) for k in ks if k <= scores.shape[1]}
    return MetricsReport(macro_auc=macro_auc, micro_auc=micro_auc,
                         macro_f1=macro_f1, micro_f1=micro_f1, p_at_k=p_at_k,
                         n_docs=scores.shape[0], n_codes=scores.shape[1],
                         excluded_codes=excluded)
