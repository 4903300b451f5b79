"""The assembled two-branch coding model.

Token ids -> embedding -> BiGRU -> (recalibrated aggregation) -> one
label-attention head per branch -> per-code probabilities.  Ablation
flags: ``use_ram`` off routes the encoder output straight to the heads;
``use_mtl`` off skips the CCS branch entirely.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .attention import AttentionHead, head_forward, init_head
from .encoder import EncoderParams, bigru_forward, embed_sequence, init_encoder
from .errors import ConfigError
from .ram import RamParams, init_ram, ram_forward


@dataclass
class ModelConfig:
    vocab_size: int
    n_icd: int
    n_ccs: int
    d_e: int = 100
    d_r: int = 256
    dropout_rate: float = 0.2
    use_ram: bool = True
    use_mtl: bool = True

    def __post_init__(self):
        if self.d_r % 2:
            raise ConfigError(f"d_r must be even, got {self.d_r}")
        if min(self.vocab_size, self.n_icd, self.n_ccs, self.d_e, self.d_r) < 1:
            raise ConfigError("all model dimensions must be positive")

    def to_dict(self):
        return asdict(self)


class MarnModel:
    """Holds all trainable parameters and runs the forward pass."""

    def __init__(self, config, embedding_matrix=None, seed=0, dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        if embedding_matrix is None:
            bound = 0.25 / np.sqrt(config.d_e)
            embedding_matrix = rng.uniform(
                -bound, bound, size=(config.vocab_size, config.d_e))
            embedding_matrix[0] = 0.0
        embedding_matrix = np.asarray(embedding_matrix, dtype=dtype)
        if embedding_matrix.shape != (config.vocab_size, config.d_e):
            raise ConfigError(
                f"embedding shape {embedding_matrix.shape} does not match config "
                f"({config.vocab_size}, {config.d_e})")
        self.encoder = init_encoder(rng, embedding_matrix, config.d_r, dtype)
        self.ram = init_ram(rng, config.d_r, config.dropout_rate, dtype)
        self.icd_head = init_head(rng, 2 * config.d_r, config.n_icd, dtype)
        self.ccs_head = init_head(rng, 2 * config.d_r, config.n_ccs, dtype)

    # -- parameter bookkeeping ----------------------------------------

    def parameters(self):
        """Ordered name -> Tensor map over every trainable array."""
        out = {}
        out.update(self.encoder.named())
        out.update(self.ram.named())
        out.update(self.icd_head.named("icd_head"))
        out.update(self.ccs_head.named("ccs_head"))
        return out

    def norm_states(self):
        return self.ram.norm_states()

    def zero_grads(self):
        for t in self.parameters().values():
            t.zero_grad()

    def state_arrays(self):
        """Params plus norm running statistics, as named numpy arrays."""
        out = {name: t.data for name, t in self.parameters().items()}
        for name, st in self.norm_states().items():
            out[f"{name}.running_mean"] = st.running_mean
            out[f"{name}.running_var"] = st.running_var
        return out

    def load_state_arrays(self, arrays):
        """Copy named arrays into this model; shapes must match."""
        from .errors import CheckpointError

        targets = self.state_arrays()
        for name, arr in arrays.items():
            if name not in targets:
                raise CheckpointError(f"unknown field {name!r} in state")
            if targets[name].shape != arr.shape:
                raise CheckpointError(
                    f"field {name!r}: stored shape {arr.shape} vs model {targets[name].shape}")
            targets[name][...] = arr

    # -- forward -------------------------------------------------------

    def forward(self, token_ids, mask=None, training=False, dropout_seed=0):
        """Per-code probabilities for a (batch, n) id matrix.

        Returns ``(icd_probs, ccs_probs)``; the second is None when the
        multitask branch is disabled.
        """
        x = embed_sequence(token_ids, self.encoder)
        h = bigru_forward(x, self.encoder, mask)
        if self.config.use_ram:
            o = ram_forward(h, self.ram, training=training, seed=dropout_seed, mask=mask)
        else:
            o = h
        icd = head_forward(o, self.icd_head, mask)
        ccs = head_forward(o, self.ccs_head, mask) if self.config.use_mtl else None
        return icd, ccs

    def predict(self, token_ids, mask=None):
        """Eval-mode probabilities as numpy arrays."""
        icd, ccs = self.forward(token_ids, mask=mask, training=False)
        return icd.data, None if ccs is None else ccs.data
