"""The four-branch parallel bidirectional LSTM classifier.

One shared trainable embedding table feeds four independent branches, each
a bidirectional LSTM followed by a two-way affine head with its own output
activation (softmax, sigmoid, relu, tanh). Branches never share weights
beyond the embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor
from .lstm import BidirectionalLayer, LSTMCellParams, bptt, bidirectional_encode
from .tensor import RngStream, ShapeError, activate, activate_grad, dropout_mask, matmul

BRANCH_NAMES = ("softmax", "sigmoid", "relu", "tanh")
N_CLASSES = 2

DEFAULT_EMBED_DIM = 400
DEFAULT_DROPOUT_EMBED = 0.6
DEFAULT_DROPOUT_RECURRENT = 0.4
INIT_SCALE = 0.05


@dataclass
class Branch:
    name: str
    layer: BidirectionalLayer
    head_W: np.ndarray  # (2, hidden)
    head_b: np.ndarray  # (2,)
    dropout_embed: float = DEFAULT_DROPOUT_EMBED
    dropout_recurrent: float = DEFAULT_DROPOUT_RECURRENT

    @property
    def hidden(self):
        return self.layer.hidden

    def blocks(self):
        out = self.layer.forward_params.blocks(f"{self.name}.fwd")
        out += self.layer.backward_params.blocks(f"{self.name}.bwd")
        out.append((f"{self.name}.head_W", self.head_W))
        out.append((f"{self.name}.head_b", self.head_b))
        return out


@dataclass
class ParallelModel:
    embedding: np.ndarray  # (vocab, embed); row 0 (pad) stays zero
    branches: dict  # name -> Branch, iteration in BRANCH_NAMES order
    seq_len: int
    aggregation: str = "primary_branch"  # or "majority_vote"

    @property
    def vocab_size(self):
        return self.embedding.shape[0]

    @property
    def embed_dim(self):
        return self.embedding.shape[1]

    @property
    def hidden(self):
        return self.branches["softmax"].hidden

    def blocks(self):
        out = [("embedding", self.embedding)]
        for name in BRANCH_NAMES:
            out += self.branches[name].blocks()
        return out

    def param_count(self):
        return sum(arr.size for _, arr in self.blocks())


@dataclass
class Prediction:
    per_branch: dict  # name -> (scores: (2,) array, label: int)
    final_label: int


def expected_param_count(vocab_size: int, embed_dim: int, hidden: int) -> int:
    per_direction = 4 * (hidden * embed_dim + hidden * hidden + hidden)
    per_branch = 2 * per_direction + 2 * hidden + 2
    return vocab_size * embed_dim + 4 * per_branch


def init_model(
    vocab_size: int,
    embed_dim: int,
    hidden: int,
    seed: int,
    seq_len: int = 65,
    aggregation: str = "primary_branch",
    gate_mode: str = "standard",
    dropout_embed: float = DEFAULT_DROPOUT_EMBED,
    dropout_recurrent: float = DEFAULT_DROPOUT_RECURRENT,
) -> ParallelModel:
    """Deterministic init: uniform(-0.05, 0.05) weights from per-branch
    substreams, zero biases except forget bias +1, zero pad embedding row."""
    if min(vocab_size, embed_dim, hidden, seq_len) < 1:
        raise ValueError("all model dimensions must be >= 1")
    if gate_mode not in ("standard", "literal_eq9"):
        raise ValueError(f"unknown gate_mode {gate_mode!r}")
    embedding = RngStream(seed, 0).uniform(-INIT_SCALE, INIT_SCALE, (vocab_size, embed_dim))
    embedding[0, :] = 0.0
    branches = {}
    for idx, name in enumerate(BRANCH_NAMES):
        rng = RngStream(seed, 1 + idx)
        gate_act = name if gate_mode == "literal_eq9" else "sigmoid"
        layer = BidirectionalLayer(
            LSTMCellParams.random(hidden, embed_dim, rng, INIT_SCALE, 1.0, gate_act),
            LSTMCellParams.random(hidden, embed_dim, rng, INIT_SCALE, 1.0, gate_act),
        )
        branches[name] = Branch(
            name=name,
            layer=layer,
            head_W=rng.uniform(-INIT_SCALE, INIT_SCALE, (N_CLASSES, hidden)),
            head_b=np.zeros(N_CLASSES),
            dropout_embed=dropout_embed,
            dropout_recurrent=dropout_recurrent,
        )
    return ParallelModel(embedding, branches, seq_len, aggregation)


def embed_ids(model: ParallelModel, ids: np.ndarray) -> np.ndarray:
    """Lookup (batch, L) token ids -> time-major (L, batch, embed)."""
    ids = np.atleast_2d(np.asarray(ids))
    if ids.min() < 0 or ids.max() >= model.vocab_size:
        raise ValueError(f"token id out of range [0, {model.vocab_size})")
    return model.embedding[ids].transpose(1, 0, 2)


def branch_forward(branch: Branch, embedded: np.ndarray, mask, rng=None, training=False):
    """Branch pipeline: embed dropout -> bidirectional encode -> pooled
    dropout -> affine head -> the branch's own activation.

    Returns (scores (batch, 2), cache). Dropout masks land in the cache so
    the backward pass replays them exactly.
    """
    embedded = np.asarray(embedded, dtype=np.float64)
    L, batch, _ = embedded.shape
    if training:
        if rng is None:
            raise ValueError("training-mode forward needs an RngStream")
        m_embed = dropout_mask(embedded.shape, branch.dropout_embed, rng)
        m_pool = dropout_mask((batch, branch.hidden), branch.dropout_recurrent, rng)
    else:
        m_embed = 1.0
        m_pool = 1.0
    x = embedded * m_embed
    pooled, enc_cache = bidirectional_encode(branch.layer, x, mask)
    dropped = pooled * m_pool
    logits = matmul(dropped, branch.head_W.T) + branch.head_b
    scores = activate(branch.name, logits)
    cache = {
        "m_embed": m_embed,
        "m_pool": m_pool,
        "enc": enc_cache,
        "dropped": dropped,
        "scores": scores,
    }
    return scores, cache


def branch_backward(branch: Branch, cache, d_scores: np.ndarray):
    """Reverse the branch pipeline; returns (param grads, d_embedded)."""
    d_logits = activate_grad(branch.name, cache["scores"], d_scores)
    grads = {
        f"{branch.name}.head_W": matmul(d_logits.T, cache["dropped"]),
        f"{branch.name}.head_b": d_logits.sum(axis=0),
    }
    d_dropped = matmul(d_logits, branch.head_W)
    d_pooled = d_dropped * cache["m_pool"]
    enc_grads, dx = bptt(branch.layer, cache["enc"], d_pooled)
    for key, val in enc_grads.items():
        grads[f"{branch.name}.{key}"] = val
    d_embedded = dx * cache["m_embed"]
    return grads, d_embedded


def forward_batch(model: ParallelModel, ids, mask, rngs=None, training=False):
    """Shared embedding lookup, then all four branches independently.

    Returns {branch: scores (batch, 2)} plus caches when training.
    mask is (batch, L) boolean. rngs maps branch name -> RngStream.
    """
    ids = np.atleast_2d(np.asarray(ids))
    mask_tm = np.atleast_2d(np.asarray(mask, dtype=bool)).T  # (L, batch)
    embedded = embed_ids(model, ids)
    scores, caches = {}, {}
    for name in BRANCH_NAMES:
        rng = rngs[name] if rngs else None
        scores[name], caches[name] = branch_forward(
            model.branches[name], embedded, mask_tm, rng, training
        )
    return (scores, caches) if training else (scores, None)


def aggregate(per_branch_labels: dict, aggregation: str) -> int:
    """Final label: the softmax branch's call, or a majority vote with ties
    resolved toward class 0."""
    if aggregation == "primary_branch":
        return per_branch_labels["softmax"]
    if aggregation == "majority_vote":
        votes = sum(per_branch_labels[n] for n in BRANCH_NAMES)
        return 1 if votes > len(BRANCH_NAMES) / 2 else 0
    raise ValueError(f"unknown aggregation {aggregation!r}")


def model_forward(model: ParallelModel, encoded, rngs=None, training=False):
    """Classify one encoded sequence; returns a Prediction (and caches when
    training). Per-branch labels are argmaxes with ties toward class 0."""
    ids = encoded.ids[None, :]
    mask = encoded.mask[None, :]
    scores, caches = forward_batch(model, ids, mask, rngs, training)
    per_branch = {}
    for name in BRANCH_NAMES:
        row = scores[name][0]
        per_branch[name] = (row, int(np.argmax(row)))
    labels = {n: lab for n, (_, lab) in per_branch.items()}
    pred = Prediction(per_branch, aggregate(labels, model.aggregation))
    return (pred, caches) if training else pred


def summary(model: ParallelModel) -> str:
    """Keras-style parameter summary with a grand total; pure."""
    lines = []
    width = 58
    lines.append("pLSTM parallel model")
    lines.append("=" * width)
    lines.append(f"{'layer':<34}{'shape':<16}{'params':>8}")
    lines.append("-" * width)
    emb = model.embedding
    lines.append(f"{'embedding (shared)':<34}{str(emb.shape):<16}{emb.size:>8}")
    for name in BRANCH_NAMES:
        branch = model.branches[name]
        n_layer = sum(a.size for k, a in branch.blocks() if ".head_" not in k)
        n_head = branch.head_W.size + branch.head_b.size
        lines.append(f"{f'branch {name}: bidirectional lstm':<34}"
                     f"{f'(2x4x{branch.hidden})':<16}{n_layer:>8}")
        lines.append(f"{f'branch {name}: dense head':<34}"
                     f"{str(branch.head_W.shape):<16}{n_head:>8}")
    lines.append("-" * width)
    lines.append(f"{'total parameters':<50}{model.param_count():>8}")
    lines.append("=" * width)
    return "\n".join(lines) + "\n"
