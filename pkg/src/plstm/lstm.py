"""Bidirectional LSTM layer: per-timestep cell, directional sequence passes
with mask pass-through, additive bidirectional pooling, and exact
backpropagation through time.

All sequence tensors are time-major: (L, batch, dim). Masks are (L, batch)
booleans; padded steps copy state through unchanged and contribute no
gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import RngStream, ShapeError, activate, activate_grad, matmul

GATES = ("i", "f", "o", "n")  # input, forget, output, candidate


@dataclass
class LSTMCellParams:
    W: dict  # gate -> (hidden, embed)
    U: dict  # gate -> (hidden, hidden)
    b: dict  # gate -> (hidden,)
    gate_activation: str = "sigmoid"

    @property
    def hidden(self):
        return self.W["i"].shape[0]

    @property
    def embed(self):
        return self.W["i"].shape[1]

    @classmethod
    def zeros(cls, hidden: int, embed: int, gate_activation: str = "sigmoid"):
        return cls(
            W={g: np.zeros((hidden, embed)) for g in GATES},
            U={g: np.zeros((hidden, hidden)) for g in GATES},
            b={g: np.zeros(hidden) for g in GATES},
            gate_activation=gate_activation,
        )

    @classmethod
    def random(
        cls,
        hidden: int,
        embed: int,
        rng: RngStream,
        scale: float = 0.05,
        forget_bias: float = 1.0,
        gate_activation: str = "sigmoid",
    ):
        p = cls.zeros(hidden, embed, gate_activation)
        for g in GATES:
            p.W[g] = rng.uniform(-scale, scale, (hidden, embed))
            p.U[g] = rng.uniform(-scale, scale, (hidden, hidden))
        p.b["f"] = np.full(hidden, forget_bias)
        return p

    def blocks(self, prefix: str):
        """Parameter blocks in the fixed serialization order."""
        out = []
        for g in GATES:
            out.append((f"{prefix}.W_{g}", self.W[g]))
            out.append((f"{prefix}.U_{g}", self.U[g]))
            out.append((f"{prefix}.b_{g}", self.b[g]))
        return out


@dataclass
class LSTMState:
    h: np.ndarray  # (batch, hidden)
    c: np.ndarray  # (batch, hidden)

    @classmethod
    def zero(cls, batch: int, hidden: int):
        return cls(np.zeros((batch, hidden)), np.zeros((batch, hidden)))


@dataclass
class BidirectionalLayer:
    forward_params: LSTMCellParams
    backward_params: LSTMCellParams

    @property
    def hidden(self):
        return self.forward_params.hidden


def _gates(params: LSTMCellParams, x: np.ndarray, h_prev: np.ndarray):
    acts = {}
    for g in GATES:
        pre = matmul(x, params.W[g].T) + matmul(h_prev, params.U[g].T) + params.b[g]
        kind = "tanh" if g == "n" else params.gate_activation
        acts[g] = activate(kind, pre)
    return acts


def cell_step(params: LSTMCellParams, x: np.ndarray, prev: LSTMState) -> LSTMState:
    """One recurrence step: gated memory update and emitted hidden signal.

    c = f * c_prev + i * candidate, h = o * tanh(c). Gate activation is
    params.gate_activation; the candidate activation is always tanh.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != params.embed:
        raise ShapeError(f"input width {x.shape[1]} != embed {params.embed}")
    if prev.h.shape != (x.shape[0], params.hidden):
        raise ShapeError(f"state shape {prev.h.shape} mismatches batch/hidden")
    a = _gates(params, x, prev.h)
    c = a["f"] * prev.c + a["i"] * a["n"]
    h = a["o"] * np.tanh(c)
    return LSTMState(h, c)


def directional_pass(params: LSTMCellParams, sequence: np.ndarray, mask, direction: str):
    """Run the recurrence over a sequence in one direction from zero state.

    Returns (hs, final_state, cache); hs is in original sequence order for
    either direction. Masked steps carry the previous state through.
    """
    xs = np.asarray(sequence, dtype=np.float64)
    if xs.ndim == 2:  # (L, embed) single sequence
        xs = xs[:, None, :]
    L, batch, _ = xs.shape
    if L == 0:
        raise ShapeError("empty sequence")
    if mask is None:
        mask = np.ones((L, batch), dtype=bool)
    mask = np.asarray(mask, dtype=bool).reshape(L, batch)
    if direction not in ("forward", "backward"):
        raise ValueError(f"bad direction {direction!r}")
    order = range(L) if direction == "forward" else range(L - 1, -1, -1)

    state = LSTMState.zero(batch, params.hidden)
    hs = np.zeros((L, batch, params.hidden))
    steps = []
    for t in order:
        m = mask[t].astype(np.float64)[:, None]
        a = _gates(params, xs[t], state.h)
        c_new = a["f"] * state.c + a["i"] * a["n"]
        tanh_c = np.tanh(c_new)
        h_new = a["o"] * tanh_c
        h = m * h_new + (1.0 - m) * state.h
        c = m * c_new + (1.0 - m) * state.c
        steps.append(
            {"t": t, "x": xs[t], "h_prev": state.h, "c_prev": state.c,
             "a": a, "tanh_c": tanh_c, "m": m}
        )
        state = LSTMState(h, c)
        hs[t] = h
    cache = {"steps": steps, "params": params, "shape": (L, batch, xs.shape[2])}
    return hs, state, cache


def _directional_bptt(cache, d_final_h: np.ndarray):
    params = cache["params"]
    L, batch, embed = cache["shape"]
    grads = {f"{k}_{g}": np.zeros_like(v[g]) for k, v in
             (("W", params.W), ("U", params.U), ("b", params.b)) for g in GATES}
    dx = np.zeros((L, batch, embed))
    dh = np.asarray(d_final_h, dtype=np.float64)
    dc = np.zeros_like(dh)
    for step in reversed(cache["steps"]):
        t, m, a = step["t"], step["m"], step["a"]
        dh_new = m * dh
        dh_carry = (1.0 - m) * dh
        dc_new = m * dc
        dc_carry = (1.0 - m) * dc

        do = dh_new * step["tanh_c"]
        dc_new = dc_new + dh_new * a["o"] * (1.0 - step["tanh_c"] ** 2)
        df = dc_new * step["c_prev"]
        di = dc_new * a["n"]
        dn = dc_new * a["i"]
        dc_prev = dc_new * a["f"]

        dpre = {
            "i": activate_grad(params.gate_activation, a["i"], di),
            "f": activate_grad(params.gate_activation, a["f"], df),
            "o": activate_grad(params.gate_activation, a["o"], do),
            "n": activate_grad("tanh", a["n"], dn),
        }
        dh_rec = np.zeros_like(dh)
        for g in GATES:
            grads[f"W_{g}"] += matmul(dpre[g].T, step["x"])
            grads[f"U_{g}"] += matmul(dpre[g].T, step["h_prev"])
            grads[f"b_{g}"] += dpre[g].sum(axis=0)
            dx[t] += matmul(dpre[g], params.W[g])
            dh_rec += matmul(dpre[g], params.U[g])
        dh = dh_carry + dh_rec
        dc = dc_carry + dc_prev
    return grads, dx


def bidirectional_encode(layer: BidirectionalLayer, sequence, mask=None):
    """Pooled representation: final forward h plus final backward h."""
    hs_f, final_f, cache_f = directional_pass(layer.forward_params, sequence, mask, "forward")
    hs_b, final_b, cache_b = directional_pass(layer.backward_params, sequence, mask, "backward")
    pooled = final_f.h + final_b.h
    return pooled, {"fwd": cache_f, "bwd": cache_b}


def bptt(layer: BidirectionalLayer, cache, upstream: np.ndarray):
    """Gradients for both directions' parameters and the input vectors.

    `upstream` is the gradient w.r.t. the pooled representation; because
    pooling is an elementwise sum it feeds both final states directly.
    Returns (grads, dx) with grads keyed "fwd.W_i", "bwd.b_o", etc.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    grads_f, dx_f = _directional_bptt(cache["fwd"], upstream)
    grads_b, dx_b = _directional_bptt(cache["bwd"], upstream)
    grads = {f"fwd.{k}": v for k, v in grads_f.items()}
    grads.update({f"bwd.{k}": v for k, v in grads_b.items()})
    return grads, dx_f + dx_b
