"""Gated dilated causal convolution network in plain numpy.

Every layer sees its input now and ``dilation`` samples ago (kernel size 2),
plus a linear projection of the conditioning vector added before the gate::

    a_f = h[t-d] W_f0 + h[t] W_f1 + b_f + theta V_f
    a_g = h[t-d] W_g0 + h[t] W_g1 + b_g + theta V_g
    z   = tanh(a_f) * sigmoid(a_g)
    skip += z W_s + b_s
    h   <- h + z W_r + b_r

The head maps the summed skips through two tanh stages to 256 logits. The
input at time t is the embedding of the previous symbol (the zero code at
t = 0); layer inputs before t = 0 are zero.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from gvox.core.conditional_model import ConditionalModel, ModelState
from gvox.core.signal_io import MULAW_ZERO
from gvox.core.weights import weights_fingerprint
from gvox.errors import CoderStateError, NonFiniteWeightsError
from gvox.models.network import ModelWeights
from gvox.models.rates import SymbolDistribution, floor_probs

logger = logging.getLogger(__name__)

SCORE_CHUNK = 4096
LN2 = float(np.log(2.0))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _delay(x: np.ndarray, d: int) -> np.ndarray:
    """x[:, t - d] along axis 1 with zeros before the start."""
    out = np.zeros_like(x)
    if d < x.shape[1]:
        out[:, d:] = x[:, :-d]
    return out


def shifted_inputs(symbols: np.ndarray) -> np.ndarray:
    """Network inputs for targets ``symbols``: the previous symbol, zero code first."""
    symbols = np.asarray(symbols, dtype=np.int64)
    inputs = np.empty_like(symbols)
    inputs[..., 0] = MULAW_ZERO
    inputs[..., 1:] = symbols[..., :-1]
    return inputs


@dataclass
class ForwardCache:
    inputs: np.ndarray
    cond: np.ndarray
    layer_inputs: list[np.ndarray]
    tanh_f: list[np.ndarray]
    sig_g: list[np.ndarray]
    z: list[np.ndarray]
    skip: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    logits: np.ndarray


def forward(weights: ModelWeights, inputs: np.ndarray, cond: np.ndarray) -> ForwardCache:
    """Full-sequence forward pass over a batch.

    ``inputs`` is (B, T) symbols, ``cond`` is (B, T, D).
    """
    arch = weights.architecture
    p = weights.params
    h = p["embed"][inputs]
    skip = np.zeros(inputs.shape + (arch.skip_channels,))
    layer_inputs, tanh_f, sig_g, zs = [], [], [], []
    for layer, d in enumerate(arch.dilations):
        q = f"layer{layer}."
        past = _delay(h, d)
        a_f = past @ p[q + "filter_w"][0] + h @ p[q + "filter_w"][1] + p[q + "filter_b"]
        a_g = past @ p[q + "gate_w"][0] + h @ p[q + "gate_w"][1] + p[q + "gate_b"]
        if arch.conditioning_dim:
            a_f = a_f + cond @ p[q + "cond_filter"]
            a_g = a_g + cond @ p[q + "cond_gate"]
        tf = np.tanh(a_f)
        sg = _sigmoid(a_g)
        z = tf * sg
        skip = skip + z @ p[q + "skip_w"] + p[q + "skip_b"]
        layer_inputs.append(h)
        tanh_f.append(tf)
        sig_g.append(sg)
        zs.append(z)
        h = h + z @ p[q + "res_w"] + p[q + "res_b"]
    y1 = np.tanh(skip)
    y2 = np.tanh(y1 @ p["head_w1"] + p["head_b1"])
    logits = y2 @ p["head_w2"] + p["head_b2"]
    return ForwardCache(inputs, cond, layer_inputs, tanh_f, sig_g, zs, skip, y1, y2, logits)


def loss_and_grads(
    weights: ModelWeights,
    inputs: np.ndarray,
    targets: np.ndarray,
    cond: np.ndarray,
    mask: np.ndarray | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy in bits over masked positions and its gradient."""
    arch = weights.architecture
    p = weights.params
    cache = forward(weights, inputs, cond)
    if mask is None:
        mask = np.ones(targets.shape, dtype=bool)
    weight = mask.astype(np.float64)
    count = max(float(weight.sum()), 1.0)

    probs = _softmax(cache.logits)
    picked = np.take_along_axis(probs, targets[..., np.newaxis], axis=-1)[..., 0]
    loss = float(-(np.log2(picked) * weight).sum() / count)

    grads = {name: np.zeros_like(value) for name, value in p.items()}
    dlogits = probs
    np.subtract.at(dlogits, (*np.indices(targets.shape), targets), 1.0)
    dlogits *= (weight / (count * LN2))[..., np.newaxis]

    def flat(x: np.ndarray) -> np.ndarray:
        return x.reshape(-1, x.shape[-1])

    grads["head_w2"] = flat(cache.y2).T @ flat(dlogits)
    grads["head_b2"] = flat(dlogits).sum(axis=0)
    da2 = (dlogits @ p["head_w2"].T) * (1.0 - cache.y2**2)
    grads["head_w1"] = flat(cache.y1).T @ flat(da2)
    grads["head_b1"] = flat(da2).sum(axis=0)
    dskip = (da2 @ p["head_w1"].T) * (1.0 - cache.y1**2)

    dh = np.zeros_like(cache.layer_inputs[0])
    for layer in reversed(range(arch.num_layers)):
        q = f"layer{layer}."
        d = arch.dilations[layer]
        h = cache.layer_inputs[layer]
        tf, sg, z = cache.tanh_f[layer], cache.sig_g[layer], cache.z[layer]
        past = _delay(h, d)

        grads[q + "res_w"] = flat(z).T @ flat(dh)
        grads[q + "res_b"] = flat(dh).sum(axis=0)
        grads[q + "skip_w"] = flat(z).T @ flat(dskip)
        grads[q + "skip_b"] = flat(dskip).sum(axis=0)
        dz = dh @ p[q + "res_w"].T + dskip @ p[q + "skip_w"].T

        da_f = dz * sg * (1.0 - tf**2)
        da_g = dz * tf * sg * (1.0 - sg)
        grads[q + "filter_w"] = np.stack([flat(past).T @ flat(da_f), flat(h).T @ flat(da_f)])
        grads[q + "gate_w"] = np.stack([flat(past).T @ flat(da_g), flat(h).T @ flat(da_g)])
        grads[q + "filter_b"] = flat(da_f).sum(axis=0)
        grads[q + "gate_b"] = flat(da_g).sum(axis=0)
        if arch.conditioning_dim:
            grads[q + "cond_filter"] = flat(cache.cond).T @ flat(da_f)
            grads[q + "cond_gate"] = flat(cache.cond).T @ flat(da_g)

        dpast = da_f @ p[q + "filter_w"][0].T + da_g @ p[q + "gate_w"][0].T
        dh = dh + da_f @ p[q + "filter_w"][1].T + da_g @ p[q + "gate_w"][1].T
        if d < dh.shape[1]:
            dh[:, :-d] += dpast[:, d:]

    np.add.at(grads["embed"], cache.inputs, dh)
    return loss, grads


class WaveNetModel(ConditionalModel):
    """Conditional model backed by trained network weights."""

    def __init__(self, weights: ModelWeights):
        if not weights.is_finite():
            raise NonFiniteWeightsError("network weights contain NaN or infinite values")
        self.weights = weights
        self.architecture = weights.architecture
        self.receptive_field = self.architecture.receptive_field
        self.conditioning_dim = self.architecture.conditioning_dim
        self._fingerprint: bytes | None = None

    def initial_state(self) -> ModelState:
        state = ModelState.fresh(self.receptive_field)
        c = self.architecture.residual_channels
        state.caches = [
            deque([np.zeros(c) for _ in range(d)], maxlen=d) for d in self.architecture.dilations
        ]
        return state

    def _step(self, state: ModelState, theta: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        p = self.weights.params
        h = p["embed"][state.last_symbol]
        skip = np.zeros(self.architecture.skip_channels)
        staged = []
        for layer, cache in enumerate(state.caches):
            q = f"layer{layer}."
            past = cache[0]
            a_f = past @ p[q + "filter_w"][0] + h @ p[q + "filter_w"][1] + p[q + "filter_b"]
            a_g = past @ p[q + "gate_w"][0] + h @ p[q + "gate_w"][1] + p[q + "gate_b"]
            if self.conditioning_dim:
                a_f = a_f + theta @ p[q + "cond_filter"]
                a_g = a_g + theta @ p[q + "cond_gate"]
            z = np.tanh(a_f) * _sigmoid(a_g)
            skip = skip + z @ p[q + "skip_w"] + p[q + "skip_b"]
            staged.append(h)
            h = h + z @ p[q + "res_w"] + p[q + "res_b"]
        y2 = np.tanh(np.tanh(skip) @ p["head_w1"] + p["head_b1"])
        return y2 @ p["head_w2"] + p["head_b2"], staged

    def next_distribution(self, state: ModelState, theta: np.ndarray) -> SymbolDistribution:
        theta = self.check_theta(theta)
        logits, staged = self._step(state, theta)
        state.staged = staged
        return SymbolDistribution.floored(_softmax(logits))

    def advance(self, state: ModelState, symbol: int) -> ModelState:
        if state.staged is None:
            raise CoderStateError("advance called before next_distribution")
        for cache, h in zip(state.caches, state.staged):
            cache.append(h)
        return super().advance(state, symbol)

    def probabilities(self, symbols: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Floored next-symbol distributions for a whole sequence given its true history."""
        symbols = np.asarray(symbols, dtype=np.int64)
        rows = self.check_theta(rows)
        cache = forward(self.weights, shifted_inputs(symbols)[np.newaxis], rows[np.newaxis])
        return np.stack([floor_probs(row) for row in _softmax(cache.logits[0])])

    def score(self, symbols: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        symbols = np.asarray(symbols, dtype=np.int64)
        n = symbols.size
        h = np.empty(n)
        r = np.empty(n)
        if n == 0:
            return h, r
        rows = self.check_theta(rows)
        p = self.weights.params
        # skips for the whole sequence at once, head in chunks
        cache = forward(self.weights, shifted_inputs(symbols)[np.newaxis], rows[np.newaxis])
        skip = cache.skip[0]
        for start in range(0, n, SCORE_CHUNK):
            stop = min(start + SCORE_CHUNK, n)
            y2 = np.tanh(np.tanh(skip[start:stop]) @ p["head_w1"] + p["head_b1"])
            probs = _softmax(y2 @ p["head_w2"] + p["head_b2"])
            probs = np.stack([floor_probs(row) for row in probs])
            h[start:stop] = -(probs * np.log2(probs)).sum(axis=1)
            r[start:stop] = -np.log2(probs[np.arange(stop - start), symbols[start:stop]])
        return h, r

    def fingerprint(self) -> bytes:
        if self._fingerprint is None:
            self._fingerprint = weights_fingerprint(self.weights)
        return self._fingerprint
