"""Forward computation for the three citation-forecast model variants.

Variants
--------
``lt-ccp``   stacked LSTM, readout on the final hidden state.
``att-b-lt`` attention computed from the inputs alone, used to reweight
             the input sequence before the recurrence.
``att-a-lt`` attention computed from (input, hidden) pairs after the
             recurrence, pooling per-step features into a context
             vector.

All variants share the readout head: an affine map of the pooled
feature vector to per-horizon increments, passed through softplus and
cumulatively summed on top of the last observed count. That makes every
prediction non-decreasing and at least the last observed value by
construction.

Inputs are log1p-transformed at the network boundary; raw counts stay
in FeatureSequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .corpus import FeatureSequence
from .numkit import (
    Mat,
    Rng,
    Vec,
    concat,
    hadamard,
    init_uniform,
    matvec,
    sigmoid,
    softmax,
    softplus,
    tanh_act,
)


class Variant(str, Enum):
    LT_CCP = "lt-ccp"
    ATT_B_LT = "att-b-lt"
    ATT_A_LT = "att-a-lt"


_POOL_MODES = ("joint", "inputs")


@dataclass
class ModelConfig:
    """Architecture hyperparameters shared by forward and training."""

    variant: Variant
    hidden: int = 16
    layers: int = 2
    window: int = 10
    t_obs: int = 5
    horizons: int = 5
    attn: int = 16
    pool: str = "joint"

    def __post_init__(self):
        self.variant = Variant(self.variant)
        for name in ("hidden", "layers", "window", "t_obs", "horizons", "attn"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.pool not in _POOL_MODES:
            raise ValueError(f"pool must be one of {_POOL_MODES}, got {self.pool!r}")

    def as_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "hidden": self.hidden,
            "layers": self.layers,
            "window": self.window,
            "t_obs": self.t_obs,
            "horizons": self.horizons,
            "attn": self.attn,
            "pool": self.pool,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelConfig":
        return cls(**obj)


@dataclass
class LstmCellParams:
    w_i: Mat
    w_f: Mat
    w_c: Mat
    w_o: Mat
    b_i: Vec
    b_f: Vec
    b_c: Vec
    b_o: Vec


@dataclass
class LstmState:
    h: Vec
    c: Vec


@dataclass
class AttentionParams:
    w: Mat
    u: Vec


@dataclass
class ReadoutParams:
    w: Mat
    b: Vec


_GATES = ("i", "f", "c", "o")


def pooled_dim(config: ModelConfig) -> int:
    """Width of the vector entering the readout head."""
    if config.variant is Variant.ATT_A_LT:
        if config.pool == "joint":
            return config.window + config.hidden
        return config.window
    return config.hidden


def block_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical parameter block names and shapes for a configuration."""
    hd = config.hidden
    shapes: dict[str, tuple[int, ...]] = {}
    for layer in range(config.layers):
        in_dim = config.window if layer == 0 else hd
        for gate in _GATES:
            shapes[f"lstm{layer}.w_{gate}"] = (hd, hd + in_dim)
        for gate in _GATES:
            shapes[f"lstm{layer}.b_{gate}"] = (hd,)
    if config.variant is Variant.ATT_A_LT:
        shapes["attention.w"] = (config.attn, config.window + hd)
        shapes["attention.u"] = (config.attn,)
    elif config.variant is Variant.ATT_B_LT:
        shapes["attention.w"] = (config.attn, config.window)
        shapes["attention.u"] = (config.attn,)
    shapes["readout.w"] = (config.horizons, pooled_dim(config))
    shapes["readout.b"] = (config.horizons,)
    return shapes


@dataclass
class ModelParams:
    """All learnable parameters, as named float64 blocks."""

    blocks: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.blocks[name]

    def named_blocks(self) -> list[tuple[str, np.ndarray]]:
        return list(self.blocks.items())

    def copy(self) -> "ModelParams":
        return ModelParams({name: block.copy() for name, block in self.blocks.items()})

    def lstm_cell(self, layer: int) -> LstmCellParams:
        prefix = f"lstm{layer}."
        try:
            return LstmCellParams(
                *(self.blocks[prefix + "w_" + g] for g in _GATES),
                *(self.blocks[prefix + "b_" + g] for g in _GATES),
            )
        except KeyError:
            raise ValueError(f"parameters lack LSTM layer {layer}") from None

    def attention(self) -> AttentionParams:
        try:
            return AttentionParams(self.blocks["attention.w"], self.blocks["attention.u"])
        except KeyError:
            raise ValueError("parameters lack attention blocks") from None

    def readout_params(self) -> ReadoutParams:
        return ReadoutParams(self.blocks["readout.w"], self.blocks["readout.b"])


def init_params(config: ModelConfig, rng: Rng) -> ModelParams:
    """Seeded initialization: uniform ±0.08, forget-gate biases +1.0."""
    blocks: dict[str, np.ndarray] = {}
    for name, shape in block_shapes(config).items():
        if name.endswith(".b_f"):
            blocks[name] = np.ones(shape, dtype=np.float64)
        elif len(shape) == 2:
            blocks[name] = init_uniform(rng, shape[0], shape[1], 0.08)
        else:
            blocks[name] = rng.uniform(-0.08, 0.08, shape[0])
    return ModelParams(blocks)


def validate_params(config: ModelConfig, params: ModelParams) -> None:
    """Check block names, shapes, and finiteness against the config."""
    expected = block_shapes(config)
    have = {name: block.shape for name, block in params.blocks.items()}
    if set(have) != set(expected):
        missing = sorted(set(expected) - set(have))
        extra = sorted(set(have) - set(expected))
        raise ValueError(f"parameter blocks mismatch: missing {missing}, extra {extra}")
    for name, shape in expected.items():
        if have[name] != shape:
            raise ValueError(
                f"block {name} has shape {have[name]}, expected {shape}"
            )
        if not np.all(np.isfinite(params.blocks[name])):
            raise ValueError(f"block {name} contains non-finite values")


def lstm_cell_step(p: LstmCellParams, x: Vec, prev: LstmState) -> LstmState:
    """One cell update; gate pre-activations act on the concat [h, x]."""
    z = concat(prev.h, x)
    gi = sigmoid(matvec(p.w_i, z) + p.b_i)
    gf = sigmoid(matvec(p.w_f, z) + p.b_f)
    cand = tanh_act(matvec(p.w_c, z) + p.b_c)
    c = hadamard(gf, prev.c) + hadamard(gi, cand)
    go = sigmoid(matvec(p.w_o, z) + p.b_o)
    h = hadamard(go, tanh_act(c))
    return LstmState(h=h, c=c)


def lstm_forward(
    params: list[LstmCellParams], inputs: list[Vec]
) -> list[LstmState]:
    """Run the layer stack over a sequence, returning top-layer states.

    Layer l consumes layer l-1's hidden sequence; initial states are
    zero.
    """
    if not inputs:
        raise ValueError("lstm_forward requires a nonempty input sequence")
    seq = inputs
    top: list[LstmState] = []
    for cell in params:
        hidden = cell.b_i.shape[0]
        state = LstmState(h=np.zeros(hidden), c=np.zeros(hidden))
        top = []
        for x in seq:
            state = lstm_cell_step(cell, x, state)
            top.append(state)
        seq = [s.h for s in top]
    return top


def attention_scores(p: AttentionParams, xs: list[Vec], hs: list[Vec]) -> Vec:
    """Softmax attention weights over timesteps.

    Each step scores u . tanh(W_a [x_t ; h_t]); pass zero-length h
    vectors to score from inputs alone.
    """
    if len(xs) != len(hs):
        raise ValueError(f"got {len(xs)} inputs but {len(hs)} hidden states")
    scores = np.empty(len(xs))
    for t, (x, h) in enumerate(zip(xs, hs)):
        scores[t] = float(np.dot(p.u, tanh_act(matvec(p.w, concat(x, h)))))
    return softmax(scores)


def attention_pool(alphas: Vec, targets: list[Vec]) -> Vec:
    """Convex combination of per-step target vectors."""
    if len(alphas) != len(targets):
        raise ValueError(f"got {len(alphas)} weights for {len(targets)} targets")
    if abs(float(np.sum(alphas)) - 1.0) > 1e-6:
        raise ValueError("attention weights must sum to 1")
    pooled = np.zeros_like(targets[0])
    for a, target in zip(alphas, targets):
        pooled = pooled + a * target
    return pooled


def readout(p: ReadoutParams, pooled: Vec, last_observed: float) -> Vec:
    """Monotone horizon predictions from the pooled feature vector.

    Increments pass through softplus, so cumulative sums can never dip
    below the last observed count.
    """
    raw = matvec(p.w, pooled) + p.b
    return last_observed + np.cumsum(softplus(raw))


@dataclass
class Prediction:
    paper_id: str
    horizon_cumulative: Vec
    alphas: Vec


@dataclass
class StepCache:
    """Everything one cell step needs for its backward pass."""

    z: Vec
    gi: Vec
    gf: Vec
    cand: Vec
    go: Vec
    c_prev: Vec
    c: Vec
    tc: Vec
    h: Vec


@dataclass
class ForwardCache:
    """Intermediate values of one forward pass, consumed by backprop."""

    xs_base: list[Vec]
    xs_net: list[Vec]
    steps: list[list[StepCache]]
    att_z: list[Vec] = field(default_factory=list)
    att_a: list[Vec] = field(default_factory=list)
    alphas: Vec | None = None
    att_targets: list[Vec] = field(default_factory=list)
    pooled: Vec | None = None
    raw: Vec | None = None
    deltas: Vec | None = None
    preds: Vec | None = None


def _cell_step_cached(p: LstmCellParams, x: Vec, prev: LstmState) -> StepCache:
    z = concat(prev.h, x)
    gi = sigmoid(matvec(p.w_i, z) + p.b_i)
    gf = sigmoid(matvec(p.w_f, z) + p.b_f)
    cand = tanh_act(matvec(p.w_c, z) + p.b_c)
    c = hadamard(gf, prev.c) + hadamard(gi, cand)
    go = sigmoid(matvec(p.w_o, z) + p.b_o)
    tc = tanh_act(c)
    h = hadamard(go, tc)
    return StepCache(z=z, gi=gi, gf=gf, cand=cand, go=go,
                     c_prev=prev.c, c=c, tc=tc, h=h)


def _stack_forward_cached(
    config: ModelConfig, params: ModelParams, xs: list[Vec]
) -> list[list[StepCache]]:
    steps: list[list[StepCache]] = []
    seq = xs
    for layer in range(config.layers):
        cell = params.lstm_cell(layer)
        state = LstmState(h=np.zeros(config.hidden), c=np.zeros(config.hidden))
        row: list[StepCache] = []
        for x in seq:
            cached = _cell_step_cached(cell, x, state)
            state = LstmState(h=cached.h, c=cached.c)
            row.append(cached)
        steps.append(row)
        seq = [s.h for s in row]
    return steps


def _attend(
    p: AttentionParams, xs: list[Vec], hs: list[Vec], cache: ForwardCache
) -> Vec:
    scores = np.empty(len(xs))
    for t, (x, h) in enumerate(zip(xs, hs)):
        z = concat(x, h)
        a = tanh_act(matvec(p.w, z))
        cache.att_z.append(z)
        cache.att_a.append(a)
        scores[t] = float(np.dot(p.u, a))
    return softmax(scores)


def forward_with_cache(
    config: ModelConfig, params: ModelParams, example: FeatureSequence
) -> tuple[Prediction, ForwardCache]:
    """Forward pass retaining every intermediate needed for backprop."""
    if example.inputs.shape != (config.t_obs, config.window):
        raise ValueError(
            f"example inputs have shape {example.inputs.shape}, "
            f"config expects {(config.t_obs, config.window)}"
        )
    xs_base = [np.log1p(row) for row in example.inputs]
    cache = ForwardCache(xs_base=xs_base, xs_net=xs_base, steps=[])
    empty = np.zeros(0)

    if config.variant is Variant.ATT_B_LT:
        alphas = _attend(params.attention(), xs_base, [empty] * len(xs_base), cache)
        cache.alphas = alphas
        cache.xs_net = [
            config.t_obs * alphas[t] * xs_base[t] for t in range(len(xs_base))
        ]

    cache.steps = _stack_forward_cached(config, params, cache.xs_net)
    top = cache.steps[-1]

    if config.variant is Variant.ATT_A_LT:
        hs = [s.h for s in top]
        alphas = _attend(params.attention(), xs_base, hs, cache)
        cache.alphas = alphas
        if config.pool == "joint":
            cache.att_targets = [concat(x, h) for x, h in zip(xs_base, hs)]
        else:
            cache.att_targets = list(xs_base)
        pooled = attention_pool(alphas, cache.att_targets)
    else:
        pooled = top[-1].h
    cache.pooled = pooled

    rp = params.readout_params()
    cache.raw = matvec(rp.w, pooled) + rp.b
    cache.deltas = softplus(cache.raw)
    cache.preds = example.last_observed + np.cumsum(cache.deltas)

    alphas_out = cache.alphas if cache.alphas is not None else np.zeros(0)
    pred = Prediction(
        paper_id=example.paper_id,
        horizon_cumulative=cache.preds,
        alphas=alphas_out,
    )
    return pred, cache


def forward(
    config: ModelConfig, params: ModelParams, example: FeatureSequence
) -> Prediction:
    """Predict cumulative citation counts for each horizon."""
    pred, _ = forward_with_cache(config, params, example)
    return pred
