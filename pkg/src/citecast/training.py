"""Training: guarded-MAPE loss, backpropagation through time, Adadelta.

The gradient is hand-derived reverse-mode differentiation through the
readout head, the attention softmax, and the unrolled LSTM stack. A
finite-difference oracle with the same output shape is provided so the
analytic gradient can be checked independently.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import FeatureSequence
from .errors import NumericError
from .metrics import EvalReport, acc, mape
from .network import (
    ForwardCache,
    ModelConfig,
    ModelParams,
    Variant,
    block_shapes,
    forward,
    forward_with_cache,
    init_params,
)
from .numkit import Rng, sigmoid


@dataclass
class TrainConfig:
    epochs: int
    seed: int
    batch_size: int = 32
    rho: float = 0.95
    eps: float = 1e-6
    early_stop_patience: int = 10
    clip_norm: float | None = 5.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must be in (0, 1), got {self.rho}")
        if self.eps <= 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.clip_norm is not None and self.clip_norm <= 0.0:
            raise ValueError(f"clip_norm must be positive, got {self.clip_norm}")


@dataclass
class TrainTrace:
    """Per-epoch losses and wall time."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)


def mape_loss(pred, target) -> float:
    """Training objective: MAPE with denominators clamped to at least 1.

    The clamp keeps the loss finite on small synthetic targets; the
    evaluation metric in the metrics module is unguarded by design.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"got {pred.shape} predictions for {target.shape} targets")
    return float(np.mean(np.abs(pred - target) / np.maximum(target, 1.0)))


def zero_grads(config: ModelConfig) -> dict[str, np.ndarray]:
    return {name: np.zeros(shape) for name, shape in block_shapes(config).items()}


def _attention_backward(
    params: ModelParams,
    cache: ForwardCache,
    dalphas: np.ndarray,
    grads: dict[str, np.ndarray],
) -> list[np.ndarray]:
    """Backprop through softmax scoring; returns d(concat input) per step."""
    att = params.attention()
    alphas = cache.alphas
    dscores = alphas * (dalphas - float(np.dot(alphas, dalphas)))
    dz_list = []
    for t in range(len(dscores)):
        a = cache.att_a[t]
        grads["attention.u"] += dscores[t] * a
        dpre = dscores[t] * att.u * (1.0 - a * a)
        grads["attention.w"] += np.outer(dpre, cache.att_z[t])
        dz_list.append(att.w.T @ dpre)
    return dz_list


def _stack_backward(
    config: ModelConfig,
    params: ModelParams,
    cache: ForwardCache,
    dh_seq: list[np.ndarray],
    grads: dict[str, np.ndarray],
) -> list[np.ndarray]:
    """Backprop through the unrolled layer stack.

    ``dh_seq`` holds the loss gradient w.r.t. the top layer's hidden
    outputs; the return value is the gradient w.r.t. the stack's input
    sequence.
    """
    hd = config.hidden
    for layer in reversed(range(config.layers)):
        cell = params.lstm_cell(layer)
        row = cache.steps[layer]
        dh_rec = np.zeros(hd)
        dc_rec = np.zeros(hd)
        dx_seq: list[np.ndarray] = [np.zeros(0)] * len(row)
        for t in reversed(range(len(row))):
            s = row[t]
            dh = dh_seq[t] + dh_rec
            dc = dc_rec + dh * s.go * (1.0 - s.tc * s.tc)
            dgo = dh * s.tc
            dgf = dc * s.c_prev
            dgi = dc * s.cand
            dcand = dc * s.gi
            dc_rec = dc * s.gf
            dpre_i = dgi * s.gi * (1.0 - s.gi)
            dpre_f = dgf * s.gf * (1.0 - s.gf)
            dpre_o = dgo * s.go * (1.0 - s.go)
            dpre_c = dcand * (1.0 - s.cand * s.cand)
            prefix = f"lstm{layer}."
            grads[prefix + "w_i"] += np.outer(dpre_i, s.z)
            grads[prefix + "w_f"] += np.outer(dpre_f, s.z)
            grads[prefix + "w_c"] += np.outer(dpre_c, s.z)
            grads[prefix + "w_o"] += np.outer(dpre_o, s.z)
            grads[prefix + "b_i"] += dpre_i
            grads[prefix + "b_f"] += dpre_f
            grads[prefix + "b_c"] += dpre_c
            grads[prefix + "b_o"] += dpre_o
            dz = (
                cell.w_i.T @ dpre_i
                + cell.w_f.T @ dpre_f
                + cell.w_c.T @ dpre_c
                + cell.w_o.T @ dpre_o
            )
            dh_rec = dz[:hd]
            dx_seq[t] = dz[hd:]
        dh_seq = dx_seq
    return dh_seq


def _backward_from_cache(
    config: ModelConfig,
    params: ModelParams,
    example: FeatureSequence,
    cache: ForwardCache,
) -> dict[str, np.ndarray]:
    grads = zero_grads(config)
    t_obs = len(cache.xs_base)
    horizons = len(cache.preds)

    dpreds = np.sign(cache.preds - example.targets) / (
        horizons * np.maximum(example.targets.astype(np.float64), 1.0)
    )
    ddeltas = np.cumsum(dpreds[::-1])[::-1]
    draw = ddeltas * sigmoid(cache.raw)
    grads["readout.w"] += np.outer(draw, cache.pooled)
    grads["readout.b"] += draw
    dpooled = params["readout.w"].T @ draw

    if config.variant is Variant.ATT_A_LT:
        dalphas = np.array(
            [float(np.dot(dpooled, tgt)) for tgt in cache.att_targets]
        )
        dh_seq = [np.zeros(config.hidden) for _ in range(t_obs)]
        if config.pool == "joint":
            for t in range(t_obs):
                dh_seq[t] += cache.alphas[t] * dpooled[config.window :]
        dz_att = _attention_backward(params, cache, dalphas, grads)
        for t in range(t_obs):
            dh_seq[t] += dz_att[t][config.window :]
        _stack_backward(config, params, cache, dh_seq, grads)
    elif config.variant is Variant.ATT_B_LT:
        dh_seq = [np.zeros(config.hidden) for _ in range(t_obs)]
        dh_seq[-1] = dpooled
        dx_net = _stack_backward(config, params, cache, dh_seq, grads)
        dalphas = np.array(
            [
                t_obs * float(np.dot(dx_net[t], cache.xs_base[t]))
                for t in range(t_obs)
            ]
        )
        _attention_backward(params, cache, dalphas, grads)
    else:
        dh_seq = [np.zeros(config.hidden) for _ in range(t_obs)]
        dh_seq[-1] = dpooled
        _stack_backward(config, params, cache, dh_seq, grads)

    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in block {name}")
    return grads


def loss_and_grad(
    config: ModelConfig, params: ModelParams, example: FeatureSequence
) -> tuple[float, dict[str, np.ndarray]]:
    """Guarded MAPE of one example and its full analytic gradient."""
    _, cache = forward_with_cache(config, params, example)
    loss = mape_loss(cache.preds, example.targets)
    return loss, _backward_from_cache(config, params, example, cache)


def backward(
    config: ModelConfig, params: ModelParams, example: FeatureSequence
) -> dict[str, np.ndarray]:
    """Analytic gradient of the guarded MAPE for one example."""
    return loss_and_grad(config, params, example)[1]


def central_difference(fn, x: float, step: float) -> float:
    """Two-point central difference estimate of d fn / dx."""
    return (fn(x + step) - fn(x - step)) / (2.0 * step)


def finite_diff_grad(
    config: ModelConfig,
    params: ModelParams,
    example: FeatureSequence,
    step: float = 1e-5,
) -> dict[str, np.ndarray]:
    """Central-difference gradient oracle, one coordinate at a time.

    The per-coordinate step scales with the parameter magnitude:
    step * max(1, |theta|).
    """
    work = params.copy()

    def loss_now() -> float:
        pred = forward(config, work, example)
        return mape_loss(pred.horizon_cumulative, example.targets)

    grads = {}
    for name, block in work.blocks.items():
        g = np.zeros(block.size)
        flat = block.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            delta = step * max(1.0, abs(orig))
            flat[i] = orig + delta
            lo_hi = loss_now()
            flat[i] = orig - delta
            lo_lo = loss_now()
            flat[i] = orig
            g[i] = (lo_hi - lo_lo) / (2.0 * delta)
        grads[name] = g.reshape(block.shape)
    return grads


def max_rel_discrepancy(
    grads_a: dict[str, np.ndarray],
    grads_b: dict[str, np.ndarray],
    floor: float = 1e-10,
) -> tuple[float, str]:
    """Worst relative disagreement between two gradients.

    Coordinates where both magnitudes fall below ``floor`` are
    excluded: they are numerically zero on both sides and their ratio
    is noise. Returns the worst value and the block it occurs in.
    """
    if set(grads_a) != set(grads_b):
        raise ValueError("gradient block names differ")
    worst, worst_block = 0.0, ""
    for name in grads_a:
        a = grads_a[name].ravel()
        b = grads_b[name].ravel()
        if a.shape != b.shape:
            raise ValueError(f"block {name} shapes differ: {a.shape} vs {b.shape}")
        mask = (np.abs(a) >= floor) | (np.abs(b) >= floor)
        if not mask.any():
            continue
        rel = np.abs(a - b)[mask] / np.maximum(np.abs(a), np.abs(b))[mask]
        peak = float(rel.max())
        if peak > worst:
            worst, worst_block = peak, name
    return worst, worst_block


@dataclass
class AdadeltaState:
    """Running accumulators E[g^2] and E[dx^2], one per parameter block."""

    eg2: dict[str, np.ndarray]
    edx2: dict[str, np.ndarray]


def init_adadelta(config: ModelConfig) -> AdadeltaState:
    shapes = block_shapes(config)
    return AdadeltaState(
        eg2={name: np.zeros(shape) for name, shape in shapes.items()},
        edx2={name: np.zeros(shape) for name, shape in shapes.items()},
    )


def adadelta_update(
    state: AdadeltaState,
    params: ModelParams,
    grads: dict[str, np.ndarray],
    rho: float = 0.95,
    eps: float = 1e-6,
) -> None:
    """One in-place Adadelta step over every parameter block."""
    for name, g in grads.items():
        theta = params.blocks[name]
        if g.shape != theta.shape:
            raise ValueError(
                f"gradient for {name} has shape {g.shape}, params {theta.shape}"
            )
        eg2 = state.eg2[name]
        eg2 *= rho
        eg2 += (1.0 - rho) * g * g
        step = -np.sqrt(state.edx2[name] + eps) / np.sqrt(eg2 + eps) * g
        edx2 = state.edx2[name]
        edx2 *= rho
        edx2 += (1.0 - rho) * step * step
        theta += step


def _clip_global_norm(grads: dict[str, np.ndarray], clip: float) -> None:
    total = sum(float(np.sum(g * g)) for g in grads.values())
    norm = np.sqrt(total)
    if norm > clip:
        scale = clip / norm
        for g in grads.values():
            g *= scale


def _mean_loss(
    config: ModelConfig, params: ModelParams, examples: list[FeatureSequence]
) -> float:
    total = 0.0
    for ex in examples:
        pred = forward(config, params, ex)
        total += mape_loss(pred.horizon_cumulative, ex.targets)
    return total / len(examples)


def train(
    tcfg: TrainConfig,
    mcfg: ModelConfig,
    examples_train: list[FeatureSequence],
    examples_val: list[FeatureSequence],
    rng: Rng,
) -> tuple[ModelParams, TrainTrace]:
    """Mini-batch Adadelta training with early stopping.

    One rng drives initialization and epoch shuffling, so a seed fixes
    the entire trace. Batch gradients are averaged in a fixed order.
    Returns the parameters with the best validation loss (training loss
    stands in when no validation examples are given).
    """
    if not examples_train:
        raise ValueError("training requires at least one example")
    params = init_params(mcfg, rng)
    state = init_adadelta(mcfg)
    trace = TrainTrace()
    best = params.copy()
    best_val = np.inf
    stall = 0

    for epoch in range(tcfg.epochs):
        started = time.perf_counter()
        order = rng.permutation(len(examples_train))
        loss_sum = 0.0
        for lo in range(0, len(order), tcfg.batch_size):
            batch = order[lo : lo + tcfg.batch_size]
            grads = zero_grads(mcfg)
            for idx in batch:
                loss, g = loss_and_grad(mcfg, params, examples_train[int(idx)])
                loss_sum += loss
                for name in grads:
                    grads[name] += g[name]
            for name in grads:
                grads[name] /= len(batch)
            if tcfg.clip_norm is not None:
                _clip_global_norm(grads, tcfg.clip_norm)
            adadelta_update(state, params, grads, tcfg.rho, tcfg.eps)

        train_loss = loss_sum / len(examples_train)
        val_loss = (
            _mean_loss(mcfg, params, examples_val) if examples_val else train_loss
        )
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise NumericError(f"training diverged at epoch {epoch}")
        trace.train_loss.append(train_loss)
        trace.val_loss.append(val_loss)
        trace.seconds.append(time.perf_counter() - started)

        if val_loss < best_val:
            best_val = val_loss
            best = params.copy()
            stall = 0
        else:
            stall += 1
            if tcfg.early_stop_patience > 0 and stall >= tcfg.early_stop_patience:
                break
    return best, trace


def evaluate_split(
    mcfg: ModelConfig,
    params: ModelParams,
    examples: list[FeatureSequence],
    epsilon: float = 0.3,
) -> EvalReport:
    """Per-horizon MAPE and ACC of a model over an example set."""
    if not examples:
        raise ValueError("evaluation requires at least one example")
    preds = np.stack(
        [forward(mcfg, params, ex).horizon_cumulative for ex in examples]
    )
    truths = np.stack([ex.targets for ex in examples])
    return EvalReport(
        mape=[mape(preds[:, j], truths[:, j]) for j in range(truths.shape[1])],
        acc=[acc(preds[:, j], truths[:, j], epsilon) for j in range(truths.shape[1])],
        epsilon=epsilon,
        population=len(examples),
    )
