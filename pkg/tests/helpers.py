"""Shared builders for random models and examples used across tests."""

import numpy as np

from citecast import FeatureSequence, ModelConfig, ModelParams, Rng, Variant
from citecast.network import block_shapes

VARIANT_CYCLE = [
    ("lt-ccp", "joint"),
    ("att-b-lt", "joint"),
    ("att-a-lt", "joint"),
    ("att-a-lt", "inputs"),
]

ACCEPTANCE_VERDICTS: list[str] = []


def small_config(variant="lt-ccp", pool="joint", **overrides) -> ModelConfig:
    base = dict(
        variant=Variant(variant),
        hidden=4,
        layers=2,
        window=10,
        t_obs=5,
        horizons=5,
        attn=16,
        pool=pool,
    )
    base.update(overrides)
    return ModelConfig(**base)


def random_params(config: ModelConfig, rng: Rng, scale: float = 0.4) -> ModelParams:
    """Uniform random parameters, wider than the training init so no
    gradient path is suppressed below finite-difference resolution."""
    blocks = {}
    for name, shape in block_shapes(config).items():
        if len(shape) == 2:
            blocks[name] = rng.uniform(-scale, scale, shape)
        else:
            blocks[name] = rng.uniform(-scale, scale, shape[0])
    return ModelParams(blocks)


def random_example(rng: Rng, config: ModelConfig, hi: int = 3) -> FeatureSequence:
    """Random raw-count windows with strictly increasing integer targets."""
    inputs = rng.integers(0, hi, (config.t_obs, config.window)).astype(np.float64)
    last = int(inputs[-1].sum())
    targets = last + np.cumsum(rng.integers(1, 5, config.horizons))
    return FeatureSequence(
        paper_id="probe", inputs=inputs, targets=targets, last_observed=last
    )
