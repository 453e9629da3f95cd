"""Persistence-guided navigation of dynamical-system parameter spaces.

Configs are JSON text in the same format the ``topnav`` command reads; the
command functions write the same artifacts as the CLI.
"""

import json

from ._topnav import (
    DivergenceError,
    InputError,
    SingularityError,
    UndefinedFeatureError,
    check_grad,
    default_config,
    features,
    integrate,
    loss_and_gradient,
    model_info,
    model_names,
    navigate,
    normalize_config,
    persistence,
    simulate,
    sweep,
)


def config(model, **overrides):
    """Default config of `model` with top-level sections updated from keyword arguments."""
    cfg = json.loads(default_config(model))
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(value)
        else:
            cfg[key] = value
    return normalize_config(json.dumps(cfg))


__all__ = [
    "DivergenceError",
    "InputError",
    "SingularityError",
    "UndefinedFeatureError",
    "check_grad",
    "config",
    "default_config",
    "features",
    "integrate",
    "loss_and_gradient",
    "model_info",
    "model_names",
    "navigate",
    "normalize_config",
    "persistence",
    "simulate",
    "sweep",
]
