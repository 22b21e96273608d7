"""Bias-corrected adaptive-moment optimizer."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the parameter shapes."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(m={k: np.zeros_like(p) for k, p in params.items()},
                   v={k: np.zeros_like(p) for k, p in params.items()},
                   step=0, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, lr: float) -> dict[str, np.ndarray]:
    """One update; mutates ``state`` and returns the new parameter dict.

    A non-finite gradient skips the whole update with a warning instead
    of poisoning the moments.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            logger.warning("skipping optimizer step: non-finite gradient in %s", name)
            return params
    state.step += 1
    t = state.step
    bias1 = 1.0 - state.beta1 ** t
    bias2 = 1.0 - state.beta2 ** t
    new_params = {}
    for name, p in params.items():
        g = grads[name]
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g ** 2
        m_hat = state.m[name] / bias1
        v_hat = state.v[name] / bias2
        new_params[name] = p - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params
