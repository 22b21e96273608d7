"""Parameter initialization and tape-level layers (linear, GRU)."""

from __future__ import annotations

import math

import numpy as np

from .. import autodiff as ad

GRU_CONVENTION = "gru-zrc-v1"
# z = sigmoid(Wz x + Uz h + bz); r = sigmoid(Wr x + Ur h + br)
# c = tanh(Wc x + Uc (r*h) + bc); h' = (1 - z)*h + z*c


OUTPUT_INIT_SCALE = 0.01
# Output layers start ~100x smaller than 1/sqrt(fan_in) so the initial
# gain is near zero (pure prediction).  Full-size random gains make the
# update a positive-feedback loop on marginally stable models and the
# first rollouts explode.


def _uniform(rng: np.random.Generator, rows: int, cols: int, fan_in: int,
             scale: float = 1.0) -> np.ndarray:
    bound = scale / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(rows, cols))


def init_linear(params: dict, prefix: str, in_dim: int, out_dim: int,
                rng: np.random.Generator, scale: float = 1.0) -> None:
    params[f"{prefix}.W"] = _uniform(rng, out_dim, in_dim, in_dim, scale)
    params[f"{prefix}.b"] = _uniform(rng, out_dim, 1, in_dim, scale)


def init_gru(params: dict, prefix: str, in_dim: int, hidden: int,
             rng: np.random.Generator) -> None:
    for gate in ("z", "r", "c"):
        params[f"{prefix}.W{gate}"] = _uniform(rng, hidden, in_dim, in_dim)
        params[f"{prefix}.U{gate}"] = _uniform(rng, hidden, hidden, hidden)
        params[f"{prefix}.b{gate}"] = _uniform(rng, hidden, 1, hidden)


def linear(p: dict[str, ad.Var], prefix: str, x: ad.Var) -> ad.Var:
    return ad.add(ad.matmul(p[f"{prefix}.W"], x), p[f"{prefix}.b"])


def gru_step(p: dict[str, ad.Var], prefix: str, x: ad.Var, h: ad.Var) -> ad.Var:
    z = ad.sigmoid(ad.add(ad.add(ad.matmul(p[f"{prefix}.Wz"], x),
                                 ad.matmul(p[f"{prefix}.Uz"], h)),
                          p[f"{prefix}.bz"]))
    r = ad.sigmoid(ad.add(ad.add(ad.matmul(p[f"{prefix}.Wr"], x),
                                 ad.matmul(p[f"{prefix}.Ur"], h)),
                          p[f"{prefix}.br"]))
    c = ad.tanh(ad.add(ad.add(ad.matmul(p[f"{prefix}.Wc"], x),
                              ad.matmul(p[f"{prefix}.Uc"], ad.hadamard(r, h))),
                       p[f"{prefix}.bc"]))
    # h' = (1 - z)*h + z*c, written as h + z*(c - h)
    return ad.add(h, ad.hadamard(z, ad.subtract(c, h)))


def bind_params(tape: ad.Tape, params: dict[str, np.ndarray]) -> dict[str, ad.Var]:
    """Register every parameter tensor as a leaf on the tape."""
    return {name: tape.leaf(value, name=name) for name, value in params.items()}


def collect_gradients(pvars: dict[str, ad.Var]) -> dict[str, np.ndarray]:
    """Gradients after backward(); absent adjoints count as zero."""
    return {name: (var.grad if var.grad is not None else np.zeros_like(var.value))
            for name, var in pvars.items()}


def param_count(params: dict[str, np.ndarray]) -> int:
    return int(sum(v.size for v in params.values()))
