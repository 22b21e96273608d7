"""The two gain-network architectures.

``JointGainNet`` tracks all second-order statistics implicitly in one
(optionally stacked) GRU whose hidden width is an integer multiple of
m^2 + n^2.  ``CascadeGainNet`` dedicates one GRU each to the process
noise, the predicted state covariance, and the innovation covariance
(hidden sizes m^2, m^2, n^2), wired in a cascade that mirrors how the
gain is assembled from those quantities; it is far smaller but less
abstract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from .features import FeatureMask
from .layers import OUTPUT_INIT_SCALE, gru_step, init_gru, init_linear, linear


@dataclass(frozen=True)
class JointGainNet:
    """FC in -> GRU stack -> FC out, reshaped per column to an (m, n) gain."""

    m: int
    n: int
    mask: FeatureMask
    rho: int = 10
    gru_layers: int = 1
    fc_width: int | None = None   # defaults to the GRU width

    kind = "joint"

    @property
    def hidden_size(self) -> int:
        return self.rho * (self.m ** 2 + self.n ** 2)

    @property
    def input_width(self) -> int:
        return self.fc_width if self.fc_width is not None else self.hidden_size

    def hidden_sizes(self) -> list[int]:
        return [self.hidden_size] * self.gru_layers

    def init_params(self, seed) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        params: dict[str, np.ndarray] = {}
        feat = self.mask.width(self.m, self.n)
        init_linear(params, "fc_in", feat, self.input_width, rng)
        in_dim = self.input_width
        for layer in range(self.gru_layers):
            init_gru(params, f"gru{layer}", in_dim, self.hidden_size, rng)
            in_dim = self.hidden_size
        init_linear(params, "fc_out", self.hidden_size, self.m * self.n, rng,
                    scale=OUTPUT_INIT_SCALE)
        return params

    def init_hidden(self, batch: int = 1) -> list[np.ndarray]:
        return [np.zeros((self.hidden_size, batch)) for _ in range(self.gru_layers)]

    def forward(self, p: dict[str, ad.Var], feat: ad.Var,
                hidden: list[ad.Var]) -> tuple[ad.Var, list[ad.Var]]:
        x = ad.tanh(linear(p, "fc_in", feat))
        new_hidden = []
        for layer, h in enumerate(hidden):
            x = gru_step(p, f"gru{layer}", x, h)
            new_hidden.append(x)
        k_flat = linear(p, "fc_out", x)
        return k_flat, new_hidden


@dataclass(frozen=True)
class CascadeGainNet:
    """Three GRUs in cascade with FC links, head over the last two states.

    The update difference drives the process-noise GRU; its state,
    through an FC link, joins the evolution difference to drive the
    state-covariance GRU; that state, through another FC link, joins the
    observation differences to drive the innovation-covariance GRU.
    The gain comes from one FC layer over the concatenated state- and
    innovation-covariance GRU states, mirroring how the model-based gain
    combines those two matrices.  Uses all four features.
    """

    m: int
    n: int
    mask: FeatureMask = field(default=FeatureMask(True, True, True, True))
    in_mult: int = 5

    kind = "cascade"

    def __post_init__(self):
        if self.mask.names() != ("f1", "f2", "f3", "f4"):
            raise ValueError("the cascade architecture consumes all four features")

    def hidden_sizes(self) -> list[int]:
        return [self.m ** 2, self.m ** 2, self.n ** 2]

    def init_params(self, seed) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        m, n, k = self.m, self.n, self.in_mult
        hq, hs, hv = m ** 2, m ** 2, n ** 2
        params: dict[str, np.ndarray] = {}
        init_linear(params, "fc_update", m, m * k, rng)        # f4 -> Q-GRU
        init_gru(params, "gru_q", m * k, hq, rng)
        init_linear(params, "fc_evol", m, m * k, rng)          # f3 -> Sigma-GRU
        init_linear(params, "link_q", hq, hq, rng)             # Q-GRU -> Sigma-GRU
        init_gru(params, "gru_sigma", hq + m * k, hs, rng)
        init_linear(params, "fc_obs", 2 * n, 2 * n * k, rng)   # (f1, f2) -> S-GRU
        init_linear(params, "link_sigma", hs, hv, rng)         # Sigma-GRU -> S-GRU
        init_gru(params, "gru_s", hv + 2 * n * k, hv, rng)
        init_linear(params, "head", hs + hv, m * n, rng, scale=OUTPUT_INIT_SCALE)
        return params

    def init_hidden(self, batch: int = 1) -> list[np.ndarray]:
        return [np.zeros((size, batch)) for size in self.hidden_sizes()]

    def forward(self, p: dict[str, ad.Var], feat_parts: dict[str, ad.Var],
                hidden: list[ad.Var]) -> tuple[ad.Var, list[ad.Var]]:
        h_q, h_sigma, h_s = hidden
        a_update = ad.tanh(linear(p, "fc_update", feat_parts["f4"]))
        h_q = gru_step(p, "gru_q", a_update, h_q)

        a_evol = ad.tanh(linear(p, "fc_evol", feat_parts["f3"]))
        q_link = ad.tanh(linear(p, "link_q", h_q))
        h_sigma = gru_step(p, "gru_sigma", ad.concat([q_link, a_evol]), h_sigma)

        a_obs = ad.tanh(linear(p, "fc_obs", ad.concat([feat_parts["f1"], feat_parts["f2"]])))
        sigma_link = ad.tanh(linear(p, "link_sigma", h_sigma))
        h_s = gru_step(p, "gru_s", ad.concat([sigma_link, a_obs]), h_s)

        k_flat = linear(p, "head", ad.concat([h_sigma, h_s]))
        return k_flat, [h_q, h_sigma, h_s]


def make_arch(kind: str, m: int, n: int, mask: FeatureMask, rho: int = 10,
              gru_layers: int = 1, in_mult: int = 5):
    if kind == "joint":
        return JointGainNet(m=m, n=n, mask=mask, rho=rho, gru_layers=gru_layers)
    if kind == "cascade":
        return CascadeGainNet(m=m, n=n, mask=mask, in_mult=in_mult)
    raise ValueError(f"unknown architecture kind {kind!r}")
