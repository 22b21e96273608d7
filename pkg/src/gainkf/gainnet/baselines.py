"""End-to-end recurrent baselines the learned-gain filter is compared against."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..base import StateEstimator, check_fitted
from ..exceptions import FilterDivergedError
from ..ssm import SSModel
from .layers import (OUTPUT_INIT_SCALE, bind_params, gru_step, init_gru,
                     init_linear, linear)


@dataclass(frozen=True)
class RnnRegressor:
    """FC in -> GRU stack -> FC out, a plain sequence-to-sequence regressor."""

    in_dim: int
    out_dim: int
    hidden: int
    gru_layers: int = 1
    fc_width: int | None = None

    @property
    def input_width(self) -> int:
        return self.fc_width if self.fc_width is not None else self.hidden

    def init_params(self, seed) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        params: dict[str, np.ndarray] = {}
        init_linear(params, "fc_in", self.in_dim, self.input_width, rng)
        in_dim = self.input_width
        for layer in range(self.gru_layers):
            init_gru(params, f"gru{layer}", in_dim, self.hidden, rng)
            in_dim = self.hidden
        init_linear(params, "fc_out", self.hidden, self.out_dim, rng,
                    scale=OUTPUT_INIT_SCALE)
        return params

    def init_hidden(self, batch: int = 1) -> list[np.ndarray]:
        return [np.zeros((self.hidden, batch)) for _ in range(self.gru_layers)]

    def forward(self, p: dict[str, ad.Var], x: ad.Var,
                hidden: list[ad.Var]) -> tuple[ad.Var, list[ad.Var]]:
        x = ad.tanh(linear(p, "fc_in", x))
        new_hidden = []
        for layer, h in enumerate(hidden):
            x = gru_step(p, f"gru{layer}", x, h)
            new_hidden.append(x)
        return linear(p, "fc_out", x), new_hidden


class VanillaRnnFilter(StateEstimator):
    """Maps the raw observation straight to a state estimate.

    Completely model-agnostic; capacity matches the learned-gain filter
    (hidden width rho*(m^2+n^2)) so comparisons isolate the design, not
    the parameter budget.
    """

    def __init__(self, m: int, n: int, rho: int = 10, gru_layers: int = 1,
                 seed: int = 0, train_config=None):
        self.m = m
        self.n = n
        self.rho = rho
        self.gru_layers = gru_layers
        self.seed = seed
        self.train_config = train_config

    def build_net(self) -> RnnRegressor:
        return RnnRegressor(in_dim=self.n, out_dim=self.m,
                            hidden=self.rho * (self.m ** 2 + self.n ** 2),
                            gru_layers=self.gru_layers)

    def initial_parameters(self):
        return self.build_net().init_params(self.seed)

    def set_network_parameters(self, params, feature_scales=None):
        self.params_ = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        return self

    def _training_rollout(self, tape, pvars, Y_batch, x0_cols, feature_scales=None):
        net = self.build_net()
        hidden = [tape.leaf(h) for h in net.init_hidden(batch=Y_batch.shape[2])]
        estimates = []
        for t in range(Y_batch.shape[1]):
            out, hidden = net.forward(pvars, tape.leaf(Y_batch[:, t, :]), hidden)
            estimates.append(out)
        return estimates

    def fit(self, dataset, validation=None):
        from ..trainer import TrainConfig, train

        cfg = self.train_config if self.train_config is not None else TrainConfig()
        if cfg.bptt is None:
            cfg = cfg.replace(bptt="v3")
        checkpoint = train(dataset, None, self, cfg, validation=validation)
        self.set_network_parameters(checkpoint.params)
        self.checkpoint_ = checkpoint
        return self

    def filter_trajectory(self, Y, x0) -> np.ndarray:
        check_fitted(self, "params_")
        Y, x0 = self._check_inputs(Y, x0, self.n, self.m)
        tape = ad.Tape()
        pvars = bind_params(tape, self.params_)
        estimates = self._training_rollout(tape, pvars, Y[:, :, None], x0[:, None])
        return np.column_stack([e.value[:, 0] for e in estimates])


class ModelBasedRnnFilter(StateEstimator):
    """Predicts through the known evolution model, learns the increment.

    The network output is an additive correction from the prior to the
    posterior.  With ``use_differences`` the network consumes the
    innovation and the previous update difference instead of the raw
    observation, which is what makes its learning transferable to longer
    horizons.
    """

    def __init__(self, model: SSModel, use_differences: bool = False,
                 rho: int = 10, gru_layers: int = 1, seed: int = 0,
                 train_config=None):
        self.model = model
        self.use_differences = use_differences
        self.rho = rho
        self.gru_layers = gru_layers
        self.seed = seed
        self.train_config = train_config

    def build_net(self) -> RnnRegressor:
        m, n = self.model.m, self.model.n
        in_dim = (n + m) if self.use_differences else n
        return RnnRegressor(in_dim=in_dim, out_dim=m,
                            hidden=self.rho * (m ** 2 + n ** 2),
                            gru_layers=self.gru_layers)

    def initial_parameters(self):
        return self.build_net().init_params(self.seed)

    def set_network_parameters(self, params, feature_scales=None):
        self.params_ = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        return self

    def _training_rollout(self, tape, pvars, Y_batch, x0_cols, feature_scales=None):
        net = self.build_net()
        model = self.model
        hidden = [tape.leaf(h) for h in net.init_hidden(batch=Y_batch.shape[2])]
        posterior = tape.leaf(x0_cols)
        prev_prior = posterior
        estimates = []
        for t in range(Y_batch.shape[1]):
            try:
                prior = ad.model_map(posterior, model.f, model.jac_f, model.m,
                                     tag="evolution")
            except FloatingPointError as exc:
                raise FilterDivergedError(str(exc))
            y_leaf = tape.leaf(Y_batch[:, t, :])
            if self.use_differences:
                yhat = ad.model_map(prior, model.h, model.jac_h, model.n,
                                    tag="observation")
                inputs = ad.concat([ad.subtract(y_leaf, yhat),
                                    ad.subtract(posterior, prev_prior)])
            else:
                inputs = y_leaf
            delta, hidden = net.forward(pvars, inputs, hidden)
            prev_prior = prior
            posterior = ad.add(prior, delta)
            if not np.all(np.isfinite(posterior.value)):
                raise FilterDivergedError("baseline produced a non-finite estimate")
            estimates.append(posterior)
        return estimates

    def fit(self, dataset, validation=None):
        from ..trainer import TrainConfig, train

        cfg = self.train_config if self.train_config is not None else TrainConfig()
        if cfg.bptt is None:
            cfg = cfg.replace(bptt="v3")
        checkpoint = train(dataset, self.model, self, cfg, validation=validation)
        self.set_network_parameters(checkpoint.params)
        self.checkpoint_ = checkpoint
        return self

    def filter_trajectory(self, Y, x0) -> np.ndarray:
        check_fitted(self, "params_")
        Y, x0 = self._check_inputs(Y, x0, self.model.n, self.model.m)
        tape = ad.Tape()
        pvars = bind_params(tape, self.params_)
        estimates = self._training_rollout(tape, pvars, Y[:, :, None], x0[:, None])
        return np.column_stack([e.value[:, 0] for e in estimates])
