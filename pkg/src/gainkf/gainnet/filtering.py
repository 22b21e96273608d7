"""The learned-gain filter: prediction through the known model, update
through a network-produced gain.

The recursion mirrors the model-based filter's flow but carries no
covariance: the prediction step propagates first moments only, and the
gain comes from the recurrent network instead of a Riccati update.  The
whole step runs on an autodiff tape so training backpropagates through
both the network and the state recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..base import StateEstimator, check_fitted
from ..data import Trajectory
from ..exceptions import FilterDivergedError
from ..filters.kalman import FilterStepRecord
from ..ssm import SSModel
from .arch import CascadeGainNet, JointGainNet, make_arch
from .configs import get_gain_config
from .features import FeatureMask
from .layers import bind_params, param_count


@dataclass
class KNetState:
    """Carried state of the learned filter: enough to form all features.

    All entries are (dim, B) column batches; ``y_prev`` is a plain array
    because past observations never need gradients.
    """

    posterior: ad.Var           # xhat_{t|t}
    prev_posterior: ad.Var      # xhat_{t-1|t-1}
    prev_prior: ad.Var          # xhat_{t|t-1}
    y_prev: np.ndarray
    hidden: list[ad.Var]


def init_state(tape: ad.Tape, arch, model: SSModel, x0_cols: np.ndarray) -> KNetState:
    """State before the first step: y_0 := h(xhat_0), zero state differences."""
    x0_cols = np.atleast_2d(np.asarray(x0_cols, dtype=np.float64))
    if x0_cols.shape[0] != model.m:
        x0_cols = x0_cols.T
    posterior = tape.leaf(x0_cols)
    hidden = [tape.leaf(h) for h in arch.init_hidden(batch=x0_cols.shape[1])]
    return KNetState(
        posterior=posterior,
        prev_posterior=posterior,
        prev_prior=posterior,
        y_prev=model.apply_h(x0_cols),
        hidden=hidden,
    )


def knet_step(tape: ad.Tape, arch, pvars: dict[str, ad.Var], model: SSModel,
              state: KNetState, y_cols: np.ndarray,
              feature_scales: dict[str, float] | None = None):
    """One prediction+update step on the tape.

    Returns (posterior Var, new state, step info dict).  The info dict
    carries the prior, predicted observation, innovation, and flat gain
    Vars for record-keeping and for gradient introspection.
    """
    try:
        prior = ad.model_map(state.posterior, model.f, model.jac_f, model.m, tag="evolution")
        yhat = ad.model_map(prior, model.h, model.jac_h, model.n, tag="observation")
    except FloatingPointError as exc:
        raise FilterDivergedError(str(exc))

    y_leaf = tape.leaf(y_cols)
    innovation = ad.subtract(y_leaf, yhat)

    mask: FeatureMask = arch.mask
    parts: dict[str, ad.Var] = {}
    if mask.f1:
        parts["f1"] = tape.leaf(y_cols - state.y_prev)
    if mask.f2:
        parts["f2"] = innovation
    if mask.f3:
        parts["f3"] = ad.subtract(state.posterior, state.prev_posterior)
    if mask.f4:
        parts["f4"] = ad.subtract(state.posterior, state.prev_prior)
    if feature_scales:
        parts = {k: ad.scalar_multiply(feature_scales.get(k, 1.0), v)
                 for k, v in parts.items()}

    if arch.kind == "joint":
        feat = ad.concat([parts[k] for k in mask.names()])
        k_flat, hidden = arch.forward(pvars, feat, state.hidden)
    else:
        k_flat, hidden = arch.forward(pvars, parts, state.hidden)

    correction = ad.gain_apply(k_flat, innovation, model.m, model.n)
    posterior = ad.add(prior, correction)
    if not np.all(np.isfinite(posterior.value)):
        raise FilterDivergedError("learned filter produced a non-finite estimate")

    new_state = KNetState(posterior=posterior, prev_posterior=state.posterior,
                          prev_prior=prior, y_prev=np.array(y_cols, copy=True),
                          hidden=hidden)
    info = {"prior": prior, "predicted_obs": yhat, "innovation": innovation,
            "gain_flat": k_flat}
    return posterior, new_state, info


def rollout(tape: ad.Tape, arch, pvars: dict[str, ad.Var], model: SSModel,
            Y_batch: np.ndarray, x0_cols: np.ndarray,
            feature_scales: dict[str, float] | None = None,
            collect_info: bool = False):
    """Run the learned filter over a (n, T, B) observation batch.

    Returns the per-step posterior Vars and, optionally, the per-step
    info dicts.
    """
    state = init_state(tape, arch, model, x0_cols)
    posteriors, infos = [], []
    for t in range(Y_batch.shape[1]):
        posterior, state, info = knet_step(tape, arch, pvars, model, state,
                                           Y_batch[:, t, :], feature_scales)
        posteriors.append(posterior)
        if collect_info:
            infos.append(info)
    return (posteriors, infos) if collect_info else (posteriors, None)


class LearnedGainFilter(StateEstimator):
    """Filter whose gain is produced by a trained recurrent network.

    ``config`` selects one of the named configurations (C1-C4); the
    architecture/feature arguments below override its pieces when set.
    ``fit`` trains end-to-end on a dataset (see gainkf.trainer); until
    then the filter can run with externally supplied parameters via
    :meth:`set_network_parameters` (e.g. zeros, or a frozen gain).
    """

    def __init__(self, model: SSModel, config: str = "C1",
                 features: tuple[str, ...] | None = None,
                 arch: str | None = None,
                 rho: int = 10, gru_layers: int = 1, in_mult: int = 5,
                 seed: int = 0, standardize: bool = False,
                 train_config=None):
        self.model = model
        self.config = config
        self.features = features
        self.arch = arch
        self.rho = rho
        self.gru_layers = gru_layers
        self.in_mult = in_mult
        self.seed = seed
        self.standardize = standardize
        self.train_config = train_config

    # -- construction ------------------------------------------------------

    def build_arch(self):
        cfg = get_gain_config(self.config)
        kind = self.arch if self.arch is not None else cfg.arch
        names = self.features if self.features is not None else cfg.features
        mask = FeatureMask.from_names(names)
        return make_arch(kind, self.model.m, self.model.n, mask,
                         rho=self.rho, gru_layers=self.gru_layers, in_mult=self.in_mult)

    def initial_parameters(self) -> dict[str, np.ndarray]:
        return self.build_arch().init_params(self.seed)

    def set_network_parameters(self, params: dict[str, np.ndarray],
                               feature_scales: dict[str, float] | None = None):
        self.params_ = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        self.feature_scales_ = feature_scales
        return self

    def network_parameter_count(self) -> int:
        params = self.params_ if hasattr(self, "params_") else self.initial_parameters()
        return param_count(params)

    # -- training ----------------------------------------------------------

    def _training_rollout(self, tape, pvars, Y_batch, x0_cols, feature_scales=None):
        posteriors, _ = rollout(tape, self.build_arch(), pvars, self.model,
                                Y_batch, x0_cols, feature_scales=feature_scales)
        return posteriors

    def fit(self, dataset, validation=None):
        from ..trainer import TrainConfig, train

        cfg = self.train_config if self.train_config is not None else TrainConfig()
        if cfg.bptt is None:
            cfg = cfg.replace(bptt=get_gain_config(self.config).bptt)
        scales = (compute_feature_scales(dataset, self.build_arch().mask)
                  if self.standardize else None)
        checkpoint = train(dataset, self.model, self, cfg, validation=validation,
                           feature_scales=scales)
        self.set_network_parameters(checkpoint.params, feature_scales=scales)
        self.checkpoint_ = checkpoint
        return self

    # -- inference ---------------------------------------------------------

    def _require_params(self):
        check_fitted(self, "params_")
        return self.params_, getattr(self, "feature_scales_", None)

    def filter_steps(self, Y, x0) -> list[FilterStepRecord]:
        params, scales = self._require_params()
        Y, x0 = self._check_inputs(Y, x0, self.model.n, self.model.m)
        arch = self.build_arch()
        tape = ad.Tape()
        pvars = bind_params(tape, params)
        posteriors, infos = rollout(tape, arch, pvars, self.model,
                                    Y[:, :, None], x0[:, None],
                                    feature_scales=scales, collect_info=True)
        records = []
        for posterior, info in zip(posteriors, infos):
            records.append(FilterStepRecord(
                prior_mean=info["prior"].value[:, 0].copy(),
                prior_cov=None,
                predicted_obs=info["predicted_obs"].value[:, 0].copy(),
                innovation=info["innovation"].value[:, 0].copy(),
                gain=info["gain_flat"].value[:, 0].reshape(self.model.m, self.model.n).copy(),
                posterior_mean=posterior.value[:, 0].copy(),
                posterior_cov=None))
        return records

    def filter_trajectory(self, Y, x0) -> np.ndarray:
        params, scales = self._require_params()
        Y, x0 = self._check_inputs(Y, x0, self.model.n, self.model.m)
        arch = self.build_arch()
        tape = ad.Tape()
        pvars = bind_params(tape, params)
        posteriors, _ = rollout(tape, arch, pvars, self.model,
                                Y[:, :, None], x0[:, None], feature_scales=scales)
        return np.column_stack([p.value[:, 0] for p in posteriors])

    def step_op_log(self, Y, x0) -> list[str]:
        """Tape operations recorded by a single filtering step.

        Exposed so tests can assert the structural claim that a learned
        step involves no matrix inversion or covariance propagation.
        """
        params, scales = self._require_params()
        Y, x0 = self._check_inputs(Y, x0, self.model.n, self.model.m)
        arch = self.build_arch()
        tape = ad.Tape()
        pvars = bind_params(tape, params)
        state = init_state(tape, arch, self.model, x0[:, None])
        before = len(tape)
        knet_step(tape, arch, pvars, self.model, state, Y[:, :1], scales)
        return tape.op_log()[before:]


def compute_feature_scales(dataset, mask: FeatureMask) -> dict[str, float]:
    """Per-feature constant scales from the observed-difference spread.

    Observation-side features scale by the std of consecutive
    observation differences, state-side features by the std of
    consecutive ground-truth state differences; this keeps ill-scaled
    models from saturating the network input.
    """
    obs_diffs = np.concatenate([(tr.Y[:, 1:] - tr.Y[:, :-1]).ravel()
                                for tr in dataset if tr.T > 1] or [np.zeros(1)])
    state_diffs = np.concatenate([(tr.X[:, 1:] - tr.X[:, :-1]).ravel()
                                  for tr in dataset if tr.T > 1] or [np.zeros(1)])
    s_obs = float(np.std(obs_diffs)) or 1.0
    s_state = float(np.std(state_diffs)) or 1.0
    return {"f1": 1.0 / s_obs, "f2": 1.0 / s_obs,
            "f3": 1.0 / s_state, "f4": 1.0 / s_state}
