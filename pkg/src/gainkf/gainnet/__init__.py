"""Learned Kalman-gain networks and recurrent baselines."""

from .arch import CascadeGainNet, JointGainNet, make_arch
from .baselines import ModelBasedRnnFilter, RnnRegressor, VanillaRnnFilter
from .checkpoint import load_checkpoint, save_checkpoint
from .configs import GAIN_CONFIGS, GainConfig, get_gain_config
from .features import FeatureMask, FeatureVector, compute_features
from .filtering import (
    KNetState,
    LearnedGainFilter,
    compute_feature_scales,
    init_state,
    knet_step,
    rollout,
)
from .layers import GRU_CONVENTION, bind_params, collect_gradients, param_count

__all__ = [
    "CascadeGainNet",
    "FeatureMask",
    "FeatureVector",
    "GAIN_CONFIGS",
    "GainConfig",
    "GRU_CONVENTION",
    "JointGainNet",
    "KNetState",
    "LearnedGainFilter",
    "ModelBasedRnnFilter",
    "RnnRegressor",
    "VanillaRnnFilter",
    "bind_params",
    "collect_gradients",
    "compute_feature_scales",
    "compute_features",
    "get_gain_config",
    "init_state",
    "knet_step",
    "load_checkpoint",
    "make_arch",
    "param_count",
    "rollout",
    "save_checkpoint",
]
