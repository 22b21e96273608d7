"""Input features for the gain network.

Four difference signals are available, concatenated in fixed order:

* f1, observation difference:      y_t - y_{t-1}
* f2, innovation difference:       y_t - yhat_{t|t-1}
* f3, forward evolution difference: xhat_{t-1|t-1} - xhat_{t-2|t-2}
* f4, forward update difference:    xhat_{t-1|t-1} - xhat_{t-1|t-2}

Differencing removes the predictable component, leaving signals driven
mostly by the noise statistics the network has to infer.  At the first
step, y_0 is taken as h(xhat_0) and the two state differences are zero,
which keeps every feature well-defined from t=1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_CANONICAL = ("f1", "f2", "f3", "f4")


@dataclass(frozen=True)
class FeatureMask:
    f1: bool = False
    f2: bool = False
    f3: bool = False
    f4: bool = False

    @classmethod
    def from_names(cls, names) -> "FeatureMask":
        names = {str(n).lower() for n in names}
        unknown = names - set(_CANONICAL)
        if unknown:
            raise ValueError(f"unknown feature names: {sorted(unknown)}")
        if not names:
            raise ValueError("at least one feature must be active")
        return cls(**{k: k in names for k in _CANONICAL})

    def names(self) -> tuple[str, ...]:
        return tuple(k for k in _CANONICAL if getattr(self, k))

    def width(self, m: int, n: int) -> int:
        dims = {"f1": n, "f2": n, "f3": m, "f4": m}
        return sum(dims[k] for k in self.names())


@dataclass
class FeatureVector:
    """Computed feature blocks; inactive entries are None."""

    f1: np.ndarray | None
    f2: np.ndarray | None
    f3: np.ndarray | None
    f4: np.ndarray | None
    mask: FeatureMask

    def stacked(self) -> np.ndarray:
        parts = [getattr(self, k) for k in self.mask.names()]
        return np.concatenate(parts, axis=0)


def compute_features(state, y: np.ndarray, yhat: np.ndarray,
                     mask: FeatureMask) -> FeatureVector:
    """Feature blocks from a filter state and the step's observations.

    ``state`` is any object exposing posterior / prev_posterior /
    prev_prior / y_prev (column arrays); the learned filter's carried
    state qualifies.
    """
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    return FeatureVector(
        f1=(y - state.y_prev) if mask.f1 else None,
        f2=(y - yhat) if mask.f2 else None,
        f3=(state.posterior - state.prev_posterior) if mask.f3 else None,
        f4=(state.posterior - state.prev_prior) if mask.f4 else None,
        mask=mask,
    )
