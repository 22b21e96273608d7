"""State-space models, noise parameterization, and trajectory synthesis.

Every model is an :class:`SSModel`: a state-evolution map ``f`` and an
observation map ``h`` with known dimensions and (optionally) analytic
Jacobians.  Factories below build the synthetic systems used in the
benchmarks: linear canonical-form systems, a component-wise sinusoidal /
quadratic toy system, the chaotic three-dimensional attractor with a
Taylor-series discretization, and the kinematic constant-velocity model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .data import Trajectory
from .exceptions import ShapeError, SimulationDivergedError
from .validation import as_matrix, as_vector, check_positive


def finite_difference_jacobian(func: Callable[[np.ndarray], np.ndarray],
                               x: np.ndarray,
                               out_dim: int) -> np.ndarray:
    """Central-difference Jacobian with per-coordinate step 1e-6*max(1,|x_i|)."""
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[0]
    J = np.empty((out_dim, m))
    for i in range(m):
        step = 1e-6 * max(1.0, abs(x[i]))
        xp = x.copy(); xp[i] += step
        xm = x.copy(); xm[i] -= step
        J[:, i] = (func(xp) - func(xm)) / (2.0 * step)
    return J


@dataclass(frozen=True)
class SSModel:
    """A discrete-time state-space model x_t = f(x_{t-1}) + w_t, y_t = h(x_t) + v_t.

    Immutable after construction and safe to share across threads.
    ``meta`` records how the model was built; it feeds the fingerprint
    used to distinguish full-information from mismatched runs.
    """

    m: int
    n: int
    f: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    f_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    h_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    f_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    h_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    meta: dict = field(default_factory=dict)

    def jac_f(self, x: np.ndarray) -> np.ndarray:
        """Jacobian of f at x; finite differences when no analytic form is attached."""
        if self.f_jacobian is not None:
            return np.asarray(self.f_jacobian(x), dtype=np.float64)
        return finite_difference_jacobian(self.f, x, self.m)

    def jac_h(self, x: np.ndarray) -> np.ndarray:
        if self.h_jacobian is not None:
            return np.asarray(self.h_jacobian(x), dtype=np.float64)
        return finite_difference_jacobian(self.h, x, self.n)

    def apply_f(self, X: np.ndarray) -> np.ndarray:
        """Apply f column-wise to an (m, B) matrix; vectorized when available."""
        if self.f_batch is not None:
            return self.f_batch(X)
        return np.column_stack([self.f(X[:, j]) for j in range(X.shape[1])])

    def apply_h(self, X: np.ndarray) -> np.ndarray:
        if self.h_batch is not None:
            return self.h_batch(X)
        return np.column_stack([self.h(X[:, j]) for j in range(X.shape[1])])

    def fingerprint(self) -> str:
        import hashlib
        import json

        payload = json.dumps(self.meta, sort_keys=True, default=repr)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class NoiseSpec:
    """Scalar noise variances; covariances realized as Q = q2*I, R = r2*I."""

    q2: float
    r2: float

    def __post_init__(self):
        check_positive(self.q2, "q2")
        check_positive(self.r2, "r2")

    @property
    def nu(self) -> float:
        """Process-to-observation variance ratio q2/r2 (linear, not dB)."""
        if self.r2 <= 0:
            raise ValueError("nu undefined for r2 == 0")
        return self.q2 / self.r2

    @property
    def nu_db(self) -> float:
        return 10.0 * math.log10(self.nu)

    @classmethod
    def from_db(cls, inv_r2_db: float, nu_db: float) -> "NoiseSpec":
        """Build from the 1/r^2 level and the ratio nu, both in dB."""
        r2 = 10.0 ** (-inv_r2_db / 10.0)
        q2 = r2 * 10.0 ** (nu_db / 10.0)
        return cls(q2=q2, r2=r2)

    def Q(self, m: int) -> np.ndarray:
        return self.q2 * np.eye(m)

    def R(self, n: int) -> np.ndarray:
        return self.r2 * np.eye(n)


# ---------------------------------------------------------------------------
# Linear systems
# ---------------------------------------------------------------------------

def linear_model(F, H) -> SSModel:
    """Linear system f(x) = F x, h(x) = H x with exact Jacobians attached."""
    F = as_matrix(F, name="F")
    H = as_matrix(H, name="H")
    if F.shape[0] != F.shape[1]:
        raise ShapeError(f"F must be square, got {F.shape}")
    if H.shape[1] != F.shape[0]:
        raise ShapeError(f"H has {H.shape[1]} columns, expected {F.shape[0]}")
    m, n = F.shape[0], H.shape[0]
    model = SSModel(
        m=m,
        n=n,
        f=lambda x, _F=F: _F @ x,
        h=lambda x, _H=H: _H @ x,
        f_jacobian=lambda x, _F=F: _F,
        h_jacobian=lambda x, _H=H: _H,
        f_batch=lambda X, _F=F: _F @ X,
        h_batch=lambda X, _H=H: _H @ X,
        meta={"kind": "linear", "F": F.tolist(), "H": H.tolist()},
    )
    return model


def canonical_F(m: int) -> np.ndarray:
    """Companion-form evolution matrix with all eigenvalues at 0.5.

    Ones on the superdiagonal and the (negated) coefficients of
    (z - 0.5)**m in the last row, which keeps the spectral radius at
    0.5 for every dimension.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    coeffs = np.polynomial.polynomial.polyfromroots([0.5] * m)  # ascending, monic
    F = np.zeros((m, m))
    if m > 1:
        F[np.arange(m - 1), np.arange(1, m)] = 1.0
    F[-1, :] = -coeffs[:m]
    return F


def exchange_H(m: int, n: Optional[int] = None) -> np.ndarray:
    """Row-reversed identity; for n < m, its first n rows."""
    n = m if n is None else n
    if not 1 <= n <= m:
        raise ValueError(f"need 1 <= n <= m, got n={n}, m={m}")
    return np.eye(m)[::-1][:n].copy()


def rotate_matrix(B, alpha_deg: float) -> np.ndarray:
    """Left-multiply a 2x2 matrix by the plane rotation R(alpha)."""
    B = as_matrix(B, name="B")
    if B.shape != (2, 2):
        raise ShapeError(f"rotate_matrix expects a 2x2 matrix, got {B.shape}")
    a = math.radians(alpha_deg)
    R = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    return R @ B


def plane_rotation(dim: int, theta_deg: float) -> np.ndarray:
    """Identity with the leading 2x2 block replaced by R(theta).

    Used to misalign observation matrices in dimensions above two; the
    rotation acts in the first-two-coordinates plane.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    R = np.eye(dim)
    a = math.radians(theta_deg)
    R[0, 0] = math.cos(a); R[0, 1] = -math.sin(a)
    R[1, 0] = math.sin(a); R[1, 1] = math.cos(a)
    return R


# ---------------------------------------------------------------------------
# Sinusoidal / quadratic toy system
# ---------------------------------------------------------------------------

TOY_FULL_PARAMS = {"alpha": 0.9, "beta": 1.1, "phi": 0.1 * math.pi, "delta": 0.01,
                   "a": 1.0, "b": 1.0, "c": 0.0}
TOY_PARTIAL_PARAMS = {"alpha": 1.0, "beta": 1.0, "phi": 0.0, "delta": 0.0,
                      "a": 1.0, "b": 1.0, "c": 0.0}


def toy_model(params: Optional[dict] = None, dim: int = 2) -> SSModel:
    """Component-wise sinusoidal evolution with a quadratic observation.

    f(x) = alpha*sin(beta*x + phi) + delta and h(x) = a*(b*x + c)^2,
    both applied element-wise on R^dim.
    """
    p = dict(TOY_FULL_PARAMS)
    if params:
        p.update(params)
    alpha, beta, phi, delta = p["alpha"], p["beta"], p["phi"], p["delta"]
    a, b, c = p["a"], p["b"], p["c"]

    def f(x):
        return alpha * np.sin(beta * x + phi) + delta

    def h(x):
        return a * (b * x + c) ** 2

    def f_jac(x):
        return np.diag(alpha * beta * np.cos(beta * x + phi))

    def h_jac(x):
        return np.diag(2.0 * a * b * (b * x + c))

    # f and h are elementwise, so the batched forms are the maps themselves
    return SSModel(m=dim, n=dim, f=f, h=h, f_jacobian=f_jac, h_jacobian=h_jac,
                   f_batch=f, h_batch=h,
                   meta={"kind": "toy", "dim": dim, **p})


# ---------------------------------------------------------------------------
# Chaotic attractor (three-dimensional) with Taylor discretization
# ---------------------------------------------------------------------------

def _attractor_A(x: np.ndarray) -> np.ndarray:
    """State-dependent drift matrix of the continuous-time system."""
    x1 = x[0]
    return np.array([[-10.0, 10.0, 0.0],
                     [28.0, -1.0, -x1],
                     [0.0, x1, -8.0 / 3.0]])


def lorenz_F(x, dtau: float, J: int) -> np.ndarray:
    """Truncated Taylor expansion of exp(A(x)*dtau): I + sum_{j<=J} (A*dtau)^j / j!."""
    if J < 1:
        raise ValueError("J must be >= 1")
    check_positive(dtau, "dtau")
    x = as_vector(x, 3, name="x")
    A = _attractor_A(x) * dtau
    F = np.eye(3)
    term = np.eye(3)
    for j in range(1, J + 1):
        term = term @ A
        F = F + term / math.factorial(j)
    return F


def _lorenz_f_batch(X: np.ndarray, dtau: float, J: int) -> np.ndarray:
    """Column-batched F(x) @ x via stacked matrix powers."""
    B = X.shape[1]
    A = np.zeros((B, 3, 3))
    A[:, 0, 0] = -10.0; A[:, 0, 1] = 10.0
    A[:, 1, 0] = 28.0; A[:, 1, 1] = -1.0; A[:, 1, 2] = -X[0]
    A[:, 2, 1] = X[0]; A[:, 2, 2] = -8.0 / 3.0
    A *= dtau
    F = np.broadcast_to(np.eye(3), (B, 3, 3)).copy()
    term = np.broadcast_to(np.eye(3), (B, 3, 3)).copy()
    for j in range(1, J + 1):
        term = term @ A
        F += term / math.factorial(j)
    return np.einsum("bij,jb->ib", F, X)


def spherical_h(x) -> np.ndarray:
    """Cartesian-to-spherical map (r, theta, phi), physics convention.

    r is the Euclidean norm, theta the polar angle from +z in [0, pi],
    phi the azimuth from +x in (-pi, pi].
    """
    x = as_vector(x, 3, name="x")
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise ValueError("spherical coordinates undefined at the origin")
    theta = math.acos(np.clip(x[2] / r, -1.0, 1.0))
    phi = math.atan2(x[1], x[0])
    return np.array([r, theta, phi])


def _spherical_jacobian(x: np.ndarray) -> np.ndarray:
    x = as_vector(x, 3, name="x")
    x1, x2, x3 = x
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise ValueError("spherical Jacobian undefined at the origin")
    rho2 = x1 * x1 + x2 * x2
    rho = math.sqrt(rho2)
    J = np.zeros((3, 3))
    J[0] = x / r
    if rho > 0:
        J[1, 0] = x1 * x3 / (r * r * rho)
        J[1, 1] = x2 * x3 / (r * r * rho)
        J[1, 2] = -rho / (r * r)
        J[2, 0] = -x2 / rho2
        J[2, 1] = x1 / rho2
    return J


def lorenz_model(dtau: float = 0.02, J: int = 5,
                 observation: str = "identity",
                 observation_matrix: Optional[np.ndarray] = None) -> SSModel:
    """Discrete evolution x_{t+1} = F(x_t) x_t for the chaotic attractor.

    The evolution Jacobian is left to finite differences: the analytic
    derivative of F(x)*x in x is not worth its complexity here.
    ``observation`` selects the emission map: "identity" (optionally
    composed with ``observation_matrix``) or "spherical".
    """
    check_positive(dtau, "dtau")

    def f(x, _dtau=dtau, _J=J):
        return lorenz_F(x, _dtau, _J) @ x

    def f_batch(X, _dtau=dtau, _J=J):
        return _lorenz_f_batch(X, _dtau, _J)

    meta = {"kind": "lorenz", "dtau": dtau, "J": J, "observation": observation}

    if observation == "identity":
        Hobs = np.eye(3) if observation_matrix is None else as_matrix(observation_matrix, (3, 3), "H")
        if observation_matrix is not None:
            meta["observation_matrix"] = Hobs.tolist()
        h = lambda x, _H=Hobs: _H @ x
        h_jac = lambda x, _H=Hobs: _H
        h_batch = lambda X, _H=Hobs: _H @ X
    elif observation == "spherical":
        if observation_matrix is not None:
            raise ValueError("observation_matrix only applies to identity observations")
        h = spherical_h
        h_jac = _spherical_jacobian
        h_batch = None
    else:
        raise ValueError(f"unknown observation kind {observation!r}")

    return SSModel(m=3, n=3, f=f, h=h, f_jacobian=None, h_jacobian=h_jac,
                   f_batch=f_batch, h_batch=h_batch, meta=meta)


# ---------------------------------------------------------------------------
# Kinematic constant-velocity model (position/velocity per axis)
# ---------------------------------------------------------------------------

def wiener_velocity_model(dtau: float, q2: float) -> tuple[SSModel, np.ndarray]:
    """Planar white-noise-acceleration model with velocity-only observations.

    State is (px, vx, py, vy); per axis F = [[1, dtau], [0, 1]] and
    Q_axis = q2 * [[dtau^3/3, dtau^2/2], [dtau^2/2, dtau]].  Returns the
    block-diagonal 4x4 system plus its structured process covariance.
    """
    check_positive(dtau, "dtau", strict=True)
    check_positive(q2, "q2")
    F_axis = np.array([[1.0, dtau], [0.0, 1.0]])
    Q_axis = q2 * np.array([[dtau ** 3 / 3.0, dtau ** 2 / 2.0],
                            [dtau ** 2 / 2.0, dtau]])
    F = np.zeros((4, 4)); Q = np.zeros((4, 4))
    F[:2, :2] = F_axis; F[2:, 2:] = F_axis
    Q[:2, :2] = Q_axis; Q[2:, 2:] = Q_axis
    H = np.array([[0.0, 1.0, 0.0, 0.0],
                  [0.0, 0.0, 0.0, 1.0]])
    model = linear_model(F, H)
    model.meta.update({"kind": "wiener_velocity", "dtau": dtau, "q2": q2})
    return model, Q


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def simulate(model: SSModel, noise: NoiseSpec, x0, T: int, seed,
             Q: Optional[np.ndarray] = None,
             R: Optional[np.ndarray] = None) -> Trajectory:
    """Roll the model forward for T steps under Gaussian noise.

    Bit-reproducible for a fixed seed.  ``Q``/``R`` override the
    isotropic covariances implied by ``noise`` when a structured
    covariance is needed (e.g. the kinematic model).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    x0 = as_vector(x0, model.m, name="x0")
    rng = np.random.default_rng(seed)

    Qc = noise.Q(model.m) if Q is None else as_matrix(Q, (model.m, model.m), "Q")
    Rc = noise.R(model.n) if R is None else as_matrix(R, (model.n, model.n), "R")
    Lq = np.linalg.cholesky(Qc) if np.any(Qc) else np.zeros_like(Qc)
    Lr = np.linalg.cholesky(Rc) if np.any(Rc) else np.zeros_like(Rc)

    W = Lq @ rng.standard_normal((model.m, T))
    V = Lr @ rng.standard_normal((model.n, T))

    X = np.empty((model.m, T))
    Y = np.empty((model.n, T))
    x = x0
    for t in range(T):
        x = model.f(x) + W[:, t]
        if not np.all(np.isfinite(x)):
            raise SimulationDivergedError(index=t + 1)
        X[:, t] = x
        Y[:, t] = model.h(x) + V[:, t]
    return Trajectory(x0=x0, X=X, Y=Y)


def sample_x0(m: int, rng: np.random.Generator, kind: str = "standard_normal",
              value=None, scale: float = 1.0) -> np.ndarray:
    """Initial-state sampler used by dataset synthesis.

    "standard_normal" draws N(0, scale^2 I); "fixed" repeats ``value``.
    """
    if kind == "standard_normal":
        return scale * rng.standard_normal(m)
    if kind == "fixed":
        if value is None:
            raise ValueError("fixed x0 requires a value")
        return as_vector(value, m, name="x0")
    raise ValueError(f"unknown x0 kind {kind!r}")


def simulate_dataset(model: SSModel, noise: NoiseSpec, count: int, T, seed,
                     split: str = "train",
                     x0_kind: str = "standard_normal",
                     x0_value=None,
                     x0_scale: float = 1.0,
                     Q: Optional[np.ndarray] = None,
                     R: Optional[np.ndarray] = None):
    """Simulate ``count`` independent trajectories with per-trajectory seeds.

    Seeds derive from a splittable SeedSequence so trajectories could be
    generated in parallel without changing the result.  ``T`` may be an
    int or a per-trajectory sequence of lengths.
    """
    from .data import Dataset

    if count < 1:
        raise ValueError("count must be >= 1")
    lengths = [int(T)] * count if np.isscalar(T) else [int(t) for t in T]
    if len(lengths) != count:
        raise ValueError("length list must match count")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(count + 1)
    x0_rng = np.random.default_rng(children[0])
    trajectories = []
    for i in range(count):
        x0 = sample_x0(model.m, x0_rng, kind=x0_kind, value=x0_value, scale=x0_scale)
        trajectories.append(simulate(model, noise, x0, lengths[i], children[i + 1], Q=Q, R=R))
    return Dataset(trajectories=trajectories, split=split)


def decimate(traj: Trajectory, k: int) -> Trajectory:
    """Keep every k-th sample; k must divide the trajectory length."""
    if k <= 0:
        raise ValueError("decimation factor must be positive")
    if traj.T % k != 0:
        raise ValueError(f"k={k} does not divide T={traj.T}")
    return Trajectory(x0=traj.x0.copy(), X=traj.X[:, k - 1::k].copy(), Y=traj.Y[:, k - 1::k].copy())


def add_observation_noise(traj: Trajectory, r2: float, seed) -> Trajectory:
    """Return a copy with fresh N(0, r2 I) noise added to the observations."""
    rng = np.random.default_rng(seed)
    V = math.sqrt(r2) * rng.standard_normal(traj.Y.shape)
    return Trajectory(x0=traj.x0.copy(), X=traj.X.copy(), Y=traj.Y + V)
