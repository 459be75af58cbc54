"""Synthetic data generators for the simulation studies.

Three designs are covered:

* a predictive regression with an autoregressive predictor and moving-average
  h-step disturbances (``Dgp1Spec``),
* a factor-augmented regression whose single common factor is recovered from
  a cross-section by principal components (``Dgp2Spec``),
* a mildly integrated VAR whose autoregressive roots drift toward unity with
  the sample size (``Dgp3Spec``).

Every generator is a deterministic function of (spec, RngStream): identical
inputs reproduce identical paths bit for bit, and distinct stream ids give
statistically independent replications.  All recursions start at zero and a
burn-in prefix is discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.signal import lfilter

from .errors import DegenerateSpectrum, InvalidSpec

# Innovation covariances used throughout the predictive-regression studies:
# uncorrelated shocks, and strongly negatively correlated shocks (corr -0.8).
SIGMA1 = np.array([[1.0, 0.0], [0.0, 0.25]])
SIGMA2 = np.array([[1.0, -0.4], [-0.4, 0.25]])

EIGENGAP_RTOL = 1e-12  # relative gap below which the top eigenvalue is not simple


@dataclass(frozen=True)
class RngStream:
    """Reproducible, splittable randomness: (base_seed, stream_id) -> generator."""

    base_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.base_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


def _check_cov(name: str, cov: np.ndarray, dim: int) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (dim, dim):
        raise InvalidSpec(f"{name} must be {dim}x{dim}")
    if not np.allclose(cov, cov.T, rtol=0.0, atol=0.0):
        raise InvalidSpec(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise InvalidSpec(f"{name} must be positive definite") from None
    return cov


@dataclass(frozen=True)
class Dgp1Spec:
    """Predictive regression: y_{t} = b1 y_{t-h} + b2 x_{t-h} + w_t.

    x is an AR(rho) driven by v, w is an MA(h-1) in eps with geometric
    weights theta^j, and (eps, v) are jointly normal with covariance sigma.
    b2 = 0 puts the design under the encompassing null.
    """

    T: int
    h: int = 1
    beta1: float = 0.3
    beta2: float = 0.0
    rho: float = 0.25
    theta: float = 0.5
    sigma: np.ndarray = field(default_factory=lambda: SIGMA1.copy())
    burn_in: int = 200

    def __post_init__(self):
        if self.T < 50:
            raise InvalidSpec("T must be at least 50")
        if self.h < 1:
            raise InvalidSpec("h must be >= 1")
        if not abs(self.beta1) < 1.0:
            raise InvalidSpec("|beta1| must be < 1")
        if not abs(self.rho) < 1.0:
            raise InvalidSpec("|rho| must be < 1")
        if self.burn_in < 0:
            raise InvalidSpec("burn_in must be >= 0")
        object.__setattr__(self, "sigma", _check_cov("sigma", self.sigma, 2))


@dataclass(frozen=True)
class Dgp2Spec:
    """Factor-augmented regression with an approximate one-factor panel.

    The cross-section is X_it = lam_i f_t + e_it with AR(alpha1) factor and
    AR(rho_i) idiosyncratic noise; the outcome is y_{t} = alpha + beta1
    y_{t-h} + beta2 f_{t-h} + w_t with MA(h-1) disturbances.  Loadings are
    drawn once per replication.
    """

    T: int
    N: int
    h: int = 1
    alpha: float = 0.0
    beta1: float = 0.3
    beta2: float = 0.0
    theta: float = 0.5
    alpha1: float = 0.5
    rho_i: float = 0.5
    loading_std: float = 1.0
    burn_in: int = 200

    def __post_init__(self):
        if self.T < 50:
            raise InvalidSpec("T must be at least 50")
        if self.N < 10:
            raise InvalidSpec("N must be at least 10")
        if self.h < 1:
            raise InvalidSpec("h must be >= 1")
        if not abs(self.alpha1) < 1.0:
            raise InvalidSpec("|alpha1| must be < 1")
        if not abs(self.rho_i) < 1.0:
            raise InvalidSpec("|rho_i| must be < 1")
        if not abs(self.beta1) < 1.0:
            raise InvalidSpec("|beta1| must be < 1")
        if self.loading_std <= 0.0:
            raise InvalidSpec("loading_std must be positive")
        if self.burn_in < 0:
            raise InvalidSpec("burn_in must be >= 0")


@dataclass(frozen=True)
class Dgp3Spec:
    """Mildly integrated VAR: x_t = diag(1 - b_i / T^a) x_{t-1} + v_t.

    Localization constants b_i are positive, so every autoregressive root
    sits below one and approaches it as T grows (faster for larger a).
    a = 0 is accepted as the stationary limit of the parameterization.
    """

    T: int
    b: np.ndarray
    alpha_exp: float
    innovation_cov: np.ndarray
    burn_in: int = 200

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if b.ndim != 1 or b.size < 1:
            raise InvalidSpec("b must be a non-empty vector")
        if not np.all(b > 0.0):
            raise InvalidSpec("all localization constants must be positive")
        if not (0.0 <= self.alpha_exp < 1.0):
            raise InvalidSpec("alpha_exp must lie in [0, 1)")
        if self.T < 50:
            raise InvalidSpec("T must be at least 50")
        if self.burn_in < 0:
            raise InvalidSpec("burn_in must be >= 0")
        coeffs = 1.0 - b / self.T ** self.alpha_exp
        if not np.all((coeffs > 0.0) & (coeffs < 1.0)):
            raise InvalidSpec("AR coefficients 1 - b_i/T^a must lie in (0, 1)")
        cov = _check_cov("innovation_cov", self.innovation_cov, b.size)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "innovation_cov", cov)

    @property
    def dim(self) -> int:
        return self.b.size

    @property
    def ar_coefficients(self) -> np.ndarray:
        return 1.0 - self.b / self.T ** self.alpha_exp


def _ar1_path(innov: np.ndarray, coeff: float) -> np.ndarray:
    # x_t = coeff * x_{t-1} + innov_t with x_0 = 0, along axis 0
    return lfilter([1.0], [1.0, -coeff], innov, axis=0)


def _ma_path(innov: np.ndarray, theta: float, h: int) -> np.ndarray:
    # w_t = sum_{j=0}^{h-1} theta^j innov_{t-j}, missing pre-sample terms as 0
    return lfilter(theta ** np.arange(h), [1.0], innov)


def _h_step_ar(drive: np.ndarray, beta1: float, h: int) -> np.ndarray:
    """Solve y_t = beta1 * y_{t-h} + drive_t with zero pre-sample values.

    The recursion decouples into h independent first-order recursions, one
    per residue class of t mod h.
    """
    if h == 1:
        return _ar1_path(drive, beta1)
    y = np.empty_like(drive)
    for r in range(h):
        y[r::h] = _ar1_path(drive[r::h], beta1)
    return y


def simulate_dgp1(spec: Dgp1Spec, rng: RngStream) -> dict:
    """Simulate the predictive-regression design; returns {"y", "x"} of length T."""
    g = rng.generator()
    total = spec.burn_in + spec.T
    chol = np.linalg.cholesky(spec.sigma)
    shocks = g.standard_normal((total, 2)) @ chol.T
    eps, v = shocks[:, 0], shocks[:, 1]
    x = _ar1_path(v, spec.rho)
    w = _ma_path(eps, spec.theta, spec.h)
    drive = w.copy()
    drive[spec.h:] += spec.beta2 * x[:-spec.h]  # x_{t-h} enters once it exists
    y = _h_step_ar(drive, spec.beta1, spec.h)
    return {"y": y[spec.burn_in:], "x": x[spec.burn_in:]}


def simulate_dgp2(spec: Dgp2Spec, rng: RngStream) -> dict:
    """Simulate the factor-augmented design; returns {"y", "X", "f_true"}.

    "X" is the T x N observed panel from which the factor proxy is to be
    extracted, "f_true" the latent factor path (for diagnostics only).
    """
    g = rng.generator()
    total = spec.burn_in + spec.T
    lam = spec.loading_std * g.standard_normal(spec.N)
    f = _ar1_path(g.standard_normal(total), spec.alpha1)
    e = _ar1_path(g.standard_normal((total, spec.N)), spec.rho_i)
    X = f[:, None] * lam[None, :] + e
    w = _ma_path(g.standard_normal(total), spec.theta, spec.h)
    drive = w + spec.alpha
    drive[spec.h:] += spec.beta2 * f[:-spec.h]
    y = _h_step_ar(drive, spec.beta1, spec.h)
    keep = slice(spec.burn_in, None)
    return {"y": y[keep], "X": X[keep], "f_true": f[keep]}


def estimate_factor(X) -> np.ndarray:
    """Leading principal component of a T x N panel, one factor assumed.

    Columns are demeaned internally; the estimate is sqrt(T) times the top
    eigenvector of the outer-product matrix X X' / (T N), so the factor has
    unit sample variance, with its sign fixed to correlate non-negatively
    with the panel's first column.

    Raises DegenerateSpectrum when the top eigenvalue is not simple to
    working precision (the direction is then not identified).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 2:
        raise ValueError("X must be a T x N panel with T >= 2 and N >= 2")
    T, N = X.shape
    Xd = X - X.mean(axis=0)
    # Eigendecompose the smaller of the two Gram matrices; the non-zero
    # spectra coincide and the eigenvectors map through Xd.
    if N < T:
        A = (Xd.T @ Xd) / (T * N)
        vals, vecs = eigh(A, subset_by_index=[N - 2, N - 1])
        top = vals[-1]
        if top <= 0.0 or (top - vals[0]) <= EIGENGAP_RTOL * top:
            raise DegenerateSpectrum("top eigenvalue not simple to working precision")
        f = Xd @ vecs[:, -1]
        f /= np.linalg.norm(f)
    else:
        A = (Xd @ Xd.T) / (T * N)
        vals, vecs = eigh(A, subset_by_index=[T - 2, T - 1])
        top = vals[-1]
        if top <= 0.0 or (top - vals[0]) <= EIGENGAP_RTOL * top:
            raise DegenerateSpectrum("top eigenvalue not simple to working precision")
        f = vecs[:, -1]
    f = f * np.sqrt(T)
    if f @ X[:, 0] < 0.0:
        f = -f
    return f


def simulate_mild_var(spec: Dgp3Spec, rng: RngStream) -> np.ndarray:
    """Simulate the mildly integrated VAR; returns a T x dim matrix."""
    g = rng.generator()
    total = spec.burn_in + spec.T
    chol = np.linalg.cholesky(spec.innovation_cov)
    v = g.standard_normal((total, spec.dim)) @ chol.T
    coeffs = spec.ar_coefficients
    x = np.empty_like(v)
    for i in range(spec.dim):
        x[:, i] = _ar1_path(v[:, i], coeffs[i])
    return x[spec.burn_in:]
