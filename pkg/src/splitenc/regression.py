"""Least-squares machinery for direct h-step forecasting regressions.

A *direct* h-step regression pairs a target observed at time t with
regressors observed at time t - h.  Forecasts are produced recursively with
an expanding estimation window: the model is refit at every forecast origin
using all target/regressor pairs whose target date does not exceed the
origin.  Pairs whose regressor date would fall before the start of the
sample (target dates t <= h) are never part of any fit.

All functions are pure; arrays are never modified in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData, RankDeficient

# Reciprocal-condition floor below which the cross-product matrix is treated
# as singular.
RCOND_MIN = 1e-12


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """T x k matrix of raw observations on a common time index (row t = time t)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError("values must be a vector or a 2-d matrix")
        if values.shape[0] < 1:
            raise ValueError("need at least one time period")
        if not np.all(np.isfinite(values)):
            raise ValueError("observations must be finite (no missing values)")
        object.__setattr__(self, "values", values)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DirectDesign:
    """Aligned (regressor, target) pairs for a direct h-step regression.

    Row i pairs the target observed at date ``first_origin + i`` with the
    regressor vector observed h periods earlier, so no row mixes in
    information dated later than its own target.  The first regressor column
    is the intercept and must be identically one.
    """

    regressors: np.ndarray  # (m, k), row i = intercept + predictors dated (first_origin + i) - h
    targets: np.ndarray     # (m,), entry i observed at date first_origin + i
    h: int
    first_origin: int       # 1-based date of the earliest usable target row

    def __post_init__(self):
        Z = np.asarray(self.regressors, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        if Z.ndim != 2 or y.ndim != 1 or Z.shape[0] != y.shape[0]:
            raise ValueError("regressors must be (m, k) aligned with m targets")
        if Z.shape[0] == 0:
            raise ValueError("design has no rows")
        if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(y))):
            raise ValueError("design entries must be finite")
        if not np.all(Z[:, 0] == 1.0):
            raise ValueError("first regressor column must be identically 1 (intercept)")
        if self.h < 1:
            raise ValueError("horizon must be >= 1")
        if self.first_origin < self.h + 1:
            raise ValueError("first usable target cannot predate h + 1")
        object.__setattr__(self, "regressors", Z)
        object.__setattr__(self, "targets", y)

    @classmethod
    def from_series(cls, y, predictors=None, h: int = 1) -> "DirectDesign":
        """Build the design for regressing y_{t} on [1, predictors_{t-h}].

        ``predictors`` is a T x p matrix whose row t holds the information
        observed at time t (p = 0 gives an intercept-only design).  Usable
        target dates are t = h+1, ..., T.
        """
        if isinstance(y, TimeSeriesMatrix):
            y = y.values[:, 0]
        y = np.asarray(y, dtype=float)
        T = y.shape[0]
        if h < 1:
            raise ValueError("horizon must be >= 1")
        if T <= h:
            raise InsufficientData(f"series of length {T} has no usable pairs at h={h}")
        if predictors is None:
            lagged = np.empty((T - h, 0))
        else:
            if isinstance(predictors, TimeSeriesMatrix):
                predictors = predictors.values
            predictors = np.asarray(predictors, dtype=float)
            if predictors.ndim == 1:
                predictors = predictors[:, None]
            if predictors.shape[0] != T:
                raise ValueError("predictors must share the target's time index")
            lagged = predictors[: T - h]
        Z = np.column_stack([np.ones(T - h), lagged])
        return cls(regressors=Z, targets=y[h:], h=h, first_origin=h + 1)

    @property
    def n_rows(self) -> int:
        return self.targets.shape[0]

    @property
    def n_params(self) -> int:
        return self.regressors.shape[1]

    @property
    def last_target(self) -> int:
        """1-based date of the final target row."""
        return self.first_origin + self.n_rows - 1


@dataclass
class OlsFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    ssr: float


def solve_ols(X, y) -> OlsFit:
    """Least-squares fit of y on X via orthogonal decomposition.

    Parameters
    ----------
    X : (n, k) array with full column rank, n >= k.
    y : (n,) array.

    Returns
    -------
    OlsFit with the minimizing coefficients, residuals y - X b and their
    sum of squares.

    Raises
    ------
    RankDeficient
        If the cross-product matrix X'X is singular to working precision
        (reciprocal condition number below ``RCOND_MIN``).
    InsufficientData
        If there are fewer rows than columns.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, k) aligned with y of length n")
    n, k = X.shape
    if n < k:
        raise InsufficientData(f"{n} rows < {k} columns")
    coef, _, _, sv = np.linalg.lstsq(X, y, rcond=None)
    # rcond of X'X is the squared singular-value ratio of X
    if sv[0] <= 0.0 or (sv[-1] / sv[0]) ** 2 < RCOND_MIN:
        raise RankDeficient("cross-product matrix singular to working precision")
    residuals = y - X @ coef
    return OlsFit(coefficients=coef, residuals=residuals, ssr=float(residuals @ residuals))


def _solve_gram_batch(grams: np.ndarray, crosses: np.ndarray, origin0: int) -> np.ndarray:
    """Solve G_t b_t = c_t for a stack of Gram systems, one per forecast origin.

    Columns are rescaled to unit Gram diagonal before factoring, which keeps
    the solve accurate for persistent (poorly scaled) regressors.
    """
    diag = np.diagonal(grams, axis1=1, axis2=2)
    if np.any(diag <= 0.0):
        t_bad = int(np.argmax(np.any(diag <= 0.0, axis=1)))
        raise RankDeficient(f"zero regressor column in window ending at t={origin0 + t_bad}")
    scale = 1.0 / np.sqrt(diag)
    ge = grams * scale[:, :, None] * scale[:, None, :]
    try:
        np.linalg.cholesky(ge)
    except np.linalg.LinAlgError:
        for i in range(ge.shape[0]):
            try:
                np.linalg.cholesky(ge[i])
            except np.linalg.LinAlgError:
                raise RankDeficient(
                    f"cross-product matrix singular in window ending at t={origin0 + i}"
                ) from None
        raise RankDeficient("cross-product matrix singular") from None
    coefs = np.linalg.solve(ge, (crosses * scale)[:, :, None])[:, :, 0]
    return coefs * scale


def expanding_window_coefficients(design: DirectDesign, k0: int) -> np.ndarray:
    """Coefficient path of the expanding-window recursive fit.

    At every forecast origin t = k0, ..., last_target - h the model is refit
    on all pairs whose target date is <= t.  Row j of the result holds the
    coefficients for origin k0 + j; each row reproduces a batch fit on the
    same subsample to high accuracy.

    Raises
    ------
    InsufficientData
        If k0 starts the recursion before the first fit is identified.
    RankDeficient
        If any window's cross-product matrix is singular (reported with the
        offending origin).
    """
    Z, y = design.regressors, design.targets
    k = design.n_params
    last_origin = design.last_target - design.h
    if k0 < k + design.h:
        raise InsufficientData(f"k0={k0} < columns + h = {k + design.h}")
    if k0 > last_origin:
        raise InsufficientData(f"k0={k0} leaves no forecast origins (last is {last_origin})")
    i0 = k0 - design.first_origin  # row index of the target dated k0
    if i0 + 1 < k:
        raise InsufficientData(
            f"first window has {i0 + 1} observations for {k} parameters"
        )
    grams = np.cumsum(Z[:, :, None] * Z[:, None, :], axis=0)
    crosses = np.cumsum(Z * y[:, None], axis=0)
    stop = last_origin - design.first_origin + 1
    return _solve_gram_batch(grams[i0:stop], crosses[i0:stop], origin0=k0)


def expanding_window_forecast_errors(design: DirectDesign, k0: int) -> np.ndarray:
    """Pseudo out-of-sample h-step forecast errors from the expanding scheme.

    Entry j is the realized target at date k0 + h + j minus the forecast made
    at origin k0 + j, i.e. using coefficients fit on targets dated <= k0 + j
    and the regressor vector observed at the origin itself.
    """
    coefs = expanding_window_coefficients(design, k0)
    j0 = k0 + design.h - design.first_origin  # row holding the target dated k0 + h
    rows = design.regressors[j0:]
    if rows.shape[0] != coefs.shape[0]:
        raise InsufficientData("design too short to forecast from every origin")
    forecasts = np.einsum("ij,ij->i", coefs, rows)
    return design.targets[j0:] - forecasts


@dataclass
class RecursiveFitState:
    """Running normal-equations state for one-observation-at-a-time updates.

    Mathematically equivalent to refitting from scratch after every
    ``absorb``; kept as the streaming counterpart of the vectorized
    expanding-window path and cross-checked against it in the test suite.
    """

    gram: np.ndarray
    cross: np.ndarray
    count: int = 0

    @classmethod
    def empty(cls, k: int) -> "RecursiveFitState":
        return cls(gram=np.zeros((k, k)), cross=np.zeros(k), count=0)

    def absorb(self, x, y: float) -> None:
        x = np.asarray(x, dtype=float)
        self.gram += np.outer(x, x)
        self.cross += x * float(y)
        self.count += 1

    def coefficients(self) -> np.ndarray:
        k = self.cross.shape[0]
        if self.count < k:
            raise InsufficientData(f"{self.count} observations absorbed for {k} parameters")
        return _solve_gram_batch(self.gram[None], self.cross[None], origin0=self.count)[0]


def bic_select_lag(y, h: int, p_max: int = 8, lag_source=None) -> int:
    """Pick the lag order of a direct h-step regression by BIC.

    For every candidate p in {0, ..., p_max} the target at date t is
    regressed on an intercept plus the p + 1 lag terms source_{t-h-j},
    j = 0, ..., p, with ``lag_source`` defaulting to ``y`` itself.  All
    candidates are fit on the common target range implied by p_max so their
    sums of squares are comparable; ties go to the smaller p.

    BIC(p) = n_eff * ln(ssr / n_eff) + (p + 2) * ln(n_eff), counting the
    intercept and the p + 1 lag coefficients.
    """
    y = np.asarray(y, dtype=float)
    x = y if lag_source is None else np.asarray(lag_source, dtype=float)
    T = y.shape[0]
    if x.shape != y.shape:
        raise ValueError("lag_source must share y's length")
    if p_max < 0 or h < 1:
        raise ValueError("need p_max >= 0 and h >= 1")
    if T < p_max + h + 10:
        raise InsufficientData(f"need at least p_max + h + 10 = {p_max + h + 10} observations")
    t0 = h + p_max  # first 0-based target index every candidate can use
    n_eff = T - t0
    targets = y[t0:]
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets contain non-finite values on the comparison sample")
    lag_cols = [x[t0 - h - j: T - h - j] for j in range(p_max + 1)]
    if not all(np.all(np.isfinite(col)) for col in lag_cols):
        raise ValueError("lags contain non-finite values on the comparison sample")
    ones = np.ones(n_eff)
    best_p, best_bic = 0, np.inf
    for p in range(p_max + 1):
        X = np.column_stack([ones] + lag_cols[: p + 1])
        coef, _, _, _ = np.linalg.lstsq(X, targets, rcond=None)
        resid = targets - X @ coef
        ssr = float(resid @ resid)
        with np.errstate(divide="ignore"):
            bic = n_eff * np.log(ssr / n_eff) + (p + 2) * np.log(n_eff)
        if bic < best_bic:
            best_p, best_bic = p, bic
    return best_p
