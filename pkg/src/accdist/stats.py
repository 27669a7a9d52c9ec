"""Statistical evaluation battery.

Pearson correlation, the dependent-correlation z test (two correlations that
share one variable), Cronbach's alpha over rater matrices, OLS regression
with the usual coefficient table, and classical (Torgerson) multidimensional
scaling. All functions are pure and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import t as student_t

from .errors import (
    DegenerateCorrelation,
    DegenerateGeometry,
    InsufficientData,
    InvalidDistanceMatrix,
    LengthMismatch,
    MissingRating,
    SampleTooSmall,
    SingularDesign,
    ZeroVariance,
)


@dataclass(frozen=True)
class RatingsTable:
    """Averaged human scores per speaker, with the optional raw rater matrix.

    ``raw`` is raters x items with NaN for missing cells; ``scale`` is the
    (min, max) of the rating instrument, e.g. (1, 7).
    """

    per_speaker_mean: dict
    scale: tuple = (1.0, 7.0)
    raw: np.ndarray | None = None
    rater_ids: tuple = ()
    item_ids: tuple = ()

    def __post_init__(self):
        lo, hi = self.scale
        for speaker, value in self.per_speaker_mean.items():
            if not (lo <= value <= hi):
                raise ValueError(
                    f"rating {value} for {speaker!r} outside scale [{lo}, {hi}]")
        if self.raw is not None:
            raw = np.asarray(self.raw, dtype=np.float64)
            if raw.ndim != 2:
                raise ValueError("raw rating matrix must be 2-D (raters x items)")
            object.__setattr__(self, "raw", raw)

    def vector_for(self, speakers) -> np.ndarray:
        missing = [s for s in speakers if s not in self.per_speaker_mean]
        if missing:
            raise MissingRating(f"no rating for speaker(s): {', '.join(missing)}")
        return np.array([self.per_speaker_mean[s] for s in speakers], dtype=np.float64)


def load_ratings(path) -> RatingsTable:
    """Read a ratings TSV: speaker <TAB> mean rating, optional ``# scale: lo hi``."""
    means = {}
    scale = None
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                text = line[1:].strip()
                if text.startswith("scale:"):
                    lo, hi = text.split(":", 1)[1].split()
                    scale = (float(lo), float(hi))
                continue
            if not line.strip():
                continue
            speaker, value = line.split("\t")[:2]
            means[speaker] = float(value)
    if scale is None:
        values = list(means.values()) or [0.0]
        scale = (min(values), max(values))
    return RatingsTable(per_speaker_mean=means, scale=scale)


def pearson(x, y) -> float:
    """Product-moment correlation of two equal-length vectors (n >= 3)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"vector lengths differ: {x.shape} vs {y.shape}")
    if x.size < 3:
        raise SampleTooSmall(f"need at least 3 observations, got {x.size}")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.sum(dx * dx)))
    sy = float(np.sqrt(np.sum(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("correlation of a constant vector is undefined")
    return float(np.clip(np.sum(dx * dy) / (sx * sy), -1.0, 1.0))


def steiger_z(r_jk: float, r_jh: float, r_kh: float, n: int) -> tuple[float, float]:
    """Z test for two dependent correlations sharing variable j.

    ``r_jk`` and ``r_jh`` are the compared correlations, ``r_kh`` the
    correlation between the two non-shared variables. Uses the pooled-mean
    covariance estimate over Fisher-transformed values; returns (Z, two-sided
    p from the normal tail).
    """
    if n <= 3:
        raise SampleTooSmall(f"need n > 3, got {n}")
    if r_jk == r_jh:
        return 0.0, 1.0
    for r in (r_jk, r_jh, r_kh):
        if abs(r) >= 1.0:
            raise DegenerateCorrelation(f"|r| >= 1 (got {r})")
    r_mean = (r_jk + r_jh) / 2.0
    rm2 = r_mean * r_mean
    psi = r_kh * (1.0 - 2.0 * rm2) - 0.5 * rm2 * (1.0 - 2.0 * rm2 - r_kh * r_kh)
    s = psi / ((1.0 - rm2) ** 2)
    if 2.0 - 2.0 * s <= 0.0:
        raise DegenerateCorrelation("covariance estimate leaves no variance for the test")
    z = (math.atanh(r_jk) - math.atanh(r_jh)) * math.sqrt((n - 3) / (2.0 - 2.0 * s))
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return z, p


def cronbach_alpha(raw) -> float:
    """Internal-consistency alpha over a raters x items matrix.

    Rows with any missing (NaN) cell are dropped (listwise deletion);
    variances are sample variances.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[1] < 2:
        raise InsufficientData("need a 2-D matrix with at least 2 items")
    complete = raw[~np.isnan(raw).any(axis=1)]
    if complete.shape[0] < 2:
        raise InsufficientData(
            f"need at least 2 complete rows, got {complete.shape[0]}")
    k = complete.shape[1]
    item_var = complete.var(axis=0, ddof=1)
    total_var = complete.sum(axis=1).var(ddof=1)
    if total_var == 0.0:
        raise InsufficientData("variance of item sums is zero")
    return float(k / (k - 1) * (1.0 - item_var.sum() / total_var))


@dataclass(frozen=True)
class RegressionFit:
    """OLS coefficient table. Row 0 is the intercept."""

    names: tuple
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    r_squared: float
    n: int

    def rows(self):
        for idx, name in enumerate(self.names):
            yield (name, self.coefficients[idx], self.standard_errors[idx],
                   self.t_values[idx], self.p_values[idx])


def ols_regress(X, y, names=None) -> RegressionFit:
    """Least-squares fit of ``y`` on predictors ``X`` plus an intercept.

    Standard errors come from the residual variance times the inverse normal
    matrix diagonal; p-values are two-sided Student t with n - k - 1 dof.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if y.shape != (n,):
        raise LengthMismatch(f"y has shape {y.shape}, expected ({n},)")
    if n <= k + 1:
        raise SampleTooSmall(f"need n > k + 1 (n={n}, k={k})")
    design = np.hstack([np.ones((n, 1)), X])
    if np.linalg.matrix_rank(design) < k + 1:
        raise SingularDesign("design matrix (with intercept) is rank deficient")

    gram_inv = np.linalg.inv(design.T @ design)
    beta = gram_inv @ design.T @ y
    residuals = y - design @ beta
    dof = n - k - 1
    sigma2 = float(residuals @ residuals) / dof
    se = np.sqrt(sigma2 * np.diag(gram_inv))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_values = beta / se
    t_values = np.where(np.isnan(t_values), 0.0, t_values)
    p_values = 2.0 * student_t.sf(np.abs(t_values), dof)

    sst = float(np.sum((y - y.mean()) ** 2))
    ssr = float(residuals @ residuals)
    r_squared = 1.0 if sst == 0.0 else 1.0 - ssr / sst
    if names is None:
        names = tuple(f"x{i + 1}" for i in range(k))
    return RegressionFit(
        names=("(Intercept)",) + tuple(names),
        coefficients=beta, standard_errors=se, t_values=t_values,
        p_values=p_values, r_squared=float(np.clip(r_squared, 0.0, 1.0)), n=n,
    )


@dataclass(frozen=True)
class MdsResult:
    """Low-dimensional coordinates from a distance matrix.

    ``explained_variance`` is the share of the positive eigenvalue mass
    carried by the kept dimensions.
    """

    coordinates: np.ndarray
    eigenvalues: np.ndarray
    explained_variance: float


def classical_mds(D, k: int) -> MdsResult:
    """Torgerson scaling: double-center the squared distances, eigendecompose.

    Coordinates use the top-k positive eigenpairs scaled by sqrt(eigenvalue);
    if fewer than k eigenvalues are positive the remaining columns are zero.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if D.ndim != 2 or D.shape[1] != n:
        raise InvalidDistanceMatrix("distance matrix must be square")
    if not (1 <= k < n):
        raise ValueError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    if not np.allclose(D, D.T, atol=1e-9, rtol=0.0):
        raise InvalidDistanceMatrix("distance matrix is not symmetric")
    if np.any(D < -1e-12):
        raise InvalidDistanceMatrix("distance matrix has negative entries")
    if not np.allclose(np.diag(D), 0.0, atol=1e-9):
        raise InvalidDistanceMatrix("distance matrix diagonal is not zero")

    D = (D + D.T) / 2.0
    centering = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * centering @ (D * D) @ centering
    eigenvalues, eigenvectors = np.linalg.eigh(B)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]

    positive = eigenvalues > 0
    if not positive.any():
        raise DegenerateGeometry("no positive eigenvalues after double-centering")
    coords = np.zeros((n, k))
    kept = min(k, int(positive.sum()))
    coords[:, :kept] = eigenvectors[:, :kept] * np.sqrt(eigenvalues[:kept])
    explained = float(eigenvalues[:kept].sum() / eigenvalues[positive].sum())
    return MdsResult(coordinates=coords, eigenvalues=eigenvalues,
                     explained_variance=explained)
