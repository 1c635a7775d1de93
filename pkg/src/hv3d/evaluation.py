"""Calibration against subjective scores and correlation reporting.

Two jobs live here. First, refitting the four combination weights from
mean opinion scores (MOS): each scored sequence yields one linear equation
``w1*f1 + w2*f2 + w3*f3 + w4*f4 = mos/10`` with the weight-free features
from the per-frame breakdowns averaged over the sequence, and the weights
come from ordinary least squares. Second, judging a finished score set:
Spearman rank correlation against MOS, plus the conventional 4-parameter
logistic mapping ``m(s) = a + b / (1 + exp(-c*(s - d)))`` fitted before the
Pearson correlation.

MOS files are CSV with header ``label,distortion,mos`` and scores on a
1-10 scale.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import rankdata
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .aggregate import QualityBreakdown, SequenceScore, Weights
from .errors import CalibrationError, EvaluationError, IngestionError

logger = logging.getLogger(__name__)

FEATURE_NAMES = ("f1", "f2", "f3", "f4")
MOS_SCALE = 10.0


@dataclass(frozen=True)
class MosRecord:
    label: str
    distortion: str
    mos: float


@dataclass(frozen=True)
class ScoreRecord:
    label: str
    distortion: str
    score: float


@dataclass(frozen=True)
class FeatureRow:
    """One calibration equation: four regressors and the MOS/10 target."""

    f1: float
    f2: float
    f3: float
    f4: float
    target: float

    @classmethod
    def from_breakdown(cls, breakdown: QualityBreakdown, mos: float) -> "FeatureRow":
        f1, f2, f3, f4 = breakdown.features()
        return cls(f1=f1, f2=f2, f3=f3, f4=f4, target=float(mos) / MOS_SCALE)

    @classmethod
    def from_sequence(cls, score: SequenceScore, mos: float) -> "FeatureRow":
        """Sequence features are frame means, matching the pooled score."""
        stacked = np.array([b.features() for b in score.breakdowns], dtype=np.float64)
        f1, f2, f3, f4 = (float(v) for v in stacked.mean(axis=0))
        return cls(f1=f1, f2=f2, f3=f3, f4=f4, target=float(mos) / MOS_SCALE)

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.f2, self.f3, self.f4], dtype=np.float64)


def _read_csv(path, required: tuple[str, ...]) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise IngestionError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise IngestionError(f"{path}: no data rows")
    return rows


def load_mos_csv(path) -> list[MosRecord]:
    """Read MOS rows; scores must sit on the 1-10 scale."""
    records = []
    for row in _read_csv(path, ("label", "distortion", "mos")):
        try:
            mos = float(row["mos"])
        except ValueError as exc:
            raise IngestionError(f"{path}: bad mos value {row['mos']!r}") from exc
        if not 1.0 <= mos <= 10.0:
            raise IngestionError(f"{path}: mos {mos} outside [1, 10]")
        if not row["label"] or not row["distortion"]:
            raise IngestionError(f"{path}: empty label or distortion")
        records.append(MosRecord(label=row["label"], distortion=row["distortion"], mos=mos))
    return records


def load_scores_csv(path) -> list[ScoreRecord]:
    records = []
    for row in _read_csv(path, ("label", "distortion", "score")):
        try:
            score = float(row["score"])
        except ValueError as exc:
            raise IngestionError(f"{path}: bad score value {row['score']!r}") from exc
        records.append(ScoreRecord(label=row["label"], distortion=row["distortion"], score=score))
    return records


def _solve_weights(features: np.ndarray, targets: np.ndarray) -> Weights:
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[1] != len(FEATURE_NAMES):
        raise CalibrationError(f"feature matrix must be (n, 4), got shape {x.shape}")
    if x.shape[0] != y.size:
        raise CalibrationError(f"{x.shape[0]} feature rows vs {y.size} targets")
    if x.shape[0] < 4:
        raise CalibrationError(f"need at least 4 rows to identify 4 weights, got {x.shape[0]}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise CalibrationError("features and targets must be finite")
    rank = np.linalg.matrix_rank(x)
    if rank < 4:
        collinear = [
            f"{FEATURE_NAMES[i]}~{FEATURE_NAMES[j]}"
            for i in range(4)
            for j in range(i + 1, 4)
            if np.linalg.matrix_rank(x[:, [i, j]]) < 2
        ]
        detail = (
            f"collinear column pair(s): {', '.join(collinear)}"
            if collinear
            else f"rank {rank} < 4"
        )
        raise CalibrationError(f"feature matrix is rank deficient ({detail})")
    solution = np.linalg.solve(x.T @ x, x.T @ y)
    negative = [FEATURE_NAMES[i] for i in range(4) if solution[i] < 0]
    if negative:
        logger.warning("fitted weight(s) for %s are negative", ", ".join(negative))
    return Weights.from_array(solution)


def fit_weights(rows: Sequence[FeatureRow]) -> Weights:
    """Least-squares weights from calibration rows via the normal equations."""
    if not rows:
        raise CalibrationError("no calibration rows")
    features = np.stack([r.as_array() for r in rows])
    targets = np.array([r.target for r in rows], dtype=np.float64)
    return _solve_weights(features, targets)


class WeightCalibrator(RegressorMixin, BaseEstimator):
    """Estimator face of :func:`fit_weights` for pipeline and CV tooling.

    ``fit`` takes the (n, 4) feature matrix and MOS/10 targets; ``predict``
    returns combined scores under the fitted weights.
    """

    def fit(self, X, y) -> "WeightCalibrator":
        weights = _solve_weights(np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64))
        self.weights_ = weights
        self.coef_ = weights.as_array()
        fitted = np.asarray(X, dtype=np.float64) @ self.coef_
        residuals = fitted - np.asarray(y, dtype=np.float64).ravel()
        self.rmse_ = float(np.sqrt(np.mean(residuals**2)))
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise NotFittedError("WeightCalibrator is not fitted yet")
        x = np.asarray(X, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != 4:
            raise CalibrationError(f"feature matrix must be (n, 4), got shape {x.shape}")
        return x @ self.coef_


def spearman(scores, mos) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks.

    Doubled average ranks are integers, so the Pearson sums are computed in
    exact integer arithmetic; untied inputs therefore give exact rational
    results (a hand-checked 0.8 comes out as 0.8, monotone orders as +/-1)
    instead of picking up covariance round-off.
    """
    x = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(mos, dtype=np.float64).ravel()
    if x.size != y.size:
        raise EvaluationError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 3:
        raise EvaluationError(f"need at least 3 pairs, got {x.size}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise EvaluationError("rank correlation undefined for constant input")
    rx = [int(round(2.0 * r)) for r in rankdata(x)]
    ry = [int(round(2.0 * r)) for r in rankdata(y)]
    n = len(rx)
    num = n * sum(a * b for a, b in zip(rx, ry)) - sum(rx) * sum(ry)
    var_x = n * sum(a * a for a in rx) - sum(rx) ** 2
    var_y = n * sum(b * b for b in ry) - sum(ry) ** 2
    if var_x == var_y:
        return num / var_x
    return num / math.sqrt(var_x * var_y)


@dataclass(frozen=True)
class LogisticFit:
    """Fitted 4-parameter monotone mapping from objective score to MOS."""

    a: float
    b: float
    c: float
    d: float
    fitted: np.ndarray
    rmse: float
    pearson: float
    degenerate: bool

    def curve(self, scores) -> np.ndarray:
        return _logistic((self.a, self.b, self.c, self.d), np.asarray(scores, dtype=np.float64))


def logistic_curve(params, scores) -> np.ndarray:
    """Evaluate the 4-parameter mapping at the given scores."""
    return _logistic(params, np.asarray(scores, dtype=np.float64))


def _logistic(params, x: np.ndarray) -> np.ndarray:
    a, b, c, d = params
    # Clip the exponent so wild optimizer steps cannot overflow.
    z = np.clip(-c * (x - d), -500.0, 500.0)
    return a + b / (1.0 + np.exp(z))


def logistic_fit(scores, mos, max_nfev: int = 2000) -> LogisticFit:
    """Fit the logistic MOS mapping with deterministic initialization.

    Starts from a = min(mos), b = range(mos), c = 1, d = median(scores). A
    fit that exhausts ``max_nfev`` raises EvaluationError with the best
    parameters so far attached as ``best_params``. Constant MOS produces a
    flat curve (b of zero), flagged ``degenerate`` with an undefined
    (NaN) Pearson correlation.
    """
    x = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(mos, dtype=np.float64).ravel()
    if x.size != y.size:
        raise EvaluationError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 5:
        raise EvaluationError(f"need at least 5 pairs for a 4-parameter fit, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise EvaluationError("scores and mos must be finite")

    start = np.array([y.min(), np.ptp(y), 1.0, np.median(x)], dtype=np.float64)
    result = least_squares(lambda p: _logistic(p, x) - y, start, max_nfev=max_nfev)
    if result.status == 0:
        error = EvaluationError(
            f"logistic fit did not converge within {max_nfev} evaluations;"
            f" best parameters so far: {result.x.tolist()}"
        )
        error.best_params = tuple(float(v) for v in result.x)
        raise error

    a, b, c, d = (float(v) for v in result.x)
    fitted = _logistic(result.x, x)
    rmse = float(np.sqrt(np.mean((fitted - y) ** 2)))
    degenerate = np.ptp(y) == 0 or abs(b) <= 1e-6 * max(1.0, float(np.ptp(y)))
    if degenerate or np.ptp(fitted) == 0:
        pearson = float("nan")
    else:
        pearson = float(np.corrcoef(fitted, y)[0, 1])
    return LogisticFit(
        a=a, b=b, c=c, d=d, fitted=fitted, rmse=rmse, pearson=pearson, degenerate=degenerate
    )


class LogisticCurve(RegressorMixin, BaseEstimator):
    """Estimator face of :func:`logistic_fit`: fit on scores, predict MOS."""

    def __init__(self, max_nfev: int = 2000) -> None:
        self.max_nfev = max_nfev

    def fit(self, X, y) -> "LogisticCurve":
        self.fit_ = logistic_fit(np.asarray(X, dtype=np.float64).ravel(), y, self.max_nfev)
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "fit_"):
            raise NotFittedError("LogisticCurve is not fitted yet")
        return self.fit_.curve(np.asarray(X, dtype=np.float64).ravel())
