"""Small numpy classifiers: logistic regression, linear SVM and Gaussian naive Bayes.

All models standardize features with statistics from the training data.
Defaults (one place): regularization ``C = 1.0`` on the summed loss,
i.e. the averaged objective ``mean(loss) + ||w||^2 / (2 C N)`` with an
unpenalized bias; gradient-norm tolerance ``1e-6``; 10 000 iterations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from hetfair.errors import ParameterError, TrainingError, ValidationError

DEFAULTS = {"C": 1.0, "tol": 1e-6, "max_iter": 10_000, "var_floor": 1e-9}


class ModelKind(str, enum.Enum):
    LR = "LogisticRegression"
    SVM = "LinearSVM"
    NB = "GaussianNaiveBayes"

    @classmethod
    def parse(cls, name) -> "ModelKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"lr": cls.LR, "svm": cls.SVM, "nb": cls.NB, "gnb": cls.NB}
        if key in aliases:
            return aliases[key]
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ParameterError(f"unknown classifier {name!r}")

    @property
    def short(self) -> str:
        return {ModelKind.LR: "LR", ModelKind.SVM: "SVM", ModelKind.NB: "NB"}[self]


@dataclass(frozen=True)
class TrainedModel:
    kind: ModelKind
    params: dict
    feature_dim: int
    mean: np.ndarray
    scale: np.ndarray
    n_iter: int = 0
    history: list = field(default_factory=list, compare=False, repr=False)


def _standardize_fit(x):
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def logistic_objective(theta, xb, y, lam):
    """Averaged log-loss plus ``lam/2 * ||w||^2``; the last entry of theta is the bias."""
    z = xb @ theta
    loss = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(loss + 0.5 * lam * theta[:-1] @ theta[:-1])


def logistic_gradient(theta, xb, y, lam):
    grad = xb.T @ (_sigmoid(xb @ theta) - y) / len(y)
    grad[:-1] += lam * theta[:-1]
    return grad


def _fit_logistic(xb, y, lam, tol, max_iter, track):
    n = len(y)
    # Hessian of the averaged log-loss is bounded by X^T X / (4n)
    lipschitz = np.linalg.norm(xb, 2) ** 2 / (4 * n) + lam
    step = 1.0 / lipschitz
    theta = np.zeros(xb.shape[1])
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        grad = logistic_gradient(theta, xb, y, lam)
        if track:
            history.append(logistic_objective(theta, xb, y, lam))
        if np.linalg.norm(grad) < tol:
            break
        theta = theta - step * grad
    return theta, it, history


def svm_objective(theta, xb, y, lam):
    """Averaged hinge loss plus ``lam/2 * ||w||^2``; labels in {0, 1}."""
    margin = 1 - (2.0 * y - 1.0) * (xb @ theta)
    return float(np.mean(np.maximum(margin, 0)) + 0.5 * lam * theta[:-1] @ theta[:-1])


def _fit_svm(xb, y, lam, tol, max_iter, track):
    s = 2.0 * y - 1.0
    n = len(y)
    xs = xb * s[:, None]
    step0 = 1.0 / (np.linalg.norm(xb, 2) ** 2 / n + lam)
    theta = np.zeros(xb.shape[1])
    best, best_obj = theta.copy(), np.inf
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        margin = xs @ theta
        active = margin < 1
        reg = 0.5 * lam * theta[:-1] @ theta[:-1]
        obj = float(np.sum(1 - margin[active]) / n + reg)
        if track:
            history.append(obj)
        # sub-gradient steps are not monotone; keep the best iterate
        if obj < best_obj:
            best, best_obj = theta.copy(), obj
        grad = -(active @ xs) / n
        grad[:-1] += lam * theta[:-1]
        if np.linalg.norm(grad) < tol:
            break
        theta = theta - step0 / np.sqrt(it) * grad
    return best, it, history


def train(kind, features, labels, hyperparams: dict | None = None, track: bool = False) -> TrainedModel:
    kind = ModelKind.parse(kind)
    hp = {**DEFAULTS, **(hyperparams or {})}
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float).reshape(-1)
    if x.ndim != 2 or x.shape[0] != len(y):
        raise ValidationError("features must be N x D with N labels")
    if not np.all(np.isfinite(x)):
        raise ValidationError("features must be finite")
    if len(y) < 2 or len(np.unique(y)) < 2:
        raise TrainingError("training data must contain both classes")

    mean, scale = _standardize_fit(x)
    z = (x - mean) / scale
    n = len(y)

    if kind is ModelKind.NB:
        params = {"means": [], "vars": [], "log_prior": []}
        floor = hp["var_floor"] * max(float(np.max(z.var(axis=0))), 1e-300)
        for c in (0, 1):
            zc = z[y == c]
            params["means"].append(zc.mean(axis=0))
            params["vars"].append(np.maximum(zc.var(axis=0), floor))
            params["log_prior"].append(np.log(len(zc) / n))
        params = {k: np.array(v) for k, v in params.items()}
        return TrainedModel(kind, params, x.shape[1], mean, scale)

    xb = np.hstack([z, np.ones((n, 1))])
    lam = 1.0 / (hp["C"] * n)
    fit = _fit_logistic if kind is ModelKind.LR else _fit_svm
    theta, it, history = fit(xb, y, lam, hp["tol"], int(hp["max_iter"]), track)
    if not np.all(np.isfinite(theta)):
        raise TrainingError("training diverged")
    return TrainedModel(kind, {"coef": theta[:-1], "bias": float(theta[-1])}, x.shape[1], mean, scale, it, history)


def decision_function(model: TrainedModel, features) -> np.ndarray:
    """Linear score for LR/SVM; log-posterior ratio (class 1 minus class 0) for NB."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.feature_dim:
        raise ParameterError(f"expected {model.feature_dim} features")
    z = (x - model.mean) / model.scale
    if model.kind is ModelKind.NB:
        p = model.params
        ll = [
            p["log_prior"][c]
            - 0.5 * np.sum(np.log(2 * np.pi * p["vars"][c]) + (z - p["means"][c]) ** 2 / p["vars"][c], axis=1)
            for c in (0, 1)
        ]
        return ll[1] - ll[0]
    return z @ model.params["coef"] + model.params["bias"]


def predict(model: TrainedModel, features) -> np.ndarray:
    # ties (score exactly 0) go to class 0
    return (decision_function(model, features) > 0).astype(np.int64)
