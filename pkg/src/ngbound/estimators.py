"""scikit-learn style wrappers so states and bound queries drop into pipelines.

``StateSummarizer`` turns a list of states into the feature matrix
``[mu, mu_G, T, delta]``; ``NonGaussianityBound`` predicts the minimal
overlap at given ``(mu_G, mu)`` and scores states by their margin.
"""

from __future__ import annotations


import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import InvalidInputError
from .fock import DEFAULT_TAIL_TOL, FockDensityMatrix, from_matrix, state_from_json
from .metrics import summarize
from .region2 import bound_overlap

FEATURES = ("mu", "mu_g", "overlap", "delta")


def as_states(X) -> list[FockDensityMatrix]:
    """Accept states, square matrices, or state JSON dicts."""
    if isinstance(X, FockDensityMatrix):
        X = [X]
    out = []
    for item in X:
        if isinstance(item, FockDensityMatrix):
            out.append(item)
        elif isinstance(item, dict):
            out.append(state_from_json(item))
        else:
            arr = np.asarray(item)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise InvalidInputError(f"expected a square density matrix, got shape {arr.shape}")
            out.append(from_matrix(arr))
    if not out:
        raise InvalidInputError("no states given")
    return out


def check_coordinates(X) -> np.ndarray:
    """Validate an ``(n, 2)`` array of ``(mu_G, mu)`` pairs."""
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] != 2:
        raise InvalidInputError(f"expected columns (mu_g, mu), got {X.shape[1]} columns")
    if np.any(X <= 0) or np.any(X > 1 + 1e-12):
        raise InvalidInputError("mu_g and mu must lie in (0, 1]")
    return X


class StateSummarizer(TransformerMixin, BaseEstimator):
    """Map density matrices to ``[mu, mu_G, T, delta]`` rows."""

    def __init__(self, tail_tol: float = DEFAULT_TAIL_TOL, force_quadrature: bool = False):
        self.tail_tol = tail_tol
        self.force_quadrature = force_quadrature

    def fit(self, X, y=None):
        as_states(X)
        self.n_features_out_ = len(FEATURES)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_out_")
        rows = []
        for rho in as_states(X):
            s = summarize(rho, tail_tol=self.tail_tol, force_quadrature=self.force_quadrature)
            rows.append([s.mu, s.mu_g, s.overlap, s.delta])
        return np.array(rows)

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURES, dtype=object)


class NonGaussianityBound(BaseEstimator):
    """Lower bound on the Gaussian overlap as a function of ``(mu_G, mu)``.

    ``predict`` returns the bound (``nan`` where no state exists);
    ``decision_function`` takes states and returns ``T - bound``, so
    non-negative values mean the state respects the bound.
    """

    def __init__(self, include_region1: bool = True, tol: float = 1e-6):
        self.include_region1 = include_region1
        self.tol = tol

    def fit(self, X=None, y=None):
        self.fitted_ = True
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "fitted_")
        X = check_coordinates(X)
        out = np.full(X.shape[0], np.nan)
        for i, (mg, mu) in enumerate(X):
            res = bound_overlap(float(mg), float(mu), region1=self.include_region1)
            if res is not None:
                out[i] = res[0]
        return out

    def families(self, X) -> list[str | None]:
        check_is_fitted(self, "fitted_")
        X = check_coordinates(X)
        out = []
        for mg, mu in X:
            res = bound_overlap(float(mg), float(mu), region1=self.include_region1)
            out.append(None if res is None else res[1].family)
        return out

    def decision_function(self, states) -> np.ndarray:
        feats = StateSummarizer().fit_transform(states)
        bound = self.predict(feats[:, [1, 0]])
        return feats[:, 2] - bound

    def score(self, states, y=None) -> float:
        """Fraction of states on or above the bound."""
        margins = self.decision_function(states)
        return float(np.mean(np.nan_to_num(margins, nan=np.inf) >= -self.tol))
