"""scikit-learn compatible wrappers.

``ChristoffelFeatures`` maps points to the weighted feature rows
``eta_k(x) / sqrt(h_m(x))``; ``ChristoffelRegressor`` fits the weighted
least-squares recovery on point/value pairs and predicts pointwise.
``ChristoffelSampler`` draws training points from the matching density.
Both estimators follow the usual ``get_params`` / ``set_params`` contract,
so they compose with pipelines, ``clone`` and grid searches.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, check_X_y

from . import basis
from ._validation import check_points, check_positive_int
from .exceptions import RankDeficient
from .lsq import solve_weighted
from .model import ProblemModel
from .sampling import ADMISSIBLE_DEVIATION, draw_samples, symmetric_norm, weighted_features


def _check_model(model):
    if not isinstance(model, ProblemModel):
        raise TypeError(f"model must be a ProblemModel, got {type(model).__name__}")
    return model


class ChristoffelFeatures(TransformerMixin, BaseEstimator):
    """Weighted basis features for the first ``m`` basis functions.

    Parameters
    ----------
    model : ProblemModel
    m : int
        Size of the basis prefix.
    """

    def __init__(self, model=None, m=1):
        self.model = model
        self.m = m

    def fit(self, X, y=None):
        model = _check_model(self.model)
        check_positive_int(self.m, "m")
        X = check_points(X, model.d)
        self.modes_ = model.multi_indices(self.m)
        self.n_features_in_ = model.d
        return self

    def transform(self, X):
        check_is_fitted(self, "modes_")
        X = check_points(X, self.model.d)
        L, _ = weighted_features(basis.evaluate(X, self.modes_))
        return L

    def christoffel_factor(self, X):
        """``h_m(x)`` at each point."""
        check_is_fitted(self, "modes_")
        Phi = basis.evaluate(check_points(X, self.model.d), self.modes_)
        return np.mean(Phi * Phi, axis=1)


class ChristoffelRegressor(RegressorMixin, BaseEstimator):
    """Weighted least-squares recovery in ``span{eta_1, ..., eta_m}``.

    Training points should be drawn from the Christoffel density of the
    same prefix (see :class:`ChristoffelSampler`); the fit itself works for
    any points but is only guaranteed well conditioned for such draws.

    Attributes
    ----------
    coef_ : ndarray of shape (m,)
        Coefficients in the orthonormal basis.
    deviation_ : float
        ``||H - I||`` of the training design.
    admissible_ : bool
        Whether ``deviation_ <= 1/2``.
    """

    def __init__(self, model=None, m=1):
        self.model = model
        self.m = m

    def fit(self, X, y):
        model = _check_model(self.model)
        check_positive_int(self.m, "m")
        X, y = check_X_y(X, y, y_numeric=True)
        X = check_points(X, model.d)
        self.modes_ = model.multi_indices(self.m)
        L, h = weighted_features(basis.evaluate(X, self.modes_))
        self.deviation_ = symmetric_norm((L.T @ L) / L.shape[0] - np.eye(self.m))
        self.admissible_ = bool(self.deviation_ <= ADMISSIBLE_DEVIATION)
        coef, rank = solve_weighted(L, y / np.sqrt(h))
        if coef is None:
            raise RankDeficient(f"weighted design has numerical rank {rank} < m={self.m}")
        self.coef_ = coef
        self.n_features_in_ = model.d
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_points(X, self.model.d)
        return basis.evaluate(X, self.modes_) @ self.coef_


class ChristoffelSampler(BaseEstimator):
    """Draws points from the Christoffel density of prefix ``m``."""

    def __init__(self, model=None, m=1, random_state=None):
        self.model = model
        self.m = m
        self.random_state = random_state

    def sample(self, n):
        model = _check_model(self.model)
        if self.random_state is None:
            raise ValueError("ChristoffelSampler needs an explicit random_state")
        return draw_samples(model, self.m, n, self.random_state).points
