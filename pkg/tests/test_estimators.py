import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.linear_model import LinearRegression

from christoffel_lsq import (
    ChristoffelFeatures,
    ChristoffelRegressor,
    ChristoffelSampler,
    Geometric,
    ProblemModel,
    draw_samples,
    fit,
)
from christoffel_lsq.exceptions import OutOfDomain


@pytest.fixture
def model():
    return ProblemModel(Geometric(q=0.5), 2)


def test_params_roundtrip(model):
    est = ChristoffelRegressor(model=model, m=5)
    assert est.get_params() == {"model": model, "m": 5}
    c = clone(est)
    assert c.get_params()["m"] == 5 and c is not est
    c.set_params(m=3)
    assert c.m == 3 and est.m == 5


def test_regressor_matches_fit(model):
    X = draw_samples(model, 6, 800, 2)
    y = np.sin(2 * np.pi * X.points[:, 0]) + X.points[:, 1] ** 2
    reg = ChristoffelRegressor(model=model, m=6).fit(X.points, y)
    np.testing.assert_allclose(reg.coef_, fit(model, X, 6, y).coefficients, rtol=1e-12)
    assert reg.admissible_ and reg.deviation_ < 0.5
    pred = reg.predict(X.points[:5])
    np.testing.assert_allclose(pred, model.basis_matrix(X.points[:5], 6) @ reg.coef_)


def test_regressor_reproduces_subspace(model):
    X = ChristoffelSampler(model=model, m=8, random_state=0).sample(1000)
    c = np.arange(1.0, 9.0)
    y = model.basis_matrix(X, 8) @ c
    reg = ChristoffelRegressor(model=model, m=8).fit(X, y)
    np.testing.assert_allclose(reg.coef_, c, rtol=1e-9)
    assert reg.score(X, y) == pytest.approx(1.0)


def test_features_pipeline(model):
    X = ChristoffelSampler(model=model, m=4, random_state=1).sample(500)
    y = model.basis_matrix(X, 4) @ np.array([1.0, 2.0, 0.0, -1.0])
    feats = ChristoffelFeatures(model=model, m=4).fit(X)
    L = feats.transform(X)
    h = feats.christoffel_factor(X)
    np.testing.assert_allclose(L * np.sqrt(h)[:, None], model.basis_matrix(X, 4), rtol=1e-12)
    pipe = make_pipeline(ChristoffelFeatures(model=model, m=4), LinearRegression())
    assert clone(pipe).fit(X, y).score(X, y) > 0.9


def test_validation(model):
    reg = ChristoffelRegressor(model=model, m=2)
    with pytest.raises(OutOfDomain):
        reg.fit(np.array([[0.1, 1.2], [0.3, 0.4], [0.5, 0.5]]), np.zeros(3))
    with pytest.raises(ValueError):
        reg.fit(np.zeros((3, 3)), np.zeros(3))
    with pytest.raises(TypeError):
        ChristoffelRegressor(model="nope", m=2).fit(np.zeros((3, 2)), np.zeros(3))
    with pytest.raises(ValueError):
        ChristoffelSampler(model=model, m=2).sample(10)
