import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from nvmag.errors import ValidationError
from nvmag.estimators import (
    FirstOrderLowPass,
    LockInSpectrumModel,
    LorentzianSumRegressor,
    ODMRSpectrumModel,
    SaturationCurveRegressor,
    SavitzkyGolaySmoother,
)
from nvmag.lockin import ModulationConfig, lockin_spectrum
from nvmag.spinmodel import DriveConfig, cw_spectrum

from oracles import lorentzian


def test_saturation_regressor():
    p = np.linspace(0.05, 2, 12)[:, None]
    y = 2.0 * p[:, 0] / (p[:, 0] + 0.5)
    est = SaturationCurveRegressor().fit(p, y)
    assert est.p_sat_ == pytest.approx(0.5, rel=1e-8)
    assert est.score(p, y) == pytest.approx(1.0)
    assert est.efficiency([[0.5]])[0] == pytest.approx(0.5, rel=1e-8)
    assert est.get_params() == {"xtol": 1e-10, "max_nfev": 2000}


def test_not_fitted():
    with pytest.raises(NotFittedError):
        SaturationCurveRegressor().predict([[1.0]])
    with pytest.raises(NotFittedError):
        SavitzkyGolaySmoother().transform([[1.0]])


def test_saturation_regressor_rejects_two_columns():
    with pytest.raises(ValidationError):
        SaturationCurveRegressor().fit(np.ones((5, 2)), np.ones(5))


def test_lorentzian_regressor_unsorted_input(rng):
    x = np.linspace(-4, 4, 300)
    y = lorentzian(x, -1.0, 0.4, 1.0) + lorentzian(x, 1.5, 0.3, 0.7)
    perm = rng.permutation(x.size)
    est = LorentzianSumRegressor(n_peaks=2).fit(x[perm, None], y[perm])
    np.testing.assert_allclose(est.centers_, [-1.0, 1.5], atol=1e-8)
    np.testing.assert_allclose(est.predict(x[:, None]), y, atol=1e-9)


def test_smoother_in_pipeline(rng):
    X = rng.standard_normal((50, 2)).cumsum(axis=0)
    pipe = make_pipeline(FirstOrderLowPass(159.0, 2000.0), SavitzkyGolaySmoother(5, 2))
    out = pipe.fit_transform(X)
    assert out.shape == X.shape
    c = clone(pipe)
    np.testing.assert_array_equal(c.fit_transform(X), out)


def test_smoother_bad_params():
    with pytest.raises(ValidationError):
        SavitzkyGolaySmoother(4, 2).fit(np.ones((10, 1)))


def test_lowpass_transformer_response():
    lp = FirstOrderLowPass().fit()
    assert lp.response([0.0])[0] == pytest.approx(1.0)
    np.testing.assert_allclose(lp.transform(np.ones((20, 1))), 1.0)


def test_odmr_model_matches_function(params):
    drive = DriveConfig(6.0, 2.0)
    f = np.array([0.3, -1.0, 2.0, 0.0])
    m = ODMRSpectrumModel(params, drive, v0=26.0).fit()
    ref = cw_spectrum(params, drive, np.sort(f), 26.0)
    np.testing.assert_allclose(np.sort(m.predict(f[:, None])), np.sort(ref.values))
    assert m.predict(f[:, None])[3] == pytest.approx(ref.values[1])
    assert m.hwhm_ > 0


def test_lockin_model(params):
    drive = DriveConfig(6.0, 2.0)
    mod = ModulationConfig()
    g = np.linspace(-3, 3, 61)
    m = LockInSpectrumModel(params, drive, mod, 5e4, 26.0).fit()
    np.testing.assert_allclose(m.predict(g[:, None]), lockin_spectrum(params, drive, mod, g, 5e4, 26.0).values)
    f, s = m.max_slope(g[:, None])
    assert s > 0
    assert set(m.get_params()) == {"params", "drive", "modulation", "gain_a", "v0"}


def test_models_need_params():
    with pytest.raises(ValidationError):
        ODMRSpectrumModel().fit()
    with pytest.raises(ValidationError):
        LockInSpectrumModel().fit()
