import numpy as np
import pytest

import rfps


def test_robust_scalars():
    x = np.array([1.0, 2.0, 3.0, 4.0, 100.0])
    assert rfps.median(x) == 3.0
    assert rfps.qn_scale(x) > 0.0
    r = np.random.default_rng(1).normal(size=50)
    s = rfps.mscale(r)
    mean_rho = np.mean([rfps.bisquare_rho(v / s, 1.547) for v in r])
    assert abs(mean_rho - 0.5) < 1e-6
    assert rfps.bisquare_rho(0.0, 1.0) == 0.0
    assert rfps.bisquare_rho(2.0, 1.0) == 1.0


def test_mm_estimator_resists_outliers():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(100, 2))
    y = 1.0 + x @ np.array([2.0, -1.0]) + 0.5 * rng.normal(size=100)
    y[:15] += 30.0
    fit = rfps.mm_estimator(x, y, seed=3)
    assert np.allclose(fit["slopes"], [2.0, -1.0], atol=0.2)
    assert fit["weights"][:15].max() < 0.05


def test_generate_and_screen():
    data = rfps.generate(n=120, p=200, eps_leverage=0.1, leverage="oc_bad", seed=4)
    assert data["X"].shape == (120, 200)
    assert data["labels"].count("oc_bad") == 12
    path = rfps.screen(data["X"], data["y"], method="rfpsis", d_max=4, seed=4)
    assert sorted(path["order"]) == list(range(200))
    assert path["factor"]["d"] == path["d"]
    assert len(path["labels"]) == 120
    mms = rfps.minimal_model_size(path["order"], data["true_model"])
    assert len(mms) == 8
    assert all(a < b for a, b in zip(mms, mms[1:]))


def test_select_exact_predictor():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(60, 12))
    y = 2.0 * x[:, 5] + 1.0
    out = rfps.select(x, y, criteria=["BIC", "R-EBIC"], d_max=3, seed=1)
    for name in ("BIC", "R-EBIC"):
        assert 5 in out[name]["model"]


def test_factor_model_flags():
    data = rfps.generate(n=150, p=300, eps_leverage=0.2, leverage="pc_good", seed=6)
    fit = rfps.fit_factor_model(data["X"], d=2, seed=6)
    pc = [f for f, l in zip(fit["flags"], data["labels"]) if l == "pc_good"]
    assert sum(f == "pc" for f in pc) >= 0.9 * len(pc)
    assert fit["Z"].shape == (150, 2)


def test_errors_are_value_errors():
    with pytest.raises(rfps.RfpsError):
        rfps.median(np.array([]))
    with pytest.raises(ValueError, match="0.5"):
        rfps.generate(eps_leverage=0.3, eps_vertical=0.3, leverage="oc_bad")
    with pytest.raises(ValueError):
        rfps.screen(np.ones((5, 3)), np.ones(5), method="lasso")
