import numpy as np
import pytest
from scipy import stats

from sparsecox.data import load_csv
from sparsecox.estimators import log_hazard_ratio
from sparsecox.synth import SynthConfig, generate, gompertz_inverse, gompertz_survival, read_truth, write

FLAT = {0: 1.0, 1: 1.0, -1: 1.0}


@pytest.fixture(scope="module")
def big():
    return generate(SynthConfig(n=100_000, seed=21))


@pytest.fixture(scope="module")
def flat():
    return generate(SynthConfig(n=100_000, seed=22, hr=FLAT))


def test_event_fraction(big):
    assert abs(big.data.event.mean() - 0.8) <= 0.01


def test_survival_matches_gompertz(flat):
    t = flat.event_time
    for s in (0.5, 1.0, 2.0):
        assert abs(np.mean(t > s) - gompertz_survival(s, 0.25, 1.0)) <= 0.01


def test_ks_against_gompertz_cdf(flat):
    res = stats.kstest(flat.event_time, lambda s: 1.0 - gompertz_survival(s, 0.25, 1.0))
    assert res.statistic < 0.01


def test_within_group_hazard_ratio():
    lab = generate(SynthConfig(n=50_000, seed=23))
    sub = lab.data.subset((lab.true_z == 1) & (lab.data.event == 1))
    assert np.exp(log_hazard_ratio(sub)) == pytest.approx(0.5, rel=0.10)


def test_censored_times_precede_event_times(big):
    cens = big.data.event == 0
    assert np.all(big.data.time[cens] < big.event_time[cens])
    np.testing.assert_array_equal(big.data.time[~cens], big.event_time[~cens])


def test_inverse_cdf_round_trip():
    u = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(gompertz_survival(gompertz_inverse(u, 0.3, 1.5), 0.3, 1.5), u, rtol=1e-12)


def test_covariate_layout():
    lab = generate(SynthConfig(n=3000, seed=1, noise_dims=3))
    ds = lab.data
    assert ds.feature_names == ("X1", "X2", "X3", "X4", "X5")
    assert np.all(np.abs(ds.covariates[:, 2:]) <= 1)
    np.testing.assert_allclose(ds.covariates[lab.true_z == 1, :2].mean(axis=0), [-2, 0], atol=0.1)
    assert set(np.unique(lab.true_z)) == {-1, 0, 1}


def test_case_one_groups():
    cfg = SynthConfig(n=500, seed=2, groups=(0, 1), hr={0: 1, 1: 0.5}, mu={0: (0, 2), 1: (-2, 0)},
                      sigma={0: 0.7, 1: 0.7})
    assert set(np.unique(generate(cfg).true_z)) == {0, 1}


def test_config_validation_and_string_keys():
    cfg = SynthConfig(hr={"0": 1, "1": 0.5, "-1": 2})
    assert cfg.hr == {0: 1, 1: 0.5, -1: 2}
    with pytest.raises(ValueError):
        SynthConfig(hr={0: 1, 1: 0.5})
    with pytest.raises(ValueError):
        SynthConfig(censor_prob=1.5)
    with pytest.raises(ValueError):
        SynthConfig(hr={0: 1, 1: -0.5, -1: 2})


def test_determinism_and_files(tmp_path):
    a = generate(SynthConfig(n=400, seed=9))
    b = generate(SynthConfig(n=400, seed=9))
    assert a.data.equals(b.data)
    csv_path, truth_path = write(a, tmp_path / "sim.csv")
    assert truth_path.name == "sim_truth.csv"
    assert load_csv(csv_path).equals(a.data)
    np.testing.assert_array_equal(read_truth(truth_path), a.true_z)
