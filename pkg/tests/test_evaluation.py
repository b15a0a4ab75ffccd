import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pairwise_auc, random_dataset
from sparsecox.data import Dataset
from sparsecox.estimators import treatment_hr
from sparsecox.evaluation import (
    SubgroupReport,
    SweepRow,
    roc,
    select_top,
    subgroup_sweep,
    table,
    write_reports_csv,
    write_reports_json,
)
from sparsecox.synth import SynthConfig, generate


def test_roc_perfect_and_constant():
    assert roc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]).auc == 1.0
    c = roc(np.zeros(6), [1, 0, 1, 0, 0, 1])
    assert c.auc == 0.5
    np.testing.assert_array_equal(c.fpr, [0, 1])
    np.testing.assert_array_equal(c.tpr, [0, 1])


def test_roc_single_class_raises():
    with pytest.raises(ValueError):
        roc([0.1, 0.2], [1, 1])


def test_roc_matches_pairwise_concordance():
    rng = np.random.default_rng(0)
    scores = np.round(rng.normal(size=200), 1)  # rounding creates ties
    labels = rng.integers(0, 2, 200)
    assert abs(roc(scores, labels).auc - pairwise_auc(scores, labels)) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**16))
def test_roc_invariances(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 60))
    scores = rng.integers(0, 8, n).astype(float)
    labels = np.r_[0, 1, rng.integers(0, 2, n - 2)]
    c = roc(scores, labels)
    assert np.all(np.diff(c.tpr) >= 0) and np.all(np.diff(c.fpr) >= 0)
    assert c.tpr[-1] == 1.0 and c.fpr[-1] == 1.0
    assert roc(np.exp(scores) * 3 + 1, labels).auc == pytest.approx(c.auc, abs=1e-15)
    assert abs(c.auc - pairwise_auc(scores, labels)) <= 1e-12


@pytest.mark.parametrize("n,q,k", [(10, 0.2, 2), (7, 0.2, 2), (5, 0.6, 3), (3, 1 / 3, 1), (10, 1.0, 10)])
def test_select_top_counts(n, q, k):
    assert len(select_top(np.arange(n), q)) == k == math.ceil(round(q * n, 9))


def test_select_top_breaks_ties_by_index():
    np.testing.assert_array_equal(select_top([1.0, 2.0, 2.0, 2.0, 0.0], 0.4), [1, 2])
    with pytest.raises(ValueError):
        select_top([1.0], 0.0)


def test_full_fraction_reproduces_population_estimate():
    ds = random_dataset(np.random.default_rng(1), 80)
    rep = subgroup_sweep(lambda x: x[:, 0], ds, 1, (1.0,), n_boot=30, seed=4)
    assert rep.rows[0].estimate == treatment_hr(ds, n_boot=30, seed=4)
    assert rep.rows[0].n_selected == ds.n


def test_oracle_scorer_recovers_benefit():
    lab = generate(SynthConfig(n=20_000, seed=3))
    z = lab.true_z
    rep = subgroup_sweep(lambda x: (z == 1).astype(float), lab.data, 1, (1 / 3,), n_boot=20)
    assert rep.rows[0].estimate.point == pytest.approx(0.5, rel=0.15)


def test_not_estimable_rows_are_flagged():
    # the top 20% are all treated
    x = np.arange(10.0)[:, None]
    ds = Dataset(x, np.arange(1.0, 11.0), np.ones(10, int), (np.arange(10) >= 5).astype(int))
    rep = subgroup_sweep(lambda v: v[:, 0], ds, 1, (0.2, 1.0), n_boot=5)
    assert rep.rows[0].estimate is None and "arm" in rep.rows[0].note
    assert rep.rows[0].cell() == "not estimable"
    assert rep.rows[1].estimable
    censored = Dataset(x, np.arange(1.0, 11.0), np.r_[np.zeros(8, int), 1, 1], np.arange(10) % 2)
    rep = subgroup_sweep(lambda v: -v[:, 0], censored, 1, (0.4,), n_boot=5)
    assert "no events" in rep.rows[0].note


def test_reports_outputs(tmp_path):
    ds = random_dataset(np.random.default_rng(2), 120)
    reps = [
        subgroup_sweep(lambda x: x[:, 0], ds, 1, method="A", n_boot=10),
        subgroup_sweep(lambda x: -x[:, 1], ds, 1, method="B", n_boot=10),
    ]
    lines = table(reps).splitlines()
    assert lines[0].split() == ["method", "20%", "40%", "60%", "80%"]
    assert [line.split()[0] for line in lines[1:]] == ["A", "B"]
    write_reports_csv(reps, tmp_path / "r.csv")
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8 and rows[0]["method"] == "A"
    write_reports_json(reps, tmp_path / "r.json")
    back = json.loads((tmp_path / "r.json").read_text())
    assert back[1]["rows"][0]["n_selected"] == 24
    assert back[0]["ci_method"] == "percentile bootstrap"


def test_report_row_lookup():
    rep = SubgroupReport("m", "hazard_ratio", 1, [SweepRow(0.2, 1, 1, 0, 0, None)])
    assert rep.row(0.2).n_selected == 1
    with pytest.raises(KeyError):
        rep.row(0.4)
