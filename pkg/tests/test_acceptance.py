"""Acceptance criteria 1-10, each at its stated tolerance.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal summary
prints one PASS/FAIL line per criterion. The synthetic criteria use the
default generator at n=10000 (seeds 1-5) and take several minutes.
"""

import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from oracles import (
    central_difference,
    expand,
    km_brute,
    na_brute,
    random_dataset,
    relative_error,
    weighted_breslow_brute,
)
from sparsecox.baselines import cox_int_loss, fit_cox_int, interaction_design, logistic_loss
from sparsecox.coxph import fit_cox
from sparsecox.data import Standardizer, split_indices
from sparsecox.estimators import StepFunction, kaplan_meier, nelson_aalen
from sparsecox.evaluation import subgroup_sweep
from sparsecox.scs import (
    CASE_1,
    CASE_2,
    FitConfig,
    LatentSpec,
    ScsParams,
    breslow_update,
    e_step,
    fit,
    pl_gradient,
    predict_gating,
    prox_group_l1,
    select_sparsity,
    weighted_partial_loglik,
)
from sparsecox.synth import SynthConfig, generate

SEEDS = (1, 2, 3, 4, 5)
LN_HALF = float(np.log(0.5))


def standardized(labeled):
    return Standardizer.fit(labeled.data).transform(labeled.data)


@pytest.fixture(scope="module")
def default_fits():
    """Default FitConfig on the default generator, one fit per seed."""
    out = {}
    for seed in SEEDS:
        lab = generate(SynthConfig(n=10000, seed=seed))
        ds = standardized(lab)
        params, diag = fit(ds, FitConfig(seed=seed))
        out[seed] = (lab, ds, params, diag)
    return out


@pytest.mark.slow
@pytest.mark.acceptance(1, "phenotype recovery: gating AUC >= 0.85 for groups +1 and -1 in >= 4/5 seeds, <= 2 min per fit")
def test_criterion_1_phenotype_recovery(default_fits, report):
    ok = 0
    for seed, (lab, ds, params, diag) in default_fits.items():
        probs = predict_gating(params, ds.covariates)
        auc_pos = roc_auc_score(lab.true_z == 1, probs[:, params.latent.index(1)])
        auc_neg = roc_auc_score(lab.true_z == -1, probs[:, params.latent.index(-1)])
        ok += auc_pos >= 0.85 and auc_neg >= 0.85
        report(f"seed {seed}: AUC(+1)={auc_pos:.4f} AUC(-1)={auc_neg:.4f} fit {diag.seconds:.1f}s")
        assert diag.seconds <= 120.0
    report(f"{ok}/5 seeds meet both thresholds")
    assert ok >= 4


@pytest.mark.slow
@pytest.mark.acceptance(2, "treatment-effect recovery: |omega - ln 0.5| <= 0.1 in >= 4/5 seeds")
def test_criterion_2_treatment_effect(default_fits, report):
    errs = {seed: abs(f[2].omega - LN_HALF) for seed, f in default_fits.items()}
    for seed, e in errs.items():
        report(f"seed {seed}: omega={default_fits[seed][2].omega:.4f} |error|={e:.4f}")
    assert all(f[2].omega <= 0 for f in default_fits.values())  # canonical orientation
    assert sum(e <= 0.1 for e in errs.values()) >= 4


@pytest.mark.slow
@pytest.mark.acceptance(3, "sparsity recovery: target 2 selects exactly {X1, X2} in >= 4/5 seeds")
def test_criterion_3_sparsity(report):
    hits = 0
    for seed in SEEDS:
        ds = standardized(generate(SynthConfig(n=10000, seed=seed)))
        res = select_sparsity(ds, FitConfig(seed=seed, restarts=1), 2)
        active = set(res.params.active_features)
        hits += active == {"X1", "X2"}
        report(f"seed {seed}: epsilon={res.epsilon:.3g} active={sorted(active)}")
    assert hits >= 4


@pytest.mark.acceptance(4, "oracle equivalence of KM, NA and null Breslow on 50 datasets (n <= 20) within 1e-12")
def test_criterion_4_oracles(report):
    rng = np.random.default_rng(4)
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(2, 21))
        ds = random_dataset(rng, n, tie_pool=int(rng.integers(2, 8)) if i % 2 else None)
        km, na = kaplan_meier(ds), nelson_aalen(ds)
        params = ScsParams(np.zeros((3, ds.d)), np.zeros(ds.d), 0.0, StepFunction([], []), LatentSpec(CASE_2))
        gamma = np.full((n, 3), 1 / 3)
        lam = breslow_update(params, gamma, ds)
        for t in np.r_[0.0, np.unique(ds.time), ds.time.max() + 1.0]:
            worst = max(
                worst,
                abs(km(t) - km_brute(ds.time, ds.event, t)),
                abs(na(t) - na_brute(ds.time, ds.event, t)),
                abs(lam(t) - weighted_breslow_brute(np.zeros(ds.d), 0.0, CASE_2, gamma, ds, t)),
            )
    report(f"largest absolute difference {worst:.2e}")
    assert worst <= 1e-12


@pytest.mark.acceptance(5, "gradients of the weighted PL and both baseline losses match finite differences (rel <= 1e-4)")
def test_criterion_5_gradients(report):
    rng = np.random.default_rng(5)
    worst = {"pl": 0.0, "cox_int": 0.0, "logistic": 0.0}
    for _ in range(20):
        ds = random_dataset(rng, 50, d=3, tie_pool=int(rng.integers(5, 40)))
        theta = np.zeros((3, 3))
        beta, omega = rng.normal(0, 0.5, 3), float(rng.normal(0, 0.5))
        gamma = rng.dirichlet(np.ones(3), ds.n)

        def pl(v):
            p = ScsParams(theta, v[:-1], v[-1], StepFunction([], []), LatentSpec(CASE_2))
            return weighted_partial_loglik(p, gamma, ds)

        gb, gw = pl_gradient(ScsParams(theta, beta, omega, StepFunction([], []), LatentSpec(CASE_2)), gamma, ds)
        fd = central_difference(pl, np.r_[beta, omega])
        worst["pl"] = max(worst["pl"], np.max(relative_error(np.r_[gb, gw], fd)))

        c = rng.normal(0, 0.5, 6)
        fd = central_difference(lambda v: cox_int_loss(v, ds)[0], c)
        worst["cox_int"] = max(worst["cox_int"], np.max(relative_error(cox_int_loss(c, ds)[1], fd)))

        design = np.hstack([np.ones((ds.n, 1)), interaction_design(ds)])
        y = rng.integers(0, 2, ds.n).astype(float)
        c = rng.normal(0, 0.5, 7)
        fd = central_difference(lambda v: logistic_loss(v, design, y)[0], c)
        worst["logistic"] = max(worst["logistic"], np.max(relative_error(logistic_loss(c, design, y)[1], fd)))
    report(", ".join(f"{k}: max rel err {v:.2e}" for k, v in worst.items()))
    assert max(worst.values()) <= 1e-4


@pytest.mark.acceptance(6, "EM monotonicity: objective non-increasing (slack 1e-8) on 10 random configurations")
def test_criterion_6_monotonicity(report):
    worst = -np.inf
    for c in range(10):
        rng = np.random.default_rng(1000 + c)
        n = int(rng.integers(80, 300))
        groups = CASE_2 if c % 2 else CASE_1
        synth = SynthConfig(n=n, seed=c, noise_dims=int(rng.integers(0, 4)), groups=groups,
                            hr={0: 1.0, 1: 0.5, -1: 2.0}, mu={0: (0, 2), 1: (-2, 0), -1: (2, 0)},
                            sigma={0: 0.7, 1: 0.7, -1: 0.7})
        cfg = FitConfig(latent=LatentSpec(groups), epsilon=[0.0, 0.5, 5.0, 50.0][c % 4],
                        eta=float(rng.choice([0.005, 0.01, 0.05, 0.5])), restarts=1, seed=c,
                        max_outer_iters=300, max_halvings=20)
        _, diag = fit(generate(synth).data, cfg)
        rise = float(np.max(np.diff(diag.objective_trace)))
        worst = max(worst, rise)
        assert rise <= 1e-8, f"configuration {c}: objective rose by {rise}"
    report(f"largest single-iteration change {worst:.3e} (negative means strict decrease)")


@pytest.mark.acceptance(7, "prox_group_l1: zero inside threshold, non-expansive, identity at 0, on 1000 columns")
def test_criterion_7_prox(report):
    rng = np.random.default_rng(7)
    for _ in range(1000):
        col = rng.normal(0, rng.choice([0.1, 1.0, 10.0]), 2)
        other = rng.normal(0, rng.choice([0.1, 1.0, 10.0]), 2)
        lam = float(rng.uniform(0, 5))
        a = np.r_[0.0, col][:, None]
        b = np.r_[0.0, other][:, None]
        pa, pb = prox_group_l1(a, lam), prox_group_l1(b, lam)
        if np.linalg.norm(col) <= lam:
            assert np.all(pa == 0.0)
        assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-12
        np.testing.assert_array_equal(prox_group_l1(a, 0.0), a)
    report("1000 random columns checked")


@pytest.mark.acceptance(8, "penalty dominance: epsilon=1e6 gives theta exactly 0 and (beta, omega) within 1e-4 of the pooled Cox fit")
def test_criterion_8_penalty_dominance(report):
    for groups in (CASE_1, CASE_2):
        lab = generate(SynthConfig(n=1000, seed=8))
        ds = standardized(lab)
        params, diag = fit(ds, FitConfig(latent=LatentSpec(groups), epsilon=1e6, tol=1e-12,
                                         max_outer_iters=5000, restarts=1))
        # with uniform gating the M-step target is a Cox fit on the data expanded
        # to one row per (subject, group) with covariates (x, k*a), weighted by gamma
        z, t, e, w = expand(ds, e_step(params, ds).gamma, groups)
        ref = fit_cox(z, t, e, w)
        gap = float(np.max(np.abs(np.r_[params.beta, params.omega] - ref.coef)))
        report(f"groups {groups}: max|theta|={np.abs(params.theta).max():.1g} coefficient gap {gap:.2e}")
        assert np.all(params.theta == 0.0)
        assert gap <= 1e-4


@pytest.mark.acceptance(9, "oracle-truth sweep at fraction 1/3 for group +1: HR in [0.42, 0.58] at n=20000")
def test_criterion_9_oracle_sweep(report):
    for seed in SEEDS:
        lab = generate(SynthConfig(n=20000, seed=seed))
        z = lab.true_z
        rep = subgroup_sweep(lambda x: (z == 1).astype(float), lab.data, 1, (1 / 3,), n_boot=50, seed=seed)
        hr = rep.rows[0].estimate.point
        report(f"seed {seed}: HR={rep.rows[0].cell(3)}")
        assert 0.42 <= hr <= 0.58


@pytest.mark.slow
@pytest.mark.acceptance(10, "held-out 20% benefit subgroup: SCS HR <= cox-int HR in >= 3/5 seeds")
def test_criterion_10_baseline_comparison(report):
    wins = 0
    for seed in SEEDS:
        lab = generate(SynthConfig(n=10000, seed=seed))
        tr, te = split_indices(lab.data, 0.5, seed)
        std = Standardizer.fit(lab.data.subset(tr))
        train, test = std.transform(lab.data.subset(tr)), std.transform(lab.data.subset(te))
        params, _ = fit(train, FitConfig(seed=seed))
        cox_int = fit_cox_int(train, 0.0)
        j = params.latent.index(1)
        scs = subgroup_sweep(lambda x: predict_gating(params, x)[:, j], test, 1, (0.2,), seed=seed)
        base = subgroup_sweep(cox_int.benefit_score, test, 1, (0.2,), seed=seed)
        a, b = scs.rows[0].estimate.point, base.rows[0].estimate.point
        wins += a <= b
        report(f"seed {seed}: SCS {scs.rows[0].cell(3)} vs cox-int {base.rows[0].cell(3)}")
    report(f"SCS at or below cox-int in {wins}/5 seeds")
    assert wins >= 3
