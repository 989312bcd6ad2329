import io
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import dscopula.experiments as experiments_mod
from dscopula import (
    ChainConfig,
    ExperimentConfig,
    MarginPair,
    PriorSpec,
    QuadratureSpec,
    ReferenceCopula,
    ball_probability,
    batch_means_stderr,
    derive_seed,
    fisher_sqrt_integral_1d,
    fisher_sqrt_integral_2d,
    fisher_sqrt_slice_integrand,
    inscribed_ball_radius,
    log_fisher_info_det,
    radius_density,
    run_mise_study,
)


def test_derive_seed_deterministic_and_distinct():
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    seen = {derive_seed(7, i, j) for i in range(8) for j in range(8)}
    assert len(seen) == 64
    assert derive_seed(7, 1, 2) != derive_seed(8, 1, 2)
    assert all(0 <= s < 2**64 for s in seen)


def test_batch_means_stderr_manual():
    x = np.arange(9.0)
    # 4 batches of 2, the 9th point dropped
    means = np.array([0.5, 2.5, 4.5, 6.5])
    expected = means.std(ddof=1) / 2.0
    assert_allclose(batch_means_stderr(x, batches=4), expected, rtol=1e-14)
    with pytest.raises(ValueError):
        batch_means_stderr(np.arange(3.0), batches=4)


def test_batch_means_stderr_iid_scale(rng):
    x = rng.normal(size=40_000)
    se = batch_means_stderr(x)
    assert_allclose(se, 1.0 / math.sqrt(40_000), rtol=0.5)


def test_slice_integrand_matches_fisher_determinant(rng):
    # the closed-form section integrand must agree with the production
    # determinant evaluated at the assembled matrix
    for _ in range(20):
        x, y = rng.uniform(0.05, 0.95, 2)
        xc, yc = 1.0 - x, 1.0 - y
        P = (
            np.array(
                [
                    [x + y, x + yc, 2 * xc],
                    [xc + y, xc + yc, 2 * x],
                    [2 * yc, 2 * y, 1.0],
                ]
            )
            / 3.0
        )
        direct = math.exp(0.5 * log_fisher_info_det(P))
        assert_allclose(fisher_sqrt_slice_integrand(x, xc, y, yc), direct, rtol=1e-10)


def test_fisher_integral_1d_closed_form():
    assert_allclose(fisher_sqrt_integral_1d(), 2.0 * math.pi, rtol=1e-12)
    assert_allclose(fisher_sqrt_integral_1d(points=300), 2.0 * math.pi, rtol=1e-10)


def test_fisher_integral_2d_converged():
    coarse = fisher_sqrt_integral_2d(points=400)
    fine = fisher_sqrt_integral_2d(points=800)
    assert abs(fine - coarse) / fine < 1e-9
    assert 3385.0 < fine < 3386.0


def test_ball_probability_order_two_is_certain():
    # for m = 2 the inscribed ball radius equals the maximal radius, so
    # every state is inside
    prior = PriorSpec("uniform", 2)
    cfg = ChainConfig(m=2, prior=prior, T=500, burn_in=100, mode="prior_only", thin=0)
    res = ball_probability(prior, 2, chains=3, config=cfg)
    assert res.estimate == 1.0
    assert res.threshold == inscribed_ball_radius(2) == 1.0
    assert res.retained == 3 * 400
    assert np.array_equal(res.per_chain, np.ones(3))
    assert np.array_equal(res.envelope, np.ones((500, 3)))


def test_ball_probability_interior_case():
    prior = PriorSpec("uniform", 3)
    cfg = ChainConfig(m=3, prior=prior, T=4_000, burn_in=500, mode="prior_only", thin=0, seed=42)
    res = ball_probability(prior, 3, chains=4, config=cfg)
    assert 0.0 < res.estimate < 1.0
    env = res.envelope
    assert env.shape == (4_000, 3)
    assert (env[:, 0] <= env[:, 1] + 1e-15).all()
    assert (env[:, 1] <= env[:, 2] + 1e-15).all()
    assert_allclose(res.estimate, res.per_chain.mean(), rtol=1e-15)


def test_ball_probability_validates():
    prior = PriorSpec("uniform", 3)
    with pytest.raises(ValueError):
        ball_probability(prior, 4, chains=2)
    with pytest.raises(ValueError):
        ball_probability(
            prior, 3, chains=2, config=ChainConfig(m=3, prior=prior, mode="posterior")
        )
    with pytest.raises(ValueError):
        ball_probability(prior, 3, chains=0)


def test_envelope_csv_format():
    prior = PriorSpec("uniform", 2)
    cfg = ChainConfig(m=2, prior=prior, T=8, burn_in=2, mode="prior_only", thin=0)
    res = ball_probability(prior, 2, chains=2, config=cfg)
    buf = io.StringIO()
    res.write_envelope_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "iteration,min,mean,max"
    assert len(lines) == 9
    assert lines[1].split(",")[0] == "1"


def test_radius_density_summaries():
    prior = PriorSpec("jeffreys", 4)
    cfg = ChainConfig(m=4, prior=prior, T=3_000, burn_in=500, mode="prior_only", thin=0, seed=3)
    res = radius_density(prior, 4, config=cfg)
    assert res.radii.shape == (2_500,)
    assert res.radii.min() >= 0.0
    assert res.radii.max() <= math.sqrt(3.0) + 1e-12
    assert res.q95 == float(np.quantile(res.radii, 0.95))
    assert_allclose(res.mean_radius, res.radii.mean(), rtol=1e-15)
    assert res.grid.shape == res.density.shape == (256,)
    assert res.grid[0] == 0.0
    assert_allclose(res.grid[-1], res.q95, rtol=1e-15)
    assert (res.density >= 0.0).all()
    buf = io.StringIO()
    res.write_samples_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "radius"
    assert len(lines) == 2_501
    buf = io.StringIO()
    res.write_density_csv(buf)
    assert buf.getvalue().startswith("radius,density\n")


def test_square_root_prior_spreads_radius_outward():
    # the square-root-information prior favors the polytope boundary, so the
    # radius runs stochastically larger than under the flat prior
    m = 4
    cfg = lambda kind: ChainConfig(
        m=m, prior=PriorSpec(kind, m), T=6_000, burn_in=1_000,
        mode="prior_only", thin=0, seed=1717,
    )
    flat = radius_density(PriorSpec("uniform", m), m, config=cfg("uniform"))
    rooted = radius_density(PriorSpec("jeffreys", m), m, config=cfg("jeffreys"))
    assert rooted.mean_radius > flat.mean_radius


def _tiny_model(rho=0.5):
    return ReferenceCopula("gaussian", rho)


def test_experiment_config_validates():
    model = _tiny_model()
    with pytest.raises(ValueError):
        ExperimentConfig(model=model, margin_mode="guessed")
    with pytest.raises(ValueError):
        ExperimentConfig(model=model, n=0)
    with pytest.raises(ValueError):
        ExperimentConfig(model=model, replications=0)
    with pytest.raises(ValueError):
        ExperimentConfig(model=model, estimators=("bogus",))
    with pytest.raises(ValueError):
        ExperimentConfig(model=model, estimators=())
    with pytest.raises(ValueError):
        ExperimentConfig(
            model=model, m=6, chain=ChainConfig(m=4, prior=PriorSpec("jeffreys", 4))
        )
    with pytest.raises(ValueError):
        ExperimentConfig(model=model, rhos=())
    with pytest.raises(ValueError):
        ExperimentConfig(model=model, rhos=(0.5, 1.5))


def test_rho_grid_and_chain_template():
    model = _tiny_model(0.3)
    cfg = ExperimentConfig(model=model)
    assert cfg.rho_grid() == (0.3,)
    swept = ExperimentConfig(model=model, rhos=(0.0, 0.5))
    assert swept.rho_grid() == (0.0, 0.5)
    template = cfg.chain_template()
    assert template.m == 6
    assert template.prior == PriorSpec("jeffreys", 6)
    custom = ChainConfig(m=4, prior=PriorSpec("uniform", 4))
    assert ExperimentConfig(model=model, m=4, chain=custom).chain_template() is custom


def test_truth_estimator_scores_zero():
    cfg = ExperimentConfig(
        model=_tiny_model(),
        estimators=("truth",),
        replications=3,
        n=10,
        quadrature=QuadratureSpec(resolution=50),
    )
    report = run_mise_study(cfg)
    mise, stderr, k = report.value("truth")
    assert mise == 0.0
    assert stderr == 0.0
    assert k == 3
    assert report.failures == ()


def test_single_replication_stderr_is_zero():
    cfg = ExperimentConfig(
        model=_tiny_model(),
        estimators=("deheuvels",),
        replications=1,
        n=15,
        quadrature=QuadratureSpec(resolution=50),
    )
    mise, stderr, k = run_mise_study(cfg).value("deheuvels")
    assert mise > 0.0
    assert stderr == 0.0
    assert k == 1


def test_rho_sweep_rows_and_csv():
    cfg = ExperimentConfig(
        model=_tiny_model(),
        estimators=("deheuvels", "kernel"),
        replications=2,
        n=12,
        rhos=(0.0, 0.6),
        quadrature=QuadratureSpec(resolution=40),
        master_seed=5,
    )
    report = run_mise_study(cfg)
    assert len(report.rows) == 4
    assert [row.rho for row in report.rows] == [0.0, 0.0, 0.6, 0.6]
    assert {row.family for row in report.rows} == {"gaussian"}
    mise, _, k = report.value("kernel", rho=0.6)
    assert k == 2 and mise > 0.0
    with pytest.raises(KeyError):
        report.value("mle")
    buf = io.StringIO()
    report.write_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "family,rho,n,estimator,mise,stderr,R"
    assert len(lines) == 5
    assert lines[1].startswith("gaussian,0,12,deheuvels,")


def test_data_stream_is_shared_across_estimator_sets():
    # the data seed is keyed by (rho index, replication) only, so adding or
    # removing estimators does not change anyone's sample
    base = dict(
        model=_tiny_model(),
        replications=3,
        n=20,
        quadrature=QuadratureSpec(resolution=40),
        master_seed=99,
    )
    a = run_mise_study(ExperimentConfig(estimators=("deheuvels",), **base))
    b = run_mise_study(ExperimentConfig(estimators=("deheuvels", "kernel"), **base))
    assert a.value("deheuvels") == b.value("deheuvels")


def test_failures_are_recorded_not_raised(monkeypatch):
    def boom(raw, bandwidths=None):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(experiments_mod, "kernel_estimate", boom)
    cfg = ExperimentConfig(
        model=_tiny_model(),
        estimators=("kernel", "deheuvels"),
        replications=2,
        n=10,
        quadrature=QuadratureSpec(resolution=40),
    )
    report = run_mise_study(cfg, workers=1)
    assert len(report.failures) == 2
    failure = report.failures[0]
    assert failure.estimator == "kernel"
    assert failure.message == "RuntimeError: synthetic failure"
    mise, stderr, k = report.value("kernel")
    assert math.isnan(mise) and math.isnan(stderr) and k == 0
    good, _, k_good = report.value("deheuvels")
    assert k_good == 2 and good > 0.0


def test_worker_count_does_not_change_results():
    cfg = ExperimentConfig(
        model=ReferenceCopula("cross", 0.4),
        estimators=("deheuvels", "truth"),
        replications=4,
        n=15,
        quadrature=QuadratureSpec(resolution=40),
        master_seed=123,
    )
    serial = io.StringIO()
    run_mise_study(cfg, workers=1).write_csv(serial)
    parallel = io.StringIO()
    run_mise_study(cfg, workers=2).write_csv(parallel)
    assert serial.getvalue() == parallel.getvalue()


def test_workers_validation():
    cfg = ExperimentConfig(
        model=_tiny_model(), estimators=("truth",), replications=1, n=5
    )
    with pytest.raises(ValueError):
        run_mise_study(cfg, workers=0)
