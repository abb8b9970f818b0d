import numpy as np
import pytest

from dtameta.entity.config_entity import FitOptions, SimConfig, SizeDistribution
from dtameta.entity.model_entity import CopulaFamily, CopulaSpec, MarginKind, MarginSpec, ModelSpec, model_template
from dtameta.exception import DomainError
from dtameta.ml.copula.families import sample_kendall_tau, simulate_copula, theta_to_tau
from dtameta.ml.margins import latent_probability
from dtameta.ml.metric.simulation_metric import summarize_estimates
from dtameta.ml.simulation import (
    REPORT_COLUMNS,
    draw_meta_dataset,
    draw_study_sizes,
    generate_meta_dataset,
    run_replication,
    run_sim_study,
    true_model_from_parameters,
)

FAST = FitOptions(nq=8)


def small_config(beta_clayton270, **overrides) -> SimConfig:
    settings = dict(n_studies=12, true_model=beta_clayton270, replications=2, seed=5,
                    fitted_models=("normal-bvn", "beta-clayton270"), fit_options=FAST)
    settings.update(overrides)
    return SimConfig(**settings)


class TestDataGeneration:

    def test_study_sizes(self, rng):
        sizes = draw_study_sizes(5000, SizeDistribution(), rng)
        assert sizes.dtype == np.int64
        assert sizes.min() >= 30
        assert sizes.mean() == pytest.approx(SizeDistribution().mean, rel=0.05)

    def test_meta_dataset(self, rng, beta_clayton270):
        studies, redraws = draw_meta_dataset(50, beta_clayton270, rng)
        assert len(studies) == 50
        assert redraws >= 0
        for study in studies:
            assert study.n1 >= 1 and study.n2 >= 1
            assert 0 <= study.y1 <= study.n1 and 0 <= study.y2 <= study.n2

    def test_seeded_draws_repeat(self, beta_clayton270):
        first = generate_meta_dataset(20, beta_clayton270, np.random.default_rng(9))
        second = generate_meta_dataset(20, beta_clayton270, np.random.default_rng(9))
        assert first == second

    def test_empty_arms_are_redrawn(self, rng, beta_clayton270):
        tiny = SizeDistribution(shape=1.0, rate=1.0, lag=1.0)
        studies, redraws = draw_meta_dataset(200, beta_clayton270, rng, tiny, prevalence=0.2)
        assert redraws > 0
        assert all(0 < study.n1 and 0 < study.n2 for study in studies)

    def test_negative_dependence_shows_in_the_data(self, rng, beta_clayton270):
        studies = generate_meta_dataset(400, beta_clayton270, rng)
        sens = np.array([s.y1 / s.n1 for s in studies])
        spec = np.array([s.y2 / s.n2 for s in studies])
        assert np.corrcoef(sens, spec)[0, 1] < 0.0

    def test_latent_pairs_keep_kendall_tau(self, rng, beta_clayton270):
        u = simulate_copula(10_000, beta_clayton270.copula, rng)
        x1 = latent_probability(u[:, 0], beta_clayton270.margin1)
        x2 = latent_probability(u[:, 1], beta_clayton270.margin2)
        assert sample_kendall_tau(x1, x2) == pytest.approx(-0.5, abs=0.02)

    def test_vanishing_dispersion_pins_the_proportions(self, rng):
        model = ModelSpec(MarginSpec(MarginKind.BETA, 0.7, 1e-6), MarginSpec(MarginKind.BETA, 0.9, 1e-6),
                          CopulaSpec(CopulaFamily.FRANK, 0, 0.0))
        for study in generate_meta_dataset(200, model, rng):
            assert abs(study.y1 / study.n1 - 0.7) <= 0.5 / study.n1 + 0.005
            assert abs(study.y2 / study.n2 - 0.9) <= 0.5 / study.n2 + 0.005

    def test_sarmanov_cannot_generate(self, rng):
        with pytest.raises(DomainError):
            draw_meta_dataset(10, model_template("sarmanov"), rng)

    def test_true_model_from_tau(self):
        model = true_model_from_parameters("beta-clayton270", 0.7, 0.9, 0.2, 0.1, -0.5)
        assert model.margin1.kind is MarginKind.BETA
        assert model.copula.family is CopulaFamily.CLAYTON and model.copula.rotation == 270
        assert model.copula.theta == pytest.approx(2.0)
        assert theta_to_tau(model.copula) == pytest.approx(-0.5)

    def test_invalid_size_distribution(self):
        with pytest.raises(DomainError):
            SizeDistribution(shape=0.0)


class TestSummaries:

    def test_rmse_identity(self, rng):
        estimates = rng.normal(0.72, 0.05, 40)
        summary = summarize_estimates(estimates, np.full(40, 0.0025), 0.7, 50)
        assert summary.n_rmse ** 2 == pytest.approx(summary.n_bias ** 2 + summary.n_sd ** 2, rel=1e-12)
        assert summary.n_sqrt_vbar == pytest.approx(50 * 0.05)
        assert summary.count == 40

    def test_single_replication(self):
        summary = summarize_estimates([0.75], [np.nan], 0.7, 10)
        assert summary.n_sd == 0.0
        assert summary.n_rmse == pytest.approx(abs(summary.n_bias))
        assert summary.n_bias == pytest.approx(0.5)
        assert np.isnan(summary.n_sqrt_vbar)

    def test_no_estimates(self):
        summary = summarize_estimates([], [], 0.7, 10)
        assert summary.count == 0 and np.isnan(summary.n_rmse)


class TestSimulationStudy:

    def test_replication_is_reproducible(self, beta_clayton270):
        config = small_config(beta_clayton270)
        first, second = run_replication(config, 1), run_replication(config, 1)
        assert first["redraws"] == second["redraws"]
        assert first["fits"]["normal-bvn"]["estimates"] == second["fits"]["normal-bvn"]["estimates"]

    def test_report(self, beta_clayton270):
        report = run_sim_study(small_config(beta_clayton270))
        assert list(report.table.columns) == REPORT_COLUMNS
        assert report.replications == 2 and report.n_studies == 12
        beta_rows = report.table[report.table.model == "beta-clayton270"]
        assert list(beta_rows.parameter) == ["pi1", "pi2", "gamma1", "gamma2", "tau"]
        # sigma is not comparable with the true gamma, so the normal fit reports no scale rows
        normal_rows = report.table[report.table.model == "normal-bvn"]
        assert list(normal_rows.parameter) == ["pi1", "pi2", "tau"]
        for label in ("normal-bvn", "beta-clayton270"):
            assert report.converged[label] + report.excluded[label] == 2

    def test_single_replication_has_zero_spread(self, beta_clayton270):
        report = run_sim_study(small_config(beta_clayton270, replications=1, fitted_models=("beta-clayton270",)))
        if report.converged["beta-clayton270"]:
            table = report.table
            np.testing.assert_allclose(table.n_sd, 0.0)
            np.testing.assert_allclose(table.n_rmse, table.n_bias.abs())

    def test_worker_count_does_not_change_results(self, beta_clayton270):
        config = small_config(beta_clayton270, fitted_models=("normal-bvn",))
        serial, parallel = run_sim_study(config, jobs=1), run_sim_study(config, jobs=2)
        assert serial.table.equals(parallel.table)
        assert serial.redraws == parallel.redraws

    def test_sarmanov_rows(self, beta_clayton270):
        report = run_sim_study(small_config(beta_clayton270, replications=1, fitted_models=("sarmanov",)))
        assert "tau" not in set(report.table.parameter)

    def test_invalid_config(self, beta_clayton270):
        with pytest.raises(DomainError):
            small_config(beta_clayton270, replications=0)
        with pytest.raises(DomainError):
            small_config(beta_clayton270, prevalence=1.0)


@pytest.mark.slow
class TestEfficiencyTrends:

    def test_fifty_study_biases(self, beta_clayton270):
        config = SimConfig(n_studies=50, true_model=beta_clayton270, replications=60, seed=2024,
                           fitted_models=("beta-clayton270", "normal-clayton270", "khs-clayton270"))
        report = run_sim_study(config, jobs=4)
        table = report.table.set_index(["model", "parameter"])
        # KHS loses most of the dependence and overstates sensitivity
        assert table.loc[("khs-clayton270", "tau"), "n_bias"] > 10.0
        assert table.loc[("khs-clayton270", "pi1"), "n_bias"] > 2.0
        # the true model slightly understates the dependence
        assert -10.0 < table.loc[("beta-clayton270", "tau"), "n_bias"] < 0.0
        # normal margins overstate both meta-analytic parameters
        assert table.loc[("normal-clayton270", "pi1"), "n_bias"] > 0.5
        assert table.loc[("normal-clayton270", "pi2"), "n_bias"] > 0.5
