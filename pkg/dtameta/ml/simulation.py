"""
Simulated meta-analyses and the small-sample efficiency study.

Each replication draws its own generator from (seed, replication), so results do not
depend on the number of worker processes.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np
import pandas as pd

from dtameta.constant.meta_pipeline import SIMULATION_NONCONVERGENCE_FLAG
from dtameta.entity.artifact_entity import SimReport
from dtameta.entity.config_entity import SimConfig, SizeDistribution
from dtameta.entity.model_entity import ModelSpec, StudyRecord, Variant, model_template
from dtameta.exception import DomainError, DTAMetaException
from dtameta.logger import logging
from dtameta.ml.copula.families import simulate_copula, tau_to_theta, theta_to_tau
from dtameta.ml.margins import latent_probability
from dtameta.ml.metric.simulation_metric import summarize_estimates
from dtameta.ml.model.estimator import fit

REPORT_COLUMNS = ["model", "margin", "copula", "parameter", "n_bias", "n_sd", "n_sqrt_vbar", "n_rmse"]


def draw_study_sizes(size: int, size_dist: SizeDistribution, rng: np.random.Generator) -> np.ndarray:
    """n = round(lag + Gamma(shape, scale=1/rate))."""
    return np.rint(size_dist.lag + rng.gamma(size_dist.shape, 1.0 / size_dist.rate, size)).astype(np.int64)


def draw_meta_dataset(n_studies: int, true_model: ModelSpec, rng: np.random.Generator,
                      size_dist: SizeDistribution = None, prevalence: float = 0.43) -> tuple:
    """
    One simulated meta-analysis and the number of empty-arm redraws it needed.

    :return: (list of StudyRecord, redraws)
    """
    if true_model.variant is Variant.SARMANOV:
        raise DomainError("data generation needs a copula model")
    size_dist = size_dist or SizeDistribution()

    sizes = draw_study_sizes(n_studies, size_dist, rng)
    u = simulate_copula(n_studies, true_model.copula, rng)
    x1 = latent_probability(u[:, 0], true_model.margin1)
    x2 = latent_probability(u[:, 1], true_model.margin2)

    studies, redraws = [], 0
    for n, p1, p2 in zip(sizes, x1, x2):
        n = int(max(n, 2))
        n1 = int(rng.binomial(n, prevalence))
        # an empty arm carries no information on sensitivity or specificity
        while n1 in (0, n):
            redraws += 1
            n1 = int(rng.binomial(n, prevalence))
        n2 = n - n1
        y1 = int(np.clip(np.rint(n1 * p1), 0, n1))
        y2 = int(np.clip(np.rint(n2 * p2), 0, n2))
        studies.append(StudyRecord(y1, n1, y2, n2))
    return studies, redraws


def generate_meta_dataset(n_studies: int, true_model: ModelSpec, rng: np.random.Generator,
                          size_dist: SizeDistribution = None, prevalence: float = 0.43) -> list:
    studies, _ = draw_meta_dataset(n_studies, true_model, rng, size_dist, prevalence)
    return studies


def true_model_from_parameters(label: str, pi1: float, pi2: float, scale1: float, scale2: float,
                               tau: float) -> ModelSpec:
    """Model structure of ``label`` at the given margins and Kendall's tau."""
    template = model_template(label)
    copula = tau_to_theta(template.copula.family, template.copula.rotation, tau)
    return template.with_parameters([pi1, pi2, scale1, scale2, copula.theta])


def _reported_parameters(template: ModelSpec, true_model: ModelSpec) -> list:
    names = list(template.parameter_names[:2])
    # scale rows only compare like with like
    if template.margin1.kind is true_model.margin1.kind:
        names += list(template.parameter_names[2:4])
    if template.variant is Variant.SARMANOV:
        return names
    return names + ["tau"]


def run_replication(config: SimConfig, replication: int) -> dict:
    """
    Generate and fit one replication.

    :return: {"redraws": int, "fits": {label: {"converged", "estimates", "variances"}}}
    """
    rng = np.random.default_rng([config.seed, replication])
    studies, redraws = draw_meta_dataset(config.n_studies, config.true_model, rng,
                                         config.size_dist, config.prevalence)
    options = replace(config.fit_options, boundary_refit=False)
    fits = {}
    for label in config.fitted_models:
        template = model_template(label)
        try:
            result = fit(studies, template, options)
        except DTAMetaException as e:
            logging.debug(f"replication {replication}: {label} failed: {e}")
            fits[label] = {"converged": False, "estimates": {}, "variances": {}}
            continue
        estimates = dict(result.estimates)
        estimates["tau"] = result.tau_hat
        se = result.se or {}
        variances = {name: se[name] ** 2 for name in se}
        fits[label] = {"converged": result.converged, "estimates": estimates, "variances": variances}
    return {"redraws": redraws, "fits": fits}


def _run_indexed(arguments: tuple) -> dict:
    config, replication = arguments
    return run_replication(config, replication)


def _truth(true_model: ModelSpec) -> dict:
    names = true_model.parameter_names
    values = dict(zip(names, true_model.parameter_vector().tolist()))
    values["tau"] = theta_to_tau(true_model.copula)
    return values


def run_sim_study(config: SimConfig, jobs: int = 1) -> SimReport:
    """Monte-Carlo bias / SD / RMSE / sqrt(average variance) of every fitted model, scaled by N."""
    logging.info(f"simulation: {config.replications} replications of {config.n_studies} studies "
                 f"from {config.true_model.label}, fitting {list(config.fitted_models)}")
    tasks = [(config, r) for r in range(config.replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            outcomes = list(executor.map(_run_indexed, tasks))
    else:
        outcomes = [_run_indexed(task) for task in tasks]

    truth = _truth(config.true_model)
    true_scales = list(config.true_model.parameter_names[2:4])
    rows, converged, excluded, flagged = [], {}, {}, []
    for label in config.fitted_models:
        template = model_template(label)
        kept = [o["fits"][label] for o in outcomes if o["fits"][label]["converged"]]
        converged[label] = len(kept)
        excluded[label] = config.replications - len(kept)
        if excluded[label] > SIMULATION_NONCONVERGENCE_FLAG * config.replications:
            flagged.append(label)
            logging.warning(f"simulation: {label} failed to converge in "
                            f"{excluded[label]} of {config.replications} replications")
        for name in _reported_parameters(template, config.true_model):
            true_name = name
            if name in template.parameter_names[2:4]:
                true_name = true_scales[template.parameter_names.index(name) - 2]
            summary = summarize_estimates(
                [k["estimates"][name] for k in kept],
                [k["variances"].get(name, np.nan) for k in kept],
                truth[true_name], config.n_studies)
            rows.append({
                "model": label,
                "margin": template.margin1.kind.value,
                "copula": template.copula.label if template.copula else "sarmanov",
                "parameter": name,
                "n_bias": summary.n_bias,
                "n_sd": summary.n_sd,
                "n_sqrt_vbar": summary.n_sqrt_vbar,
                "n_rmse": summary.n_rmse,
            })

    redraws = int(sum(o["redraws"] for o in outcomes))
    return SimReport(table=pd.DataFrame(rows, columns=REPORT_COLUMNS), replications=config.replications,
                     n_studies=config.n_studies, converged=converged, excluded=excluded,
                     flagged=flagged, redraws=redraws)
