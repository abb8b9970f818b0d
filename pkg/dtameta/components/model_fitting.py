import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import pandas as pd

from dtameta.components.data_ingestion import ingest
from dtameta.entity.artifact_entity import DataValidationArtifact, FitResult, ModelFittingArtifact, VuongResult
from dtameta.entity.config_entity import ModelFittingConfig
from dtameta.entity.model_entity import Dataset, model_template
from dtameta.exception import ConvergenceError, DegenerateComparisonError, DTAMetaException
from dtameta.logger import logging
from dtameta.ml.metric.vuong import vuong_test
from dtameta.ml.model.estimator import effective_fit, fit, fitted_loglik
from dtameta.utils.main_utils import save_object, write_csv_atomic, write_json_atomic

FIT_REPORT_COLUMNS = [
    "model", "fit", "converged", "boundary", "loglik",
    "pi1", "pi2", "scale", "scale1", "scale2", "theta", "tau",
    "se_pi1", "se_pi2", "se_scale1", "se_scale2", "se_theta", "se_tau",
    "iterations", "gradient_norm", "vuong_statistic", "vuong_p_value", "message",
]


def fit_report_rows(label: str, result: Optional[FitResult], vuong: Optional[VuongResult] = None,
                    error: str = "") -> list:
    """
    Report rows of one model: the interior fit, then its boundary refit when one was made.

    The Vuong columns sit on the row whose likelihood entered the comparison.
    """
    nan = float("nan")
    if result is None:
        return [dict.fromkeys(FIT_REPORT_COLUMNS, nan) | {
            "model": label, "fit": "failed", "converged": False, "boundary": False, "message": error}]

    rows = []
    fits = [("interior", result)] + ([("boundary", result.boundary_fit)] if result.boundary_fit else [])
    for kind, current in fits:
        estimates, se = current.estimates, current.se or {}
        names = current.model.parameter_names
        row = {
            "model": label,
            "fit": kind,
            "converged": current.converged,
            "boundary": result.boundary,
            "loglik": current.loglik.total,
            "pi1": estimates.get("pi1", nan),
            "pi2": estimates.get("pi2", nan),
            "scale": current.model.margin1.scale_name,
            "scale1": estimates.get(names[2], nan),
            "scale2": estimates.get(names[3], nan),
            "theta": estimates.get("theta", nan),
            "tau": nan if current.tau_hat is None else current.tau_hat,
            "se_pi1": se.get("pi1", nan),
            "se_pi2": se.get("pi2", nan),
            "se_scale1": se.get(names[2], nan),
            "se_scale2": se.get(names[3], nan),
            "se_theta": se.get("theta", nan),
            "se_tau": se.get("tau", nan),
            "iterations": current.iterations,
            "gradient_norm": current.gradient_norm,
            "vuong_statistic": nan,
            "vuong_p_value": nan,
            "message": current.message,
        }
        rows.append(row)
    if vuong is not None:
        rows[-1]["vuong_statistic"] = vuong.statistic
        rows[-1]["vuong_p_value"] = vuong.p_value
    return rows


def compare_to_baseline(baseline: FitResult, fits: dict) -> dict:
    """Vuong test of every fit against the baseline; positive statistics favour the fit."""
    comparisons = {}
    for label, result in fits.items():
        if result is None or result is baseline:
            continue
        try:
            comparisons[label] = vuong_test(fitted_loglik(baseline), fitted_loglik(result))
        except DegenerateComparisonError:
            logging.warning(f"{label}: per-study log-likelihoods equal the baseline's, no Vuong test")
    return comparisons


class ModelFitting:

    def __init__(self, data_validation_artifact: DataValidationArtifact,
                 model_fitting_config: ModelFittingConfig):
        try:
            self.data_validation_artifact = data_validation_artifact
            self.model_fitting_config = model_fitting_config
        except Exception as e:
            raise DTAMetaException(e, sys) from e

    def fit_model(self, dataset: Dataset, label: str) -> tuple:
        """(label, FitResult or None, error message)"""
        try:
            return label, fit(dataset, model_template(label), self.model_fitting_config.fit_options), ""
        except DTAMetaException as e:
            logging.warning(f"{label}: fit failed: {e.args[0]}")
            return label, None, str(e.args[0])

    def fit_grid(self, dataset: Dataset, labels) -> dict:
        """Fits in grid order; up to ``jobs`` models run at once."""
        jobs = self.model_fitting_config.jobs
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as executor:
                outcomes = list(executor.map(lambda label: self.fit_model(dataset, label), labels))
        else:
            outcomes = [self.fit_model(dataset, label) for label in labels]
        return {label: (result, error) for label, result, error in outcomes}

    def initiate_model_fitting(self, dataset: Dataset = None) -> ModelFittingArtifact:
        try:
            logging.info("Entered initiate_model_fitting")
            config = self.model_fitting_config
            dataset = dataset or ingest(self.data_validation_artifact.valid_file_path)

            labels = list(dict.fromkeys(config.models))
            fitted_labels = labels if config.baseline in labels else labels + [config.baseline]
            outcomes = self.fit_grid(dataset, fitted_labels)
            fits = {label: result for label, (result, _) in outcomes.items()}
            failed = {label: error for label, (result, error) in outcomes.items() if result is None}

            baseline = fits.get(config.baseline)
            vuong = compare_to_baseline(baseline, fits) if baseline is not None else {}
            if baseline is None:
                logging.warning(f"baseline {config.baseline} failed, Vuong statistics omitted")

            rows = []
            for label in labels:
                rows += fit_report_rows(label, fits[label], vuong.get(label), failed.get(label, ""))
            report = pd.DataFrame(rows, columns=FIT_REPORT_COLUMNS)
            write_csv_atomic(config.report_file_path, report)
            write_json_atomic(config.report_json_path, {
                "dataset": dataset.name,
                "n_studies": len(dataset),
                "nq": config.fit_options.nq,
                "baseline": config.baseline,
                "models": report.to_dict(orient="records"),
            })

            for label in labels:
                if fits[label] is not None:
                    save_object(os.path.join(config.saved_model_dir, f"{label}.pkl"), fits[label])

            reported = {label: fits[label] for label in labels if fits[label] is not None}
            if not any(effective_fit(result).converged for result in reported.values()):
                diagnostics = {label: failed.get(label) or (fits[label].message if fits[label] else "")
                               for label in labels}
                raise ConvergenceError(f"no model converged: {diagnostics}")

            model_fitting_artifact = ModelFittingArtifact(
                report_file_path=config.report_file_path,
                report_json_path=config.report_json_path,
                saved_model_dir=config.saved_model_dir,
                fits=reported,
                vuong={label: v for label, v in vuong.items() if label in labels},
                failed={label: error for label, error in failed.items() if label in labels},
            )
            logging.info(f"Model fitting artifact: {model_fitting_artifact.report_file_path}, "
                         f"{len(reported)} fits, {len(model_fitting_artifact.failed)} failed")
            return model_fitting_artifact
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e
