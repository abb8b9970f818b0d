import os
import sys

import numpy as np
import pandas as pd

from dtameta.constant.meta_pipeline import (
    SROC_CONFIDENCE_REGION_FILE_NAME,
    SROC_GLMM_FILE_NAME,
    SROC_NOTICE_FILE_NAME,
    SROC_STUDIES_FILE_NAME,
    SROC_SUMMARY_POINT_FILE_NAME,
)
from dtameta.entity.artifact_entity import CurveSet, FitResult, SrocExportArtifact
from dtameta.entity.config_entity import SrocConfig
from dtameta.entity.model_entity import CopulaFamily, Dataset, MarginKind, Variant, model_template, study_arrays
from dtameta.exception import DomainError, DTAMetaException
from dtameta.logger import logging
from dtameta.ml.model.estimator import fit
from dtameta.ml.sroc import X1_ON_X2, glmm_sroc, sroc_curves
from dtameta.utils.main_utils import load_object, write_csv_atomic, write_text_atomic

ROC_COLUMNS = ["fpr", "sens"]


def curve_file_name(q: float, direction: str = X1_ON_X2) -> str:
    if direction == X1_ON_X2:
        return f"curve_q{q:g}.csv"
    return f"curve_{direction.replace('-', '_')}_q{q:g}.csv"


def contour_file_name(level: float) -> str:
    return f"contour_{level:g}.csv"


def study_points(dataset: Dataset) -> pd.DataFrame:
    """Observed (1 - specificity, sensitivity) of every study, weighted by its size."""
    y1, n1, y2, n2 = study_arrays(dataset.studies)
    return pd.DataFrame({"fpr": (n2 - y2) / n2, "sens": y1 / n1, "weight": n1 + n2})


def _loops_frame(loops: list) -> pd.DataFrame:
    frames = [pd.DataFrame({"loop": index, "fpr": loop[:, 0], "sens": loop[:, 1]})
              for index, loop in enumerate(loops)]
    if not frames:
        return pd.DataFrame(columns=["loop", "fpr", "sens"])
    return pd.concat(frames, ignore_index=True)


def _is_glmm(fit_result: FitResult) -> bool:
    model = fit_result.model
    return (model.variant is Variant.COPULA_MIXED and model.copula.family is CopulaFamily.BVN
            and model.margin1.kind is MarginKind.NORMAL_LOGIT)


class SrocExport:

    def __init__(self, sroc_config: SrocConfig):
        self.sroc_config = sroc_config

    def resolve_fit(self, dataset: Dataset) -> FitResult:
        """The saved fit when one was given, otherwise a fresh fit of the configured model."""
        config = self.sroc_config
        if config.fit_file_path:
            fit_result = load_object(config.fit_file_path)
            if not isinstance(fit_result, FitResult):
                raise DomainError(f"{config.fit_file_path} does not hold a fitted model")
            logging.info(f"using saved fit {fit_result.label} from {config.fit_file_path}")
            return fit_result
        return fit(dataset, model_template(config.model_label), config.fit_options)

    def write_curves(self, curves: CurveSet, fit_result: FitResult, dataset: Dataset) -> list:
        config = self.sroc_config
        written = []

        def write(name: str, frame: pd.DataFrame):
            written.append(write_csv_atomic(os.path.join(config.sroc_dir, name), frame))

        for curve in curves.quantile_curves:
            write(curve_file_name(curve.q, curve.direction), pd.DataFrame(curve.points, columns=ROC_COLUMNS))

        pi1, pi2 = curves.summary.point
        write(SROC_SUMMARY_POINT_FILE_NAME, pd.DataFrame({"fpr": [1.0 - pi2], "sens": [pi1]}))
        if curves.summary.region_available:
            write(SROC_CONFIDENCE_REGION_FILE_NAME, pd.DataFrame(curves.summary.loop, columns=ROC_COLUMNS))
        else:
            logging.warning(f"{curves.model_label}: no standard errors, confidence region not written")

        if curves.predictive is not None:
            for level in curves.predictive.levels:
                write(contour_file_name(level), _loops_frame(curves.predictive.loops[level]))
        if _is_glmm(fit_result) and not fit_result.boundary:
            grid = np.linspace(config.grid_low, config.grid_high, config.grid_size)
            write(SROC_GLMM_FILE_NAME, pd.DataFrame(glmm_sroc(fit_result, grid), columns=ROC_COLUMNS))

        write(SROC_STUDIES_FILE_NAME, study_points(dataset))
        if curves.notice:
            written.append(write_text_atomic(os.path.join(config.sroc_dir, SROC_NOTICE_FILE_NAME),
                                             curves.notice + "\n"))
        return written

    def initiate_sroc_export(self, dataset: Dataset) -> SrocExportArtifact:
        try:
            logging.info("Entered initiate_sroc_export")
            config = self.sroc_config
            fit_result = self.resolve_fit(dataset)
            grid = np.linspace(config.grid_low, config.grid_high, config.grid_size)
            curves = sroc_curves(fit_result, config.quantiles, grid, config.levels,
                                 config.resolution, config.coverage)
            written = self.write_curves(curves, fit_result, dataset)
            sroc_export_artifact = SrocExportArtifact(
                sroc_dir=config.sroc_dir,
                written_files=written,
                deterministic=curves.deterministic,
                curves=curves,
            )
            logging.info(f"SROC export: {len(written)} files in {config.sroc_dir}")
            return sroc_export_artifact
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e
