import sys
from typing import Optional

from dtameta.components.data_ingestion import DataIngestion, ingest
from dtameta.components.data_validation import DataValidation
from dtameta.components.model_fitting import ModelFitting
from dtameta.components.sroc_export import SrocExport
from dtameta.entity.artifact_entity import (
    DataIngestionArtifact,
    DataValidationArtifact,
    ModelFittingArtifact,
    SrocExportArtifact,
)
from dtameta.entity.config_entity import (
    DataIngestionConfig,
    DataValidationConfig,
    FitOptions,
    MetaPipelineConfig,
    ModelFittingConfig,
    SrocConfig,
)
from dtameta.entity.model_entity import Dataset
from dtameta.exception import DTAMetaException
from dtameta.logger import logging


class MetaAnalysisPipeline:

    def __init__(self, input_file_path: str, out_dir: Optional[str] = None, fit_options: FitOptions = None):
        self.meta_pipeline_config = MetaPipelineConfig(out_dir=out_dir)
        self.input_file_path = input_file_path
        self.fit_options = fit_options or FitOptions()

    def start_data_ingestion(self) -> DataIngestionArtifact:
        try:
            data_ingestion_config = DataIngestionConfig(self.meta_pipeline_config, self.input_file_path)
            logging.info("Starting data ingestion")
            data_ingestion_artifact = DataIngestion(data_ingestion_config).initiate_data_ingestion()
            logging.info(f"Data ingestion completed and artifact: {data_ingestion_artifact}")
            return data_ingestion_artifact
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e

    def start_data_validation(self, data_ingestion_artifact: DataIngestionArtifact) -> DataValidationArtifact:
        try:
            data_validation_config = DataValidationConfig(self.meta_pipeline_config)
            data_validation = DataValidation(data_ingestion_artifact=data_ingestion_artifact,
                                             data_validation_config=data_validation_config)
            return data_validation.initiate_data_validation()
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e

    def load_dataset(self, data_validation_artifact: DataValidationArtifact) -> Dataset:
        """The validated studies, named after the input file."""
        name = ingest(self.input_file_path).name
        return ingest(data_validation_artifact.valid_file_path, name=name)

    def start_model_fitting(self, data_validation_artifact: DataValidationArtifact, models: tuple = None,
                            jobs: int = 1) -> ModelFittingArtifact:
        try:
            model_fitting_config = ModelFittingConfig(self.meta_pipeline_config, models=models,
                                                      fit_options=self.fit_options, jobs=jobs)
            logging.info(f"Starting model fitting of {len(model_fitting_config.models)} models")
            model_fitting = ModelFitting(data_validation_artifact, model_fitting_config)
            return model_fitting.initiate_model_fitting(self.load_dataset(data_validation_artifact))
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e

    def start_sroc_export(self, data_validation_artifact: DataValidationArtifact, model_label: str,
                          quantiles: tuple, levels: tuple, fit_file_path: Optional[str] = None) -> SrocExportArtifact:
        try:
            sroc_config = SrocConfig(self.meta_pipeline_config, model_label, quantiles=quantiles, levels=levels,
                                     fit_file_path=fit_file_path, fit_options=self.fit_options)
            logging.info(f"Starting SROC export of {model_label}")
            return SrocExport(sroc_config).initiate_sroc_export(self.load_dataset(data_validation_artifact))
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e

    def run_fit_pipeline(self, models: tuple = None, jobs: int = 1) -> ModelFittingArtifact:
        data_ingestion_artifact = self.start_data_ingestion()
        data_validation_artifact = self.start_data_validation(data_ingestion_artifact)
        return self.start_model_fitting(data_validation_artifact, models, jobs)

    def run_sroc_pipeline(self, model_label: str, quantiles: tuple, levels: tuple,
                          fit_file_path: Optional[str] = None) -> SrocExportArtifact:
        data_ingestion_artifact = self.start_data_ingestion()
        data_validation_artifact = self.start_data_validation(data_ingestion_artifact)
        return self.start_sroc_export(data_validation_artifact, model_label, quantiles, levels, fit_file_path)
