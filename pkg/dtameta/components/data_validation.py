import sys

import pandas as pd

from dtameta.constant.meta_pipeline import SCHEMA_COLUMNS, SCHEMA_COUNT_COLUMNS
from dtameta.entity.artifact_entity import DataIngestionArtifact, DataValidationArtifact
from dtameta.entity.config_entity import DataValidationConfig
from dtameta.exception import DTAMetaException, ValidationError
from dtameta.logger import logging
from dtameta.utils.main_utils import read_yaml_file, write_yaml_file


class DataValidation:

    # checks the study table as supplied against config/schema.yaml
    def __init__(self, data_ingestion_artifact: DataIngestionArtifact,
                 data_validation_config: DataValidationConfig):
        try:
            self.data_ingestion_artifact = data_ingestion_artifact
            self.data_validation_config = data_validation_config
            self._schema_config = read_yaml_file(data_validation_config.schema_file_path)
        except Exception as e:
            raise DTAMetaException(e, sys) from e

    def _schema_column_names(self) -> list:
        return [name for column in self._schema_config[SCHEMA_COLUMNS] for name in column]

    def validate_columns(self, dataframe: pd.DataFrame) -> bool:
        expected = self._schema_column_names()
        logging.info(f"Required columns: {expected}")
        logging.info(f"Data frame has columns: {list(dataframe.columns)}")
        return list(dataframe.columns) == expected

    def validate_count_columns(self, dataframe: pd.DataFrame) -> list:
        """Names of count columns holding anything other than nonnegative integers."""
        invalid = []
        for column in self._schema_config[SCHEMA_COUNT_COLUMNS]:
            values = pd.to_numeric(dataframe[column], errors="coerce")
            if values.isna().any() or (values < 0).any() or (values % 1 != 0).any():
                invalid.append(column)
        return invalid

    def validate_study_count(self, n_studies: int) -> bool:
        if n_studies < self.data_validation_config.recommended_studies:
            logging.warning(f"{n_studies} studies: fewer than {self.data_validation_config.recommended_studies}, "
                            f"standard errors will be unreliable")
        return n_studies >= self.data_validation_config.min_studies

    def initiate_data_validation(self) -> DataValidationArtifact:
        try:
            logging.info("Entered initiate_data_validation")
            input_file_path = self.data_ingestion_artifact.input_file_path
            dataset_file_path = self.data_ingestion_artifact.dataset_file_path
            dataframe = pd.read_csv(input_file_path, dtype=str, keep_default_na=False, skipinitialspace=True)
            dataframe.columns = [str(column).strip() for column in dataframe.columns]

            messages = []
            if not self.validate_columns(dataframe):
                messages.append(f"columns {list(dataframe.columns)} do not match the schema")
            else:
                invalid = self.validate_count_columns(dataframe)
                if invalid:
                    messages.append(f"count columns {invalid} hold non-integer or negative values")
            if not self.validate_study_count(len(dataframe)):
                messages.append(f"{len(dataframe)} studies, at least "
                                f"{self.data_validation_config.min_studies} are needed")

            validation_status = not messages
            message = "; ".join(messages)
            write_yaml_file(self.data_validation_config.report_file_path, {
                "input_file_path": input_file_path,
                "dataset_file_path": dataset_file_path,
                "n_studies": len(dataframe),
                "validation_status": validation_status,
                "message": message,
            })
            data_validation_artifact = DataValidationArtifact(
                validation_status=validation_status,
                valid_file_path=dataset_file_path,
                message=message,
            )
            logging.info(f"Data validation artifact: {data_validation_artifact}")
            if not validation_status:
                raise ValidationError(f"{input_file_path}: {message}")
            return data_validation_artifact
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e
