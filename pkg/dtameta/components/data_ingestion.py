import os
import sys

import pandas as pd

from dtameta.constant.meta_pipeline import (
    DATA_INGESTION_FIRST_DATA_LINE,
    FALSE_NEGATIVE_COLUMN,
    FALSE_POSITIVE_COLUMN,
    STUDY_COLUMN,
    TRUE_NEGATIVE_COLUMN,
    TRUE_POSITIVE_COLUMN,
)
from dtameta.entity.artifact_entity import DataIngestionArtifact
from dtameta.entity.config_entity import DataIngestionConfig
from dtameta.entity.model_entity import Dataset, StudyRecord
from dtameta.exception import DTAMetaException, ValidationError
from dtameta.logger import logging
from dtameta.utils.main_utils import write_csv_atomic

STUDY_TABLE_COLUMNS = [STUDY_COLUMN, TRUE_POSITIVE_COLUMN, FALSE_NEGATIVE_COLUMN,
                       FALSE_POSITIVE_COLUMN, TRUE_NEGATIVE_COLUMN]
COUNT_COLUMNS = STUDY_TABLE_COLUMNS[1:]


def _count(value, column: str, line: int, path: str) -> int:
    # short rows leave NaN in the trailing fields
    text = value.strip() if isinstance(value, str) else ""
    if not text.lstrip("-").isdigit():
        raise ValidationError(f"{path}: line {line}: column {column}: {value!r} is not an integer count")
    count = int(text)
    if count < 0:
        raise ValidationError(f"{path}: line {line}: column {column}: negative count {count}")
    return count


def ingest(path: str, name: str = None) -> Dataset:
    """
    Read a study table with header ``study,TP,FN,FP,TN``.

    y1 = TP, n1 = TP + FN, y2 = TN, n2 = TN + FP; study order is file order. Errors name
    the offending file line (the header is line 1).
    """
    try:
        dataframe = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise ValidationError(f"{path}: line 1: empty file, expected header {','.join(STUDY_TABLE_COLUMNS)}") from e
    except pd.errors.ParserError as e:
        raise ValidationError(f"{path}: malformed row: {e}") from e
    except OSError as e:
        raise ValidationError(f"{path}: cannot read study table: {e}") from e

    header = [str(column).strip() for column in dataframe.columns]
    if header != STUDY_TABLE_COLUMNS:
        raise ValidationError(f"{path}: line 1: expected header {','.join(STUDY_TABLE_COLUMNS)}, "
                              f"got {','.join(header)}")
    dataframe.columns = header

    studies, labels = [], []
    for index, row in enumerate(dataframe.itertuples(index=False)):
        line = index + DATA_INGESTION_FIRST_DATA_LINE
        tp, fn, fp, tn = (_count(getattr(row, column), column, line, path) for column in COUNT_COLUMNS)
        try:
            studies.append(StudyRecord(y1=tp, n1=tp + fn, y2=tn, n2=tn + fp))
        except ValidationError as e:
            raise ValidationError(f"{path}: line {line}: {e.args[0]}") from e
        label = row.study.strip() if isinstance(row.study, str) else ""
        labels.append(label or str(index + 1))

    if not studies:
        raise ValidationError(f"{path}: no study rows below the header")
    name = name or os.path.splitext(os.path.basename(path))[0]
    logging.info(f"ingested {len(studies)} studies from {path}")
    return Dataset(name=name, studies=studies, source=path, labels=tuple(labels))


def study_frame(dataset: Dataset) -> pd.DataFrame:
    """The study table of a dataset in the ingest layout."""
    labels = dataset.labels or tuple(str(i + 1) for i in range(len(dataset)))
    return pd.DataFrame(
        [(label, s.y1, s.false_negatives, s.false_positives, s.y2) for label, s in zip(labels, dataset.studies)],
        columns=STUDY_TABLE_COLUMNS,
    )


def emit(dataset: Dataset, path: str) -> str:
    """Write a dataset back in the layout ``ingest`` reads."""
    return write_csv_atomic(path, study_frame(dataset))


class DataIngestion:

    def __init__(self, data_ingestion_config: DataIngestionConfig):
        self.data_ingestion_config = data_ingestion_config

    def initiate_data_ingestion(self) -> DataIngestionArtifact:
        """Read the input study table and store a normalised copy in the artifact directory."""
        try:
            logging.info("Entered initiate_data_ingestion")
            dataset = ingest(self.data_ingestion_config.input_file_path)
            emit(dataset, self.data_ingestion_config.dataset_file_path)
            data_ingestion_artifact = DataIngestionArtifact(
                dataset_file_path=self.data_ingestion_config.dataset_file_path,
                n_studies=len(dataset),
                input_file_path=self.data_ingestion_config.input_file_path,
            )
            logging.info(f"Data ingestion artifact: {data_ingestion_artifact}")
            return data_ingestion_artifact
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e
