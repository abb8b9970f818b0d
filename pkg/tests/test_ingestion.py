import json
import os

import numpy as np
import pandas as pd
import pytest

from dtameta.components.data_ingestion import DataIngestion, emit, ingest, study_frame
from dtameta.components.data_validation import DataValidation
from dtameta.entity.artifact_entity import DataIngestionArtifact
from dtameta.entity.config_entity import DataIngestionConfig, DataValidationConfig, MetaPipelineConfig
from dtameta.entity.model_entity import Dataset, StudyRecord
from dtameta.exception import (
    ConvergenceError,
    DomainError,
    DTAMetaException,
    NumericError,
    ValidationError,
)
from dtameta.utils.main_utils import (
    load_object,
    read_yaml_file,
    round_significant,
    save_object,
    write_csv_atomic,
    write_json_atomic,
    write_yaml_file,
)

HEADER = "study,TP,FN,FP,TN\n"


def write_table(tmp_path, body: str, name: str = "table.csv") -> str:
    path = tmp_path / name
    path.write_text(body)
    return str(path)


class TestIngest:

    def test_row_arithmetic(self, tmp_path):
        dataset = ingest(write_table(tmp_path, HEADER + "s1,25,5,10,60\n"))
        assert dataset.studies == [StudyRecord(y1=25, n1=30, y2=60, n2=70)]
        assert dataset.labels == ("s1",)
        assert dataset.name == "table"

    def test_file_order(self, study_table_path, studies):
        dataset = ingest(study_table_path)
        assert len(dataset) == 10
        assert dataset.studies == studies
        assert dataset.labels == tuple(f"s{i}" for i in range(1, 11))
        assert dataset.source == study_table_path

    def test_empty_arms(self, tmp_path):
        path = write_table(tmp_path, HEADER + "s1,25,5,10,60\ns2,0,0,0,0\n")
        with pytest.raises(ValidationError, match="line 3"):
            ingest(path)

    def test_negative_count(self, tmp_path):
        path = write_table(tmp_path, HEADER + "s1,25,5,-10,60\n")
        with pytest.raises(ValidationError, match="line 2: column FP: negative count"):
            ingest(path)

    @pytest.mark.parametrize("value", ["2.5", "x", ""])
    def test_non_integer(self, tmp_path, value):
        path = write_table(tmp_path, HEADER + f"s1,25,5,10,60\ns2,3,{value},1,9\n")
        with pytest.raises(ValidationError, match="line 3: column FN"):
            ingest(path)

    def test_short_row(self, tmp_path):
        with pytest.raises(ValidationError, match="line 2"):
            ingest(write_table(tmp_path, HEADER + "s1,25,5\n"))

    def test_header(self, tmp_path):
        with pytest.raises(ValidationError, match="line 1: expected header"):
            ingest(write_table(tmp_path, "study,TP,FP,FN,TN\ns1,25,5,10,60\n"))

    def test_empty_and_missing_files(self, tmp_path):
        with pytest.raises(ValidationError, match="line 1"):
            ingest(write_table(tmp_path, ""))
        with pytest.raises(ValidationError):
            ingest(write_table(tmp_path, HEADER, "header_only.csv"))
        with pytest.raises(ValidationError):
            ingest(str(tmp_path / "absent.csv"))

    def test_blank_label_gets_its_position(self, tmp_path):
        dataset = ingest(write_table(tmp_path, HEADER + "a,1,1,1,1\n,2,2,2,2\n"))
        assert dataset.labels == ("a", "2")

    def test_roundtrip(self, tmp_path, dataset):
        path = emit(dataset, str(tmp_path / "out" / "fixture.csv"))
        again = ingest(path)
        assert again.studies == dataset.studies
        assert again.labels == dataset.labels
        assert list(study_frame(again).columns) == ["study", "TP", "FN", "FP", "TN"]


class TestDataset:

    def test_needs_studies(self):
        with pytest.raises(ValidationError):
            Dataset(name="empty", studies=[])

    def test_label_count(self, studies):
        with pytest.raises(ValidationError):
            Dataset(name="x", studies=studies, labels=("only-one",))

    def test_study_record_counts(self):
        with pytest.raises(ValidationError):
            StudyRecord(y1=5, n1=4, y2=1, n2=2)
        with pytest.raises(ValidationError):
            StudyRecord(y1=1.0, n1=4, y2=1, n2=2)


class TestIngestionAndValidationComponents:

    def test_ingestion_component(self, tmp_path, study_table_path):
        config = DataIngestionConfig(MetaPipelineConfig(out_dir=str(tmp_path / "run")), study_table_path)
        artifact = DataIngestion(config).initiate_data_ingestion()
        assert artifact.n_studies == 10
        assert artifact.input_file_path == study_table_path
        assert os.path.exists(artifact.dataset_file_path)
        assert ingest(artifact.dataset_file_path).studies == ingest(study_table_path).studies

    def test_validation_passes(self, tmp_path, study_table_path):
        pipeline_config = MetaPipelineConfig(out_dir=str(tmp_path / "run"))
        validation_config = DataValidationConfig(pipeline_config)
        artifact = DataValidation(DataIngestionArtifact(study_table_path, 10, study_table_path), validation_config) \
            .initiate_data_validation()
        assert artifact.validation_status
        report = read_yaml_file(validation_config.report_file_path)
        assert report["validation_status"] is True and report["n_studies"] == 10
        assert report["input_file_path"] == study_table_path

    def test_validation_needs_two_studies(self, tmp_path):
        path = write_table(tmp_path, HEADER + "s1,25,5,10,60\n")
        validation_config = DataValidationConfig(MetaPipelineConfig(out_dir=str(tmp_path / "run")))
        with pytest.raises(ValidationError, match="at least 2"):
            DataValidation(DataIngestionArtifact(path, 1, path), validation_config).initiate_data_validation()
        assert read_yaml_file(validation_config.report_file_path)["validation_status"] is False

    def test_validation_flags_bad_counts(self, tmp_path):
        path = write_table(tmp_path, HEADER + "s1,25,5,10,60\ns2,1,-2,3,4\n")
        validation_config = DataValidationConfig(MetaPipelineConfig(out_dir=str(tmp_path / "run")))
        validation = DataValidation(DataIngestionArtifact(path, 2, path), validation_config)
        assert validation.validate_count_columns(pd.read_csv(path, dtype=str)) == ["FN"]
        with pytest.raises(ValidationError):
            validation.initiate_data_validation()

    def test_validation_reads_the_supplied_table(self, tmp_path):
        normalised = write_table(tmp_path, HEADER + "s1,25,5,10,60\ns2,1,2,3,4\n", "normalised.csv")
        supplied = write_table(tmp_path, HEADER + "s1, 25, 5, 10, 60\ns2, 1, 2.5, 3, 4\n", "supplied.csv")
        validation_config = DataValidationConfig(MetaPipelineConfig(out_dir=str(tmp_path / "run")))
        with pytest.raises(ValidationError, match="supplied.csv: count columns \\['FN'\\]"):
            DataValidation(DataIngestionArtifact(normalised, 2, supplied), validation_config) \
                .initiate_data_validation()
        report = read_yaml_file(validation_config.report_file_path)
        assert report["input_file_path"] == supplied and report["dataset_file_path"] == normalised

    def test_validation_strips_padded_header(self, tmp_path):
        path = write_table(tmp_path, "study, TP, FN, FP, TN\ns1, 25, 5, 10, 60\ns2, 1, 2, 3, 4\n")
        validation_config = DataValidationConfig(MetaPipelineConfig(out_dir=str(tmp_path / "run")))
        assert DataValidation(DataIngestionArtifact(path, 2, path), validation_config) \
            .initiate_data_validation().validation_status


class TestExceptions:

    def test_exit_codes(self):
        assert ValidationError("bad").exit_code == 1
        assert DomainError("bad").exit_code == 1
        assert ConvergenceError("bad").exit_code == 2
        assert NumericError("bad").exit_code == 3

    def test_wrapping_keeps_the_exit_code(self):
        wrapped = DTAMetaException(ConvergenceError("no model converged"))
        assert wrapped.exit_code == 2
        assert "no model converged" in wrapped.args[0]

    def test_domain_error_is_a_value_error(self):
        assert isinstance(DomainError("x"), ValueError)


class TestMainUtils:

    def test_csv_precision_and_no_leftovers(self, tmp_path):
        path = write_csv_atomic(str(tmp_path / "out" / "report.csv"),
                                pd.DataFrame({"value": [0.123456789, 12345678.9], "name": ["a", "b"]}))
        assert open(path).read().splitlines() == ["value,name", "0.123457,a", "1.23457e+07,b"]
        assert os.listdir(tmp_path / "out") == ["report.csv"]

    def test_round_significant(self):
        rounded = round_significant({"a": 3.14159265, "b": [np.float64(2.718281828), float("nan")],
                                     "c": np.array([1.0000001]), "d": np.int64(4), "e": np.bool_(True), "f": "x"})
        assert rounded == {"a": 3.14159, "b": [2.71828, None], "c": [1.0], "d": 4, "e": True, "f": "x"}

    def test_json(self, tmp_path):
        path = write_json_atomic(str(tmp_path / "report.json"), {"loglik": -123.4567891, "inf": float("inf")})
        assert json.load(open(path)) == {"loglik": -123.457, "inf": None}

    def test_yaml_roundtrip(self, tmp_path):
        path = str(tmp_path / "nested" / "report.yaml")
        write_yaml_file(path, {"status": True, "n": 3})
        assert read_yaml_file(path) == {"status": True, "n": 3}

    def test_object_roundtrip(self, tmp_path, beta_clayton270):
        path = str(tmp_path / "models" / "model.pkl")
        save_object(path, beta_clayton270)
        assert load_object(path) == beta_clayton270

    def test_missing_object(self, tmp_path):
        with pytest.raises(DTAMetaException):
            load_object(str(tmp_path / "absent.pkl"))
