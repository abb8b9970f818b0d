import json
import os
import sys
import tempfile

import dill
import numpy as np
import pandas as pd
import yaml

from dtameta.constant.meta_pipeline import FLOAT_FORMAT, REPORT_SIGNIFICANT_DIGITS
from dtameta.exception import DTAMetaException
from dtameta.logger import logging


def read_yaml_file(file_path: str) -> dict:
    try:
        with open(file_path, "rb") as yaml_file:
            return yaml.safe_load(yaml_file)
    except Exception as e:
        raise DTAMetaException(e, sys) from e


def write_yaml_file(file_path: str, data: dict) -> None:
    try:
        os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
        with open(file_path, "w") as file:
            yaml.safe_dump(data, file, sort_keys=False)
    except Exception as e:
        raise DTAMetaException(e, sys) from e


def _replace_atomically(file_path: str, write) -> None:
    """Write into a sibling temp file, then rename it over the target."""
    dir_path = os.path.dirname(file_path) or "."
    os.makedirs(dir_path, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=dir_path, prefix=".tmp_", suffix=os.path.basename(file_path))
    try:
        with os.fdopen(fd, "w", newline="") as file_obj:
            write(file_obj)
        os.replace(tmp_path, file_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_csv_atomic(file_path: str, dataframe: pd.DataFrame) -> str:
    """CSV with floats at the report precision."""
    try:
        _replace_atomically(
            file_path, lambda f: dataframe.to_csv(f, index=False, header=True, float_format=FLOAT_FORMAT))
        logging.debug(f"wrote {len(dataframe)} rows to {file_path}")
        return file_path
    except Exception as e:
        raise DTAMetaException(e, sys) from e


def round_significant(value):
    """Floats (nested in dicts and lists) rounded to the report precision; NaN and inf become None."""
    if isinstance(value, dict):
        return {str(k): round_significant(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_significant(v) for v in value]
    if isinstance(value, np.ndarray):
        return round_significant(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            return None
        return float(f"{float(value):.{REPORT_SIGNIFICANT_DIGITS}g}")
    return value


def write_json_atomic(file_path: str, data) -> str:
    try:
        payload = round_significant(data)
        _replace_atomically(file_path, lambda f: json.dump(payload, f, indent=2))
        return file_path
    except Exception as e:
        raise DTAMetaException(e, sys) from e


def write_text_atomic(file_path: str, text: str) -> str:
    try:
        _replace_atomically(file_path, lambda f: f.write(text))
        return file_path
    except Exception as e:
        raise DTAMetaException(e, sys) from e


def save_object(file_path: str, obj: object) -> None:
    try:
        logging.info(f"Saving object to {file_path}")
        os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
        with open(file_path, "wb") as file_obj:
            dill.dump(obj, file_obj)
    except Exception as e:
        raise DTAMetaException(e, sys) from e


def load_object(file_path: str) -> object:
    try:
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"The file: {file_path} does not exist")
        with open(file_path, "rb") as file_obj:
            return dill.load(file_obj)
    except Exception as e:
        raise DTAMetaException(e, sys) from e
