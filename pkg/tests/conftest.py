import numpy as np
import pytest

from dtameta.entity.model_entity import (
    CopulaFamily,
    CopulaSpec,
    Dataset,
    MarginKind,
    MarginSpec,
    ModelSpec,
    StudyRecord,
)
from dtameta.ml.quadrature import gauss_legendre

STUDY_TABLE = """study,TP,FN,FP,TN
s1,25,5,10,60
s2,18,7,4,51
s3,40,12,9,88
s4,9,3,2,30
s5,33,2,14,70
s6,12,8,6,45
s7,21,4,3,39
s8,50,10,20,130
s9,7,1,5,22
s10,28,9,8,64
"""

# heterogeneous in both arms with a partial negative association; fits stay off the bound
INTERIOR_TABLE = """study,TP,FN,FP,TN
t1,72,8,36,84
t2,80,20,22,128
t3,42,18,9,101
t4,77,13,16,144
t5,42,28,16,114
t6,104,6,35,105
t7,56,19,30,70
t8,84,11,9,171
t9,42,23,24,96
t10,110,10,22,128
t11,66,19,8,192
t12,33,27,10,130
"""


def parse_table(table: str) -> list:
    rows = [line.split(",") for line in table.strip().splitlines()[1:]]
    return [StudyRecord(y1=int(tp), n1=int(tp) + int(fn), y2=int(tn), n2=int(tn) + int(fp))
            for _, tp, fn, fp, tn in rows]


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def rule():
    return gauss_legendre(15)


@pytest.fixture
def study_table_path(tmp_path):
    path = tmp_path / "studies.csv"
    path.write_text(STUDY_TABLE)
    return str(path)


@pytest.fixture
def studies():
    """Ten studies parsed from the fixture table above; every model fit runs to the countermonotonic bound."""
    return parse_table(STUDY_TABLE)


@pytest.fixture
def dataset(studies):
    return Dataset(name="fixture", studies=studies, labels=tuple(f"s{i + 1}" for i in range(len(studies))))


@pytest.fixture
def interior_table_path(tmp_path):
    path = tmp_path / "interior.csv"
    path.write_text(INTERIOR_TABLE)
    return str(path)


@pytest.fixture
def interior_dataset():
    studies = parse_table(INTERIOR_TABLE)
    return Dataset(name="interior", studies=studies, labels=tuple(f"t{i + 1}" for i in range(len(studies))))


@pytest.fixture
def beta_clayton270():
    """Beta margins with Clayton-270 at tau = -0.5."""
    return ModelSpec(MarginSpec(MarginKind.BETA, 0.7, 0.2), MarginSpec(MarginKind.BETA, 0.9, 0.1),
                     CopulaSpec(CopulaFamily.CLAYTON, 270, 2.0))


@pytest.fixture
def normal_bvn():
    return ModelSpec(MarginSpec(MarginKind.NORMAL_LOGIT, 0.7, 2.0), MarginSpec(MarginKind.NORMAL_LOGIT, 0.9, 1.0),
                     CopulaSpec(CopulaFamily.BVN, 0, -0.5))
