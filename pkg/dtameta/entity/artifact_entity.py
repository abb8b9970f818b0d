from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from dtameta.entity.model_entity import ModelSpec


@dataclass
class LogLikResult:
    total: float
    per_study: np.ndarray
    # KHS only: how many beta-binomial CDF values were pulled inside (0, 1)
    clamped: int = 0


@dataclass
class FitResult:
    model: ModelSpec
    estimates: dict
    tau_hat: Optional[float]
    se: Optional[dict]
    covariance: Optional[np.ndarray]
    loglik: LogLikResult
    converged: bool
    boundary: bool
    iterations: int
    start: dict = field(default_factory=dict)
    gradient_norm: float = float("nan")
    message: str = ""
    hessian_ok: bool = False
    boundary_fit: Optional["FitResult"] = None
    n_studies: int = 0
    nq: int = 0
    # +1 comonotonic, -1 countermonotonic; only set on boundary fits
    boundary_direction: int = 0

    @property
    def label(self) -> str:
        return self.model.label


@dataclass
class QuantileCurve:
    q: float
    direction: str
    points: np.ndarray
    deterministic: bool = False


@dataclass
class PredictiveRegion:
    levels: tuple
    loops: dict
    thresholds: dict
    enclosed_mass: dict
    x1_grid: np.ndarray
    x2_grid: np.ndarray
    density: np.ndarray


@dataclass
class SummaryRegion:
    point: tuple
    loop: Optional[np.ndarray]
    coverage: float
    region_available: bool


@dataclass
class CurveSet:
    model_label: str
    quantile_curves: list
    summary: SummaryRegion
    predictive: Optional[PredictiveRegion]
    deterministic: bool = False
    notice: str = ""


@dataclass
class VuongResult:
    statistic: float
    p_value: float
    dbar: float
    s: float
    n: int
    differences: np.ndarray

    @property
    def preferred(self) -> int:
        """1 or 2, the model the statistic leans towards."""
        return 2 if self.statistic > 0 else 1


@dataclass
class SimReport:
    table: pd.DataFrame
    replications: int
    n_studies: int
    converged: dict
    excluded: dict
    flagged: list
    redraws: int


@dataclass
class OutcomeTable:
    n: int
    y1: np.ndarray
    y2: np.ndarray
    probs: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.probs))


@dataclass
class LimitingEstimate:
    pi: float
    gamma: float
    theta: float
    tau: float
    objective: float
    converged: bool
    boundary: bool = False


@dataclass
class DataIngestionArtifact:
    dataset_file_path: str
    n_studies: int
    # the table as supplied, before normalisation
    input_file_path: str


@dataclass
class DataValidationArtifact:
    validation_status: bool
    valid_file_path: str
    message: str = ""


@dataclass
class ModelFittingArtifact:
    report_file_path: str
    report_json_path: str
    saved_model_dir: str
    fits: dict
    vuong: dict
    failed: dict


@dataclass
class SrocExportArtifact:
    sroc_dir: str
    written_files: list
    deterministic: bool
    curves: Optional[CurveSet] = None


@dataclass
class SimulationStudyArtifact:
    report_file_path: str
    report_json_path: str
    report: SimReport


@dataclass
class AsymptoticStudyArtifact:
    report_file_path: str
    rows: list
