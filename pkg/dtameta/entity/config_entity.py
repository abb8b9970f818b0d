import os
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

from from_root import from_root

from dtameta.constant import meta_pipeline
from dtameta.constant.application import ARTIFACT_DIR_ENV_KEY
from dtameta.entity.model_entity import ModelSpec, model_template
from dtameta.exception import DomainError


class MetaPipelineConfig:

    def __init__(self, timestamp: datetime = None, out_dir: Optional[str] = None):
        timestamp = (timestamp or datetime.now()).strftime("%m_%d_%Y_%H_%M_%S")

        self.pipeline_name: str = meta_pipeline.PIPELINE_NAME
        # an explicit output directory is used as-is, otherwise one folder per run
        if out_dir:
            self.artifact_dir: str = out_dir
        else:
            base_dir = os.getenv(ARTIFACT_DIR_ENV_KEY) or meta_pipeline.ARTIFACT_DIR
            self.artifact_dir: str = os.path.join(base_dir, timestamp)
        self.timestamp: str = timestamp


@dataclass
class FitOptions:
    nq: int = meta_pipeline.QUADRATURE_DEFAULT_NQ
    # BFGS on unconstrained parameters; False runs L-BFGS-B on the clamped original scale
    transformed: bool = True
    gradient_tolerance: float = meta_pipeline.ESTIMATION_GRADIENT_TOLERANCE
    accept_gradient: float = meta_pipeline.ESTIMATION_ACCEPT_GRADIENT
    step_tolerance: float = meta_pipeline.ESTIMATION_STEP_TOLERANCE
    max_iterations: int = meta_pipeline.ESTIMATION_MAX_ITERATIONS
    boundary_tau: float = meta_pipeline.ESTIMATION_BOUNDARY_TAU
    # refit also when the observed information fails twice with |tau| above this
    hessian_boundary_tau: float = meta_pipeline.ESTIMATION_HESSIAN_BOUNDARY_TAU
    boundary_refit: bool = True
    compute_se: bool = True


class DataIngestionConfig:

    def __init__(self, meta_pipeline_config: MetaPipelineConfig, input_file_path: str):
        self.input_file_path: str = input_file_path
        self.data_ingestion_dir: str = os.path.join(
            meta_pipeline_config.artifact_dir, meta_pipeline.DATA_INGESTION_DIR_NAME
        )
        self.dataset_file_path: str = os.path.join(
            self.data_ingestion_dir, meta_pipeline.DATA_INGESTION_DATASET_FILE_NAME
        )


class DataValidationConfig:

    def __init__(self, meta_pipeline_config: MetaPipelineConfig):
        self.schema_file_path: str = os.path.join(from_root(), meta_pipeline.SCHEMA_FILE_PATH)
        self.data_validation_dir: str = os.path.join(
            meta_pipeline_config.artifact_dir, meta_pipeline.DATA_VALIDATION_DIR_NAME
        )
        self.report_file_path: str = os.path.join(
            self.data_validation_dir, meta_pipeline.DATA_VALIDATION_REPORT_FILE_NAME
        )
        self.min_studies: int = meta_pipeline.ESTIMATION_MIN_STUDIES
        self.recommended_studies: int = meta_pipeline.ESTIMATION_RECOMMENDED_STUDIES


class ModelFittingConfig:

    def __init__(self, meta_pipeline_config: MetaPipelineConfig, models: tuple = None,
                 fit_options: FitOptions = None, jobs: int = 1):
        self.model_fitting_dir: str = os.path.join(
            meta_pipeline_config.artifact_dir, meta_pipeline.MODEL_FIT_DIR_NAME
        )
        self.report_file_path: str = os.path.join(self.model_fitting_dir, meta_pipeline.MODEL_FIT_REPORT_FILE_NAME)
        self.report_json_path: str = os.path.join(self.model_fitting_dir, meta_pipeline.MODEL_FIT_REPORT_JSON_NAME)
        self.saved_model_dir: str = os.path.join(self.model_fitting_dir, meta_pipeline.MODEL_FIT_SAVED_MODEL_DIR)
        self.models: tuple = tuple(models) if models else default_model_grid()
        for label in self.models:
            model_template(label)
        self.baseline: str = meta_pipeline.MODEL_FIT_BASELINE
        self.fit_options: FitOptions = fit_options or FitOptions()
        self.jobs: int = max(1, int(jobs))


def default_model_grid() -> tuple:
    """Every margin x copula combination of a model comparison."""
    return tuple(f"{margin}-{copula}"
                 for margin in meta_pipeline.MODEL_FIT_MARGINS
                 for copula in meta_pipeline.MODEL_FIT_COPULAS)


class SrocConfig:

    def __init__(self, meta_pipeline_config: MetaPipelineConfig, model_label: str,
                 quantiles: tuple = meta_pipeline.SROC_QUANTILES,
                 levels: tuple = meta_pipeline.SROC_LEVELS,
                 fit_file_path: Optional[str] = None,
                 fit_options: FitOptions = None):
        self.sroc_dir: str = os.path.join(meta_pipeline_config.artifact_dir, meta_pipeline.SROC_DIR_NAME)
        self.model_label: str = model_label
        self.quantiles: tuple = tuple(quantiles)
        self.levels: tuple = tuple(levels)
        self.fit_file_path: Optional[str] = fit_file_path
        self.fit_options: FitOptions = fit_options or FitOptions()
        self.grid_size: int = meta_pipeline.SROC_GRID_SIZE
        self.grid_low: float = meta_pipeline.SROC_GRID_LOW
        self.grid_high: float = meta_pipeline.SROC_GRID_HIGH
        self.resolution: int = meta_pipeline.SROC_CONTOUR_RESOLUTION
        self.coverage: float = meta_pipeline.SROC_CONFIDENCE_COVERAGE


@dataclass(frozen=True)
class SizeDistribution:
    """Shifted gamma for the total study size: lag + Gamma(shape, rate)."""
    shape: float = meta_pipeline.SIMULATION_SIZE_SHAPE
    rate: float = meta_pipeline.SIMULATION_SIZE_RATE
    lag: float = meta_pipeline.SIMULATION_SIZE_LAG

    def __post_init__(self):
        if self.shape <= 0.0 or self.rate <= 0.0 or self.lag < 0.0:
            raise DomainError(f"invalid study-size distribution {self}")

    @property
    def mean(self) -> float:
        return self.lag + self.shape / self.rate


@dataclass
class SimConfig:
    n_studies: int
    true_model: ModelSpec
    replications: int = meta_pipeline.SIMULATION_REPLICATIONS
    size_dist: SizeDistribution = field(default_factory=SizeDistribution)
    prevalence: float = meta_pipeline.SIMULATION_PREVALENCE
    seed: int = 0
    fitted_models: tuple = meta_pipeline.SIMULATION_FITTED_MODELS
    fit_options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        if self.n_studies < meta_pipeline.ESTIMATION_MIN_STUDIES:
            raise DomainError(f"simulation needs at least {meta_pipeline.ESTIMATION_MIN_STUDIES} studies")
        if self.replications < 1:
            raise DomainError("simulation needs at least one replication")
        if not 0.0 < self.prevalence < 1.0:
            raise DomainError(f"prevalence must lie in (0, 1), got {self.prevalence}")


class SimulationStudyConfig:

    def __init__(self, meta_pipeline_config: MetaPipelineConfig, sim_config: SimConfig, jobs: int = 1):
        self.simulation_dir: str = os.path.join(meta_pipeline_config.artifact_dir, meta_pipeline.SIMULATION_DIR_NAME)
        self.report_file_path: str = os.path.join(self.simulation_dir, meta_pipeline.SIMULATION_REPORT_FILE_NAME)
        self.report_json_path: str = os.path.join(self.simulation_dir, meta_pipeline.SIMULATION_REPORT_JSON_NAME)
        self.sim_config: SimConfig = sim_config
        self.jobs: int = max(1, int(jobs))
        self.nonconvergence_flag: float = meta_pipeline.SIMULATION_NONCONVERGENCE_FLAG


@dataclass(frozen=True)
class AsymptoticsCase:
    """One row of the limiting-estimator table: common-parameter BVN/beta truth at group size n."""
    rho: float
    pi: float
    gamma: float
    n: int


class AsymptoticsConfig:

    def __init__(self, meta_pipeline_config: MetaPipelineConfig, cases: list,
                 nq: int = meta_pipeline.ASYMPTOTICS_NQ, allow_large: bool = False):
        self.asymptotics_dir: str = os.path.join(meta_pipeline_config.artifact_dir, meta_pipeline.ASYMPTOTICS_DIR_NAME)
        self.report_file_path: str = os.path.join(self.asymptotics_dir, meta_pipeline.ASYMPTOTICS_REPORT_FILE_NAME)
        self.cases: list = list(cases)
        self.nq: int = nq
        self.allow_large: bool = allow_large
