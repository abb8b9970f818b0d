import os


# defining common constant variables for the meta-analysis pipeline

PIPELINE_NAME: str = "dtameta"
ARTIFACT_DIR: str = "artifact"
SCHEMA_FILE_PATH = os.path.join("config", "schema.yaml")
SCHEMA_COLUMNS = "columns"
SCHEMA_COUNT_COLUMNS = "count_columns"

STUDY_COLUMN: str = "study"
TRUE_POSITIVE_COLUMN: str = "TP"
FALSE_NEGATIVE_COLUMN: str = "FN"
FALSE_POSITIVE_COLUMN: str = "FP"
TRUE_NEGATIVE_COLUMN: str = "TN"

# sensitivity is component 1, specificity component 2 throughout
SENSITIVITY: int = 1
SPECIFICITY: int = 2

REPORT_SIGNIFICANT_DIGITS: int = 6
FLOAT_FORMAT: str = f"%.{REPORT_SIGNIFICANT_DIGITS}g"


"""
Data Ingestion related constant start with DATA_INGESTION VAR NAME
"""
DATA_INGESTION_DIR_NAME: str = "data_ingestion"
DATA_INGESTION_DATASET_FILE_NAME: str = "studies.csv"
# header line of the study table is line 1
DATA_INGESTION_FIRST_DATA_LINE: int = 2


"""
Data Validation related constant start with DATA_VALIDATION VAR NAME
"""
DATA_VALIDATION_DIR_NAME: str = "data_validation"
DATA_VALIDATION_REPORT_FILE_NAME: str = "report.yaml"


"""
Copula related constant start with COPULA VAR NAME
"""
COPULA_FRANK_INDEPENDENCE_THRESHOLD: float = 1e-5
COPULA_FRANK_TAU_SERIES_THRESHOLD: float = 1e-3
COPULA_FRANK_THETA_BRACKET: float = 35.0
COPULA_CLAYTON_INDEPENDENCE_THRESHOLD: float = 1e-5
COPULA_CLAYTON_THETA_MAX: float = 1e4
COPULA_TAU_ROOT_TOLERANCE: float = 1e-12


"""
Margin related constant start with MARGIN VAR NAME
"""
MARGIN_DEGENERATE_GAMMA: float = 1e-8


"""
Quadrature related constant start with QUADRATURE VAR NAME
"""
QUADRATURE_DEFAULT_NQ: int = 15
QUADRATURE_MIN_NQ: int = 1
QUADRATURE_MAX_NQ: int = 200


"""
Likelihood related constant start with LIKELIHOOD VAR NAME
"""
LIKELIHOOD_KHS_CLAMP: float = 1e-12


"""
Estimation related constant start with ESTIMATION VAR NAME
"""
ESTIMATION_GRADIENT_TOLERANCE: float = 1e-5
ESTIMATION_ACCEPT_GRADIENT: float = 1e-5
ESTIMATION_STEP_TOLERANCE: float = 1e-9
ESTIMATION_MAX_ITERATIONS: int = 500
ESTIMATION_BOUNDARY_TAU: float = 0.97
ESTIMATION_HESSIAN_BOUNDARY_TAU: float = 0.9
ESTIMATION_HESSIAN_FAILURES: int = 2
ESTIMATION_MIN_STUDIES: int = 2
ESTIMATION_RECOMMENDED_STUDIES: int = 5
ESTIMATION_START_SIGMA: float = 1.0
ESTIMATION_START_GAMMA: float = 0.1
ESTIMATION_START_TAU_LIMIT: float = 0.9
ESTIMATION_START_TAU_FALLBACK: float = 0.05
ESTIMATION_SARMANOV_SHRINK: float = 0.999
ESTIMATION_SARMANOV_THETA_CAP: float = 1e4


"""
SROC related constant start with SROC VAR NAME
"""
SROC_DIR_NAME: str = "sroc"
SROC_QUANTILES: tuple = (0.01, 0.5, 0.99)
SROC_LEVELS: tuple = (0.5, 0.95)
SROC_GRID_SIZE: int = 200
SROC_GRID_LOW: float = 0.005
SROC_GRID_HIGH: float = 0.995
SROC_CONTOUR_RESOLUTION: int = 400
SROC_CONFIDENCE_COVERAGE: float = 0.95
SROC_ELLIPSE_POINTS: int = 100
SROC_SUMMARY_POINT_FILE_NAME: str = "summary_point.csv"
SROC_CONFIDENCE_REGION_FILE_NAME: str = "confidence_region.csv"
SROC_STUDIES_FILE_NAME: str = "studies.csv"
SROC_NOTICE_FILE_NAME: str = "notice.txt"
SROC_GLMM_FILE_NAME: str = "glmm_sroc.csv"


"""
Model fitting related constant start with MODEL_FIT VAR NAME
"""
MODEL_FIT_DIR_NAME: str = "model_fitting"
MODEL_FIT_REPORT_FILE_NAME: str = "fit_report.csv"
MODEL_FIT_REPORT_JSON_NAME: str = "fit_report.json"
MODEL_FIT_SAVED_MODEL_DIR: str = "fitted_models"
MODEL_FIT_MARGINS: tuple = ("normal", "beta")
MODEL_FIT_COPULAS: tuple = ("bvn", "frank", "clayton0", "clayton90", "clayton180", "clayton270")
MODEL_FIT_BASELINE: str = "normal-bvn"


"""
Simulation related constant start with SIMULATION VAR NAME
"""
SIMULATION_DIR_NAME: str = "simulation"
SIMULATION_REPORT_FILE_NAME: str = "sim_report.csv"
SIMULATION_REPORT_JSON_NAME: str = "sim_report.json"
SIMULATION_SIZE_SHAPE: float = 1.2
SIMULATION_SIZE_RATE: float = 0.01
SIMULATION_SIZE_LAG: float = 30.0
SIMULATION_PREVALENCE: float = 0.43
SIMULATION_REPLICATIONS: int = 500
SIMULATION_NONCONVERGENCE_FLAG: float = 0.2
SIMULATION_TRUE_MODEL: str = "beta-clayton270"
SIMULATION_TRUE_PARAMETERS: dict = {"pi1": 0.7, "pi2": 0.9, "scale1": 0.2, "scale2": 0.1, "tau": -0.5}
SIMULATION_FITTED_MODELS: tuple = (
    "beta-bvn", "beta-frank", "beta-clayton90", "beta-clayton270",
    "normal-bvn", "normal-frank", "normal-clayton90", "normal-clayton270",
    "khs-clayton270",
)


"""
Asymptotics related constant start with ASYMPTOTICS VAR NAME
"""
ASYMPTOTICS_DIR_NAME: str = "asymptotics"
ASYMPTOTICS_REPORT_FILE_NAME: str = "limiting_estimates.csv"
ASYMPTOTICS_NQ: int = 30
ASYMPTOTICS_MAX_N: int = 200
# larger group sizes must be requested explicitly
ASYMPTOTICS_UNGATED_MAX_N: int = 20
# H(n) = 1 lands on this distance from the unit bound in the limiting KHS objective
ASYMPTOTICS_KHS_CLAMP: float = 1e-10
