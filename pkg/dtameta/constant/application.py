APP_NAME = "dtameta"

# process exit codes of the command line, a stable contract
EXIT_SUCCESS = 0
EXIT_VALIDATION_ERROR = 1
EXIT_CONVERGENCE_FAILURE = 2
EXIT_NUMERIC_ERROR = 3

ARTIFACT_DIR_ENV_KEY = "DTAMETA_ARTIFACT_DIR"
LOG_DIR_ENV_KEY = "DTAMETA_LOG_DIR"
LOG_LEVEL_ENV_KEY = "DTAMETA_LOG_LEVEL"
