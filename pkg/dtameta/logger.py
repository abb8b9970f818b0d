import logging
import os
from datetime import datetime
from logging.handlers import RotatingFileHandler
from typing import Optional

from dotenv import load_dotenv
from from_root import from_root

from dtameta.constant.application import APP_NAME, LOG_DIR_ENV_KEY, LOG_LEVEL_ENV_KEY

load_dotenv()

LOG_DIR = "logs"
LOG_FORMAT = "[%(asctime)s]%(name)s - %(levelname)s - %(message)s"
MAX_LOG_SIZE = 5 * 1024 * 1024
BACKUP_COUNT = 3

# one log file per process start
LOG_FILE = f"{APP_NAME}_{datetime.now().strftime('%m_%d_%Y_%H_%M_%S')}.log"


def configure_logger(log_dir: Optional[str] = None, console_level: Optional[str] = None) -> str:
    """
    Attach a rotating file handler (DEBUG) and a console handler to the root logger.

    ``log_dir`` defaults to $DTAMETA_LOG_DIR, then ``logs/`` under the project root;
    ``console_level`` defaults to $DTAMETA_LOG_LEVEL, then INFO. Repeated calls leave the
    handlers already attached in place. Returns the log file path.
    """
    root = logging.getLogger()
    configured = getattr(root, "_dtameta_log_file", None)
    if configured:
        return configured

    log_dir = log_dir or os.getenv(LOG_DIR_ENV_KEY) or os.path.join(from_root(), LOG_DIR)
    os.makedirs(log_dir, exist_ok=True)
    log_file = os.path.join(log_dir, LOG_FILE)
    formatter = logging.Formatter(LOG_FORMAT)

    file_handler = RotatingFileHandler(log_file, maxBytes=MAX_LOG_SIZE, backupCount=BACKUP_COUNT)
    file_handler.setFormatter(formatter)
    file_handler.setLevel(logging.DEBUG)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    console_handler.setLevel((console_level or os.getenv(LOG_LEVEL_ENV_KEY) or "INFO").upper())

    root.setLevel(logging.DEBUG)
    root.addHandler(file_handler)
    root.addHandler(console_handler)
    root._dtameta_log_file = log_file
    return log_file


log_file_path = configure_logger()
