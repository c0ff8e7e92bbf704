import logging.config
import sys
from typing import Optional

from src.configs.settings import EnvSettings

RUN_LOG_BYTES = 5 * 2 ** 20
RUN_LOG_BACKUPS = 3


class _BelowWarningFilter(logging.Filter):
    def filter(self, record):
        return record.levelno < logging.WARNING


def build_logging_config(level: str = EnvSettings.LOG_LEVEL, log_file: Optional[str] = EnvSettings.LOG_FILE) -> dict:
    """
    Console logging split by severity, plus a rotating run log when a file is configured.

    Args:
        level (str): Root log level.
        log_file (str): Path of the run log, or None for console only.

    Returns:
        dict: A dictConfig schema.
    """
    handlers = {
        'console_stderr': {
            'class': 'logging.StreamHandler',
            'level': 'WARNING',
            'formatter': 'simple',
            'stream': sys.stderr
        },
        'console_stdout': {
            'class': 'logging.StreamHandler',
            'level': 'DEBUG',
            'formatter': 'simple',
            'filters': ['below_warning'],
            'stream': sys.stdout
        },
    }
    if log_file:
        handlers['run_file'] = {
            'class': 'logging.handlers.RotatingFileHandler',
            'level': 'DEBUG',
            'formatter': 'detailed',
            'filename': log_file,
            'maxBytes': RUN_LOG_BYTES,
            'backupCount': RUN_LOG_BACKUPS,
            'encoding': 'utf-8',
        }
    return {
        'version': 1,
        'disable_existing_loggers': False,
        'filters': {
            'below_warning': {
                '()': _BelowWarningFilter
            }
        },
        'formatters': {
            'simple': {
                'format': '%(levelname)s: %(asctime)s: %(filename)s: %(lineno)d:\t %(funcName)s(): %(message)s'
            },
            'detailed': {
                'format': '%(asctime)s %(process)d %(threadName)s %(name)s %(levelname)s: %(message)s'
            },
        },
        'handlers': handlers,
        'loggers': {
            # worker pools of the Monte-Carlo oracles and the calibration grid
            'concurrent': {
                'level': 'ERROR'
            }
        },
        'root': {
            'level': level,
            'handlers': list(handlers),
        },
    }


LOGGING = build_logging_config()


def setup_logging(level: Optional[str] = None) -> None:
    """Apply the logging config; an explicit level overrides ATTN_ALIGN_LOG_LEVEL."""
    logging.config.dictConfig(build_logging_config(level or EnvSettings.LOG_LEVEL))
