import logging.config
import time
from functools import wraps

from src.configs.log_config import LOGGING
from src.utils.exceptions import InvalidTemperatureError

logging.config.dictConfig(LOGGING)
logger = logging.getLogger(__name__)


def log_duration(func):
    """Decorator to log how long a call took.
    Args:
        func: The function to be decorated
    Returns:
        The decorated function
    """
    @wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            elapsed = time.perf_counter() - start_time
            logger.info(f"{func.__qualname__} finished in {elapsed:.3f}s")

    return wrapper


def positive_temperature(func):
    """Decorator rejecting a non-positive ``tau`` keyword or second positional argument."""
    @wraps(func)
    def wrapper(*args, **kwargs):
        tau = kwargs.get('tau', args[1] if len(args) > 1 else None)
        if tau is not None and not tau > 0:
            logger.warning(f"{func.__qualname__} called with invalid temperature {tau}")
            raise InvalidTemperatureError(f"temperature must be > 0, got {tau}")
        return func(*args, **kwargs)

    return wrapper
