import logging
import signal
import sys
from typing import NoReturn

from src.cli.app import AttentionAlignApp
from src.configs.log_config import setup_logging

setup_logging()
logger = logging.getLogger(__name__)


def signal_handler(signum, frame):
    """Handle SIGINT and SIGTERM signals for graceful shutdown."""
    logger.info(f"Received signal {signum}. Shutting down...")
    sys.exit(130)


def main() -> NoReturn:
    try:
        signal.signal(signal.SIGINT, signal_handler)
        signal.signal(signal.SIGTERM, signal_handler)

        app = AttentionAlignApp()
        exit_code = app.run(sys.argv[1:])

    except Exception as e:
        logger.exception(f"An error occurred in the main function: {e}")
        sys.exit(1)

    sys.exit(exit_code)


if __name__ == "__main__":
    main()
