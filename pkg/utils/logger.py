import logging
import os
import sys


def setup_logger(name: str) -> logging.Logger:
    """
    Configure and return a logger with console output

    The level is read from EGGBEATER_LOG_LEVEL (default INFO). Output goes to
    stderr so CLI tables written to stdout or files stay clean.

    Args:
        name: Logger name (typically __name__ of calling module)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    level = os.getenv("EGGBEATER_LOG_LEVEL", "INFO").upper()
    logger.setLevel(getattr(logging, level, logging.INFO))

    # Avoid duplicate handlers if logger already configured
    if logger.handlers:
        return logger

    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(logging.DEBUG)

    # Format: timestamp - logger name - level - message
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    handler.setFormatter(formatter)

    logger.addHandler(handler)
    logger.propagate = False
    return logger
