import logging
from pathlib import Path

__all__ = ["LOG_LEVELS", "setup_logger"]

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def setup_logger(
    level: str = "INFO", log_file: str | Path | None = None
) -> logging.Logger:
    """Attach console (and optional file) handlers to the ``hafpn`` logger.

    Called once by the command line; library modules only emit records.
    Repeated calls replace the handlers instead of stacking them.

    :param str level: console level name
    :param str | Path | None log_file: also write DEBUG records here
    :return logging.Logger: the package logger
    """
    if level.upper() not in LOG_LEVELS:
        raise ValueError(f"Log level must be one of {LOG_LEVELS}, got '{level}'.")
    logger = logging.getLogger("hafpn")
    logger.propagate = False
    logger.setLevel(logging.DEBUG)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level.upper())
    console_handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    logger.addHandler(console_handler)
    if log_file is not None:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(
            logging.Formatter("%(asctime)s %(levelname)s %(module)s: %(message)s")
        )
        logger.addHandler(file_handler)
    return logger
