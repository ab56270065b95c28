import logging
import os
import json
from typing import Optional

# Defaults come from config.json next to the repository root
config_path = os.path.join(os.path.dirname(__file__), '../config.json')

LOGGER_NAME = "hho_ch"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def load_logging_defaults() -> dict:
    """Read log and output settings from config.json, falling back to console-only INFO."""
    if os.path.exists(config_path):
        with open(config_path) as f:
            config = json.load(f)
    else:
        config = {}
    return {
        "log_file": config.get("log_file"),
        "log_level": config.get("log_level", "INFO"),
        "output_root": config.get("output_root", "runs"),
    }


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> logging.Logger:
    """
    Configure the package logger with console and optional file handlers.

    Calling it again replaces the handlers instead of stacking them.

    Args:
        level: Logging level name; defaults to config.json's log_level
        log_file: Path of the log file; defaults to config.json's log_file

    Returns:
        The configured "hho_ch" logger
    """
    defaults = load_logging_defaults()
    level = level or defaults["log_level"]
    log_file = log_file if log_file is not None else defaults["log_file"]

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT)

    # Console handler
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # File handler
    if log_file:
        os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger
