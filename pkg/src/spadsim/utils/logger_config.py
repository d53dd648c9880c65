import logging.config
from pathlib import Path

# Configure logging
LOGGING_CONFIG = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "standard": {"format": "%(asctime)s [%(levelname)s] %(name)s: %(message)s"},
        "minimal": {"format": "%(message)s"},
    },
    "handlers": {
        "default": {
            "level": "INFO",
            "formatter": "minimal",
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
        },
    },
    "loggers": {
        "spadsim": {
            "handlers": ["default"],
            "level": "INFO",
            "propagate": True,
        },
    },
}

logging.config.dictConfig(LOGGING_CONFIG)

logger = logging.getLogger(__name__)


def set_log_level(level: str) -> None:
    """Set the logging level for the spadsim logger.

    Args:
        level (str): Logging level as a string (e.g., 'DEBUG', 'INFO', 'WARNING',
        'ERROR', 'CRITICAL').
    """
    numeric_level = getattr(logging, level.upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f"Invalid log level: {level}")
    logging.getLogger("spadsim").setLevel(numeric_level)
    logger.debug(f"Log level set to {level}")


def add_file_handler(directory: str | Path) -> logging.Handler:
    """Attach a log file ``spadsim.log`` inside ``directory`` to the spadsim logger.

    Returns the handler so that callers can detach it when the run ends.
    """
    path = Path(directory) / "spadsim.log"
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(
        logging.Formatter(LOGGING_CONFIG["formatters"]["standard"]["format"])
    )
    logging.getLogger("spadsim").addHandler(handler)
    return handler
