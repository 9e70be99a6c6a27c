"""Logging utilities for the Hecke multiplicity toolkit."""

import json
import logging
from datetime import datetime, timezone
from typing import Any, Dict, Optional

LOGGER_NAME = "app"

_RESERVED = set(vars(logging.makeLogRecord({}))) | {"message", "asctime"}


class JSONFormatter(logging.Formatter):
    """Custom JSON formatter for structured logging."""

    def format(self, record: logging.LogRecord) -> str:
        """Format the log record as JSON."""
        log_data: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        # Fields passed through ``extra=`` land on the record itself
        for key, value in vars(record).items():
            if key not in _RESERVED and not key.startswith("_"):
                log_data[key] = value

        if record.exc_info:
            exc_type = record.exc_info[0]
            log_data["exception"] = {
                "type": exc_type.__name__ if exc_type else None,
                "message": str(record.exc_info[1]),
                "traceback": self.formatException(record.exc_info),
            }

        return json.dumps(log_data, default=str)


def setup_logging(level: str = "WARNING", log_file: Optional[str] = None):
    """Configure the package logger and return it.

    Records go to stderr so that stdout carries only the emitted artifact.
    Calling this again replaces the handlers instead of stacking them.
    """
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter = JSONFormatter()

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    logger.propagate = False
    return logger


def log_error(error: Exception, context: Optional[Dict[str, Any]] = None):
    """Log error details; the traceback is kept only at DEBUG level."""
    logger = logging.getLogger(LOGGER_NAME)
    logger.error(
        str(error),
        exc_info=logger.isEnabledFor(logging.DEBUG),
        extra={"context": context or {}},
    )


def log_stage(stage: str, context: Dict[str, Any], duration: float):
    """Log the completion of one pipeline stage."""
    logging.getLogger(LOGGER_NAME).info(
        "Stage complete",
        extra={
            "stage": stage,
            "context": context,
            "duration_ms": round(duration * 1000, 2),
        },
    )


def log_job_status(job_id: str, status: str, config: Dict[str, Any]):
    """Log CLI job status updates."""
    logging.getLogger(LOGGER_NAME).info(
        "Job Status Update",
        extra={"job_id": job_id, "status": status, "config": config},
    )
