# flake8: noqa: D401
"""Run ledger for CLI jobs and fixture regressions."""

import logging
from datetime import datetime, timezone
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)


class AuditLogger:
    """Audit logger recording what was computed, with which inputs."""

    def __init__(self):
        """Initialize audit logger."""
        self.audit_logger = logging.getLogger("audit")

    def log_job(
        self,
        command: str,
        cartan: str,
        chi: str,
        e_mode: str,
        seed: int,
        status: str = "ok",
        duration: float = 0.0,
        details: Optional[Dict[str, Any]] = None,
    ):
        """
        Log one CLI job.

        Args:
            command: Pipeline stage requested
            cartan: Cartan label of the root system
            chi: Central character as given on the command line
            e_mode: Normalization of the bilinear form
            seed: Seed used for genericity retries
            status: Outcome (ok, failed, mismatch)
            duration: Wall-clock duration in seconds
            details: Additional details about the job
        """
        audit_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "event_type": "job",
            "command": command,
            "cartan": cartan,
            "chi": chi,
            "e_mode": e_mode,
            "seed": seed,
            "status": status,
            "duration_ms": round(duration * 1000, 2),
            "details": details or {},
        }

        if status == "ok":
            self.audit_logger.info("Job", extra={"audit_data": audit_entry})
        else:
            self.audit_logger.warning("Job", extra={"audit_data": audit_entry})

    def log_fixture(self, fixture_id: str, checked: int, mismatches: int):
        """
        Log the outcome of one fixture comparison.

        Args:
            fixture_id: Identifier of the fixture
            checked: Number of table cells compared
            mismatches: Number of cells that differ
        """
        audit_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "event_type": "fixture",
            "fixture": fixture_id,
            "checked": checked,
            "mismatches": mismatches,
        }

        if mismatches:
            self.audit_logger.warning("Fixture", extra={"audit_data": audit_entry})
        else:
            self.audit_logger.info("Fixture", extra={"audit_data": audit_entry})


# Global audit logger instance
audit_logger = AuditLogger()


def setup_audit_logging(log_file: Optional[str] = None):
    """Setup audit logging configuration."""
    audit_log = logging.getLogger("audit")
    audit_log.setLevel(logging.INFO)
    for handler in list(audit_log.handlers):
        audit_log.removeHandler(handler)
        handler.close()

    # Without a file the ledger is discarded
    if log_file:
        audit_handler = logging.FileHandler(log_file)
        audit_handler.setLevel(logging.INFO)
        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s - %(audit_data)s"
        )
        audit_handler.setFormatter(formatter)
        audit_log.addHandler(audit_handler)
    else:
        audit_log.addHandler(logging.NullHandler())

    # Prevent propagation to avoid duplicate logs
    audit_log.propagate = False

    logger.info("Audit logging configured")
