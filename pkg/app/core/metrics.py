"""Prometheus metrics for pipeline runs."""

import logging
import time
from contextlib import contextmanager
from pathlib import Path

from prometheus_client import CollectorRegistry, Counter, Histogram, generate_latest

from app.core.logging import log_stage

logger = logging.getLogger(__name__)

registry = CollectorRegistry()

jobs_total = Counter(
    "hecke_jobs_total",
    "Total number of CLI jobs",
    ["command", "status"],
    registry=registry,
)
stage_duration_seconds = Histogram(
    "hecke_stage_duration_seconds",
    "Duration of pipeline stages",
    ["stage"],
    registry=registry,
    buckets=(0.01, 0.1, 0.5, 1.0, 5.0, 30.0, 120.0, 600.0, float("inf")),
)
fixture_mismatches_total = Counter(
    "hecke_fixture_mismatches_total",
    "Mismatching table cells per fixture",
    ["fixture"],
    registry=registry,
)


@contextmanager
def timed_stage(stage: str, **context):
    """Time a block and record it under ``stage``; completed stages are logged."""
    start = time.perf_counter()
    try:
        yield
    finally:
        duration = time.perf_counter() - start
        stage_duration_seconds.labels(stage=stage).observe(duration)
    log_stage(stage, context, duration)


def write_metrics(path: str) -> None:
    """Write the text exposition of the registry to ``path``."""
    Path(path).write_bytes(generate_latest(registry))
    logger.info(f"Metrics written to {path}")
