"""Time budget enforcement for pipeline runs."""

import logging
import time
from typing import Optional

from app.core.exceptions import BudgetExceededError

logger = logging.getLogger(__name__)


class TimeBudget:
    """Wall-clock budget checked at stage boundaries."""

    def __init__(self, seconds: float = 0.0):
        """
        Initialize the budget.

        Args:
            seconds: Allowed run time; 0 disables the check
        """
        self.seconds = seconds
        self.started = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self.started

    def remaining(self) -> Optional[float]:
        """
        Get the remaining time.

        Returns:
            Seconds left, or None when the budget is disabled
        """
        if not self.seconds:
            return None
        return max(0.0, self.seconds - self.elapsed())

    def check(self, stage: str) -> None:
        """
        Fail when the budget is exhausted.

        Args:
            stage: Name of the stage about to start

        Raises:
            BudgetExceededError: If the run is over budget
        """
        if self.seconds and self.elapsed() > self.seconds:
            logger.warning(f"Time budget exceeded before stage {stage}")
            raise BudgetExceededError(
                f"time budget of {self.seconds}s exceeded before {stage}",
                {"stage": stage, "elapsed": round(self.elapsed(), 3)},
            )


# Global budget for the current run
_budget: Optional[TimeBudget] = None


def get_budget() -> TimeBudget:
    """Get the run budget, creating a disabled one when none was started."""
    global _budget
    if _budget is None:
        _budget = TimeBudget(0.0)
    return _budget


def start_budget(seconds: float) -> TimeBudget:
    """Start a fresh budget for the current run."""
    global _budget
    _budget = TimeBudget(seconds)
    if seconds:
        logger.info(f"Time budget set to {seconds}s")
    return _budget
