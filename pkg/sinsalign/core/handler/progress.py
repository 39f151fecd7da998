"""Progress tracking for batches of Monte Carlo runs."""

from dataclasses import dataclass, field

from sinsalign.core.log.alignLogger import logger


@dataclass
class QueueProgressStep:
    """Progress value of a queue step."""

    step_number: int
    progress: int = 0


@dataclass
class QueueProgress:
    """Step-based progress aggregator.

    Every step carries a value in ``[min_progress, max_progress]``; the total is the
    integer percentage of accumulated progress.
    """

    total_count: int
    label: str = "queue"
    min_progress: int = 0
    max_progress: int = 100
    steps: list[QueueProgressStep] = field(default_factory=list)

    def __post_init__(self):
        if self.total_count < 0:
            raise ValueError(f"total_count must be non-negative, got {self.total_count}")
        self.steps = [QueueProgressStep(step_number=i) for i in range(self.total_count)]

    def set_step_progress(self, step_number: int, progress: int) -> None:
        """Set progress for one step, clamped to the configured range."""

        clamped = max(self.min_progress, min(self.max_progress, progress))
        for step in self.steps:
            if step.step_number == step_number:
                step.progress = clamped
                return
        logger.warning(f"Step {step_number} not found in progress queue {self.label}")

    def complete_step(self, step_number: int) -> int:
        """Mark a step as done, log the new total and return it."""

        self.set_step_progress(step_number, self.max_progress)
        total = self.get_total_progress()
        logger.info(f"{self.label}: step {step_number + 1}/{self.total_count} done ({total}%)")
        return total

    def get_total_progress(self) -> int:
        """Return total queue progress as an integer percentage."""

        if self.total_count == 0:
            return 0
        total_progress = sum(step.progress for step in self.steps)
        return int((total_progress / (self.max_progress * self.total_count)) * 100)

