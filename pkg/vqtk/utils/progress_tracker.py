from datetime import datetime
from typing import Callable, Optional


class ProgressTracker:
    """
    Progress tracker for multi-stage runs (demo pipeline, sweep grid).
    Emits (step, status, message) triples to a callback; the CLI routes them
    to the logger.
    """

    def __init__(self, callback: Optional[Callable[[str, str, str], None]] = None):
        """
        Args:
            callback: Function to call when progress updates (step, status, message)
        """
        self.callback = callback
        self.start_time = datetime.now()

    def emit(self, step: str, status: str, message: str):
        if self.callback:
            self.callback(step, status, message)

    def start(self, step: str, message: str):
        self.emit(step, "started", message)

    def complete(self, step: str, message: str):
        self.emit(step, "completed", message)

    def sweep_cell(self, size: int, dim: int, index: int, total: int):
        self.emit("sweep", "progress", f"cell {index}/{total}: size={size} dim={dim}")

    def complete_all(self):
        elapsed = (datetime.now() - self.start_time).total_seconds()
        self.emit("complete", "completed", f"Run complete in {elapsed:.1f}s")

    def error(self, step: str, error_message: str):
        self.emit(step, "error", f"Error: {error_message}")
