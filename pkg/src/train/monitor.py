"""Loss history and smoothed trend during training"""

from collections import deque
from typing import Optional

import numpy as np

DEFAULT_WINDOW = 50


class TrainingMonitor:
    """Keeps recent losses and reports their moving average and trend"""

    def __init__(self, window: int = DEFAULT_WINDOW, history_size: Optional[int] = None):
        """
        Initialize training monitor

        Args:
            window: Steps per smoothing window
            history_size: Number of losses to keep (None keeps all)
        """
        self.window = window
        self.history: deque = deque(maxlen=history_size)
        self.best_loss: Optional[float] = None
        self.steps = 0

    def update(self, loss: float) -> None:
        self.history.append(float(loss))
        self.steps += 1
        if self.best_loss is None or loss < self.best_loss:
            self.best_loss = float(loss)

    def moving_average(self) -> Optional[float]:
        """Mean of the last `window` losses, or None before the first full window"""
        if len(self.history) < self.window:
            return None
        return float(np.mean(list(self.history)[-self.window :]))

    def smoothed(self) -> np.ndarray:
        """Means of consecutive non-overlapping windows"""
        count = len(self.history) // self.window
        values = np.asarray(self.history, dtype=np.float64)[: count * self.window]
        return values.reshape(count, self.window).mean(axis=1) if count else np.zeros(0)

    def is_decreasing(self) -> bool:
        """True when every smoothed window is at most the previous one"""
        curve = self.smoothed()
        return curve.size >= 2 and bool(np.all(np.diff(curve) <= 0))

    def relative_improvement(self) -> Optional[float]:
        """(first window − last window) / first window"""
        curve = self.smoothed()
        if curve.size < 2 or curve[0] == 0:
            return None
        return float((curve[0] - curve[-1]) / abs(curve[0]))

    def get_summary(self) -> str:
        if not self.history:
            return "No training steps recorded."
        parts = [f"steps: {self.steps}", f"last loss: {self.history[-1]:.4e}"]
        avg = self.moving_average()
        if avg is not None:
            parts.append(f"{self.window}-step average: {avg:.4e}")
        improvement = self.relative_improvement()
        if improvement is not None:
            parts.append(f"improvement: {100 * improvement:.1f}%")
        return ", ".join(parts)
