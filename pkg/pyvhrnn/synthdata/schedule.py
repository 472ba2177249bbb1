"""This module contains the piecewise-constant noise-level schedules of the synthetic sequences."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

SIGMA_LEVELS = (0.25, 1.0, 4.0)
MIN_SEGMENT = 5


class SigmaSchedule(BaseModel):
    """Per-step noise levels σ_1 … σ_T.

    Attributes:
        values (list[float]): σ_t for every step.
    """

    values: list[float] = Field(min_length=1)

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    @classmethod
    def constant(cls, steps: int, value: float = 0.0) -> SigmaSchedule:
        """Constant schedule, σ ≡ 0 for the noiseless settings."""
        return cls(values=[value] * steps)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def change_points(self) -> list[int]:
        """The 0-based indices t with σ_t ≠ σ_{t−1}."""
        return [t for t in range(1, len(self.values)) if self.values[t] != self.values[t - 1]]


def _segment_lengths(
    steps: int, segments: int, min_segment: int, rng: np.random.Generator
) -> list[int]:
    # stars and bars: uniform over compositions of the slack into `segments` parts
    slack = steps - segments * min_segment
    if segments == 1:
        return [steps]
    bars = np.sort(rng.choice(slack + segments - 1, size=segments - 1, replace=False))
    edges = np.concatenate(([-1], bars, [slack + segments - 1]))
    return [int(n) + min_segment for n in np.diff(edges) - 1]


def gen_sigma_schedule(
    steps: int, n_switches: int, rng: np.random.Generator, min_segment: int = MIN_SEGMENT
) -> SigmaSchedule:
    """Draws a piecewise-constant schedule with exactly n_switches change points.

    Segment lengths are uniform over all segmentations with every segment at least min_segment
    steps long. The first segment takes a uniform level from {0.25, 1, 4}, every following
    segment a uniform level among the two differing from its predecessor.

    Arguments:
        steps (int): T.
        n_switches (int): The number of change points.
        rng (np.random.Generator): The generator.
        min_segment (int): The minimum segment length.

    Raises:
        ValueError: If n_switches is negative or T is too short for the segments.

    Returns:
        SigmaSchedule: The schedule.
    """
    if n_switches < 0:
        raise ValueError(f"n_switches must be non-negative, got {n_switches}")
    segments = n_switches + 1
    if steps < segments * min_segment:
        raise ValueError(
            f"T={steps} is too short for {segments} segments of at least {min_segment} steps"
        )
    lengths = _segment_lengths(steps, segments, min_segment, rng)
    level = int(rng.integers(len(SIGMA_LEVELS)))
    values: list[float] = []
    for index, length in enumerate(lengths):
        if index > 0:
            others = [i for i in range(len(SIGMA_LEVELS)) if i != level]
            level = others[int(rng.integers(len(others)))]
        values.extend([SIGMA_LEVELS[level]] * length)
    return SigmaSchedule(values=values)
