"""Template-answerable understanding over world state, waveforms, and session context.

The reference reasoners answer only queries whose ground truth is
exactly computable: spatial relations on the grid, tone classification
on waveforms, and session introspection. Free-form questions route to
the hosted stub, which reports itself unsupported.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .core import AHEAD, RIGHT, Heading
from .kernel import Cell, GridMap, WorldState, shortest_action_plan
from .synthesis import AUDIO_SAMPLE_RATE, EVENT_FREQUENCIES, decode_waveform


class ReasoningError(ValueError):
    """Query malformed or outside the template set."""


@dataclass(frozen=True)
class ReasoningQuery:
    kind: str  # general | spatial | audio
    text: str

    def __post_init__(self):
        if self.kind not in ("general", "spatial", "audio"):
            raise ReasoningError(f"unknown reasoning kind: {self.kind!r}")


@dataclass(frozen=True)
class ReasoningAnswer:
    text: str
    structured: dict | None = None

    def __post_init__(self):
        if not self.text:
            raise ReasoningError("answer text must be non-empty")


_WALL_COUNT_RE = re.compile(r"^wall_count\((\d+)\)$")

# Preference order used when the goal offset lands exactly on a diagonal.
_DIRECTION_PREFERENCE = ("ahead", "right", "behind", "left")


def _nearest_goal(state: WorldState, grid: GridMap) -> tuple[int, int]:
    goals = grid.goal_cells()
    if not goals:
        raise ReasoningError("map has no goal cell")
    px, py = state.pose.x, state.pose.y
    return min(goals, key=lambda g: (abs(g[0] - px) + abs(g[1] - py), g[1], g[0]))


def goal_direction(state: WorldState, grid: GridMap) -> str:
    """Direction of the nearest goal in the agent frame.

    The goal offset is projected onto the agent's ahead/right axes; the
    larger-magnitude axis wins, and exact diagonal ties fall back to the
    fixed preference order ahead > right > behind > left.
    """
    gx, gy = _nearest_goal(state, grid)
    ox, oy = gx - state.pose.x, gy - state.pose.y
    ax, ay = AHEAD[state.pose.heading]
    rx, ry = RIGHT[state.pose.heading]
    v = ox * ax + oy * ay  # ahead component
    u = ox * rx + oy * ry  # right component
    candidates = []
    if abs(v) >= abs(u) and v != 0:
        candidates.append("ahead" if v > 0 else "behind")
    if abs(u) >= abs(v) and u != 0:
        candidates.append("right" if u > 0 else "left")
    if not candidates:
        return "ahead"  # standing on the goal
    return min(candidates, key=_DIRECTION_PREFERENCE.index)


def wall_count(state: WorldState, grid: GridMap, radius: int) -> int:
    """Wall cells within Chebyshev distance <= radius of the agent cell."""
    if radius < 0:
        raise ReasoningError(f"radius must be non-negative, got {radius}")
    count = 0
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            x, y = state.pose.x + dx, state.pose.y + dy
            if 0 <= x < grid.width and 0 <= y < grid.height and grid.cell(x, y) == Cell.WALL:
                count += 1
    return count


def distance_to_goal(state: WorldState, grid: GridMap) -> int:
    """Shortest action count to a goal under slip-free dynamics."""
    plan = shortest_action_plan(state, grid)
    if plan is None:
        raise ReasoningError("goal unreachable from the current state")
    return len(plan)


def infer_spatial(query_text: str, state: WorldState, grid: GridMap) -> ReasoningAnswer:
    if not grid.goal_cells():
        raise ReasoningError("map has no goal cell")
    if query_text == "goal_direction":
        direction = goal_direction(state, grid)
        return ReasoningAnswer(f"the goal is {direction}", {"direction": direction})
    match = _WALL_COUNT_RE.match(query_text)
    if match:
        count = wall_count(state, grid, int(match.group(1)))
        return ReasoningAnswer(f"{count} wall cells in range", {"count": count})
    if query_text == "distance_to_goal":
        dist = distance_to_goal(state, grid)
        return ReasoningAnswer(f"{dist} moves to the goal", {"distance": dist})
    raise ReasoningError(f"unknown spatial template: {query_text!r}")


MIN_AUDIO_SAMPLES = 256
_FREQUENCY_TOLERANCE_HZ = 20.0


def dominant_frequency(sample_rate: int, samples: np.ndarray) -> float:
    """Frequency of the largest non-DC spectral peak."""
    spectrum = np.abs(np.fft.rfft(samples))
    if spectrum.size < 2:
        raise ReasoningError("waveform too short for spectral analysis")
    peak = 1 + int(np.argmax(spectrum[1:]))
    return peak * sample_rate / samples.size


def infer_audio(query_text: str, waveform: bytes) -> ReasoningAnswer:
    """Classify a waveform as a known event tone by its spectral peak."""
    rate, samples = decode_waveform(waveform)
    if samples.size < MIN_AUDIO_SAMPLES:
        raise ReasoningError(f"waveform too short: {samples.size} < {MIN_AUDIO_SAMPLES} samples")
    freq = dominant_frequency(rate, samples)
    event = "unknown"
    for name, target in EVENT_FREQUENCIES.items():
        if abs(freq - target) <= _FREQUENCY_TOLERANCE_HZ:
            event = name
            break
    return ReasoningAnswer(
        f"dominant tone near {freq:.1f} Hz: {event}",
        {"event": event, "peak_hz": round(freq, 3)},
    )


@dataclass(frozen=True)
class GeneralContext:
    """Session snapshot for introspection queries."""

    state: WorldState | None = None
    last_reward: float | None = None


_UNSUPPORTED = ReasoningAnswer(
    "hosted reasoning unavailable: stub transport", {"status": "unsupported"}
)


def infer_general(query_text: str, context: GeneralContext | None = None) -> ReasoningAnswer:
    context = context or GeneralContext()
    if query_text == "pose?" and context.state is not None:
        pose = context.state.pose
        return ReasoningAnswer(
            f"pose ({pose.x},{pose.y}) heading {pose.heading.value}",
            {"x": pose.x, "y": pose.y, "heading": pose.heading.value},
        )
    if query_text == "step?" and context.state is not None:
        return ReasoningAnswer(f"step {context.state.step}", {"step": context.state.step})
    if query_text == "last_reward?" and context.last_reward is not None:
        return ReasoningAnswer(
            f"last reward {context.last_reward!r}", {"last_reward": context.last_reward}
        )
    return _UNSUPPORTED
