"""Input validation and perception preprocessing.

The operator sits between raw user/environment input and the execution
modules: it checks interaction signals against a template, accumulates
validated batches, and normalizes raster observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ObservationFrame, clamp, wrap


class OperatorError(ValueError):
    """Signal rejected or perception input malformed."""


DEFAULT_TOKENS = (
    "move_forward",
    "move_backward",
    "move_left",
    "move_right",
    "turn_left",
    "turn_right",
)


@dataclass(frozen=True)
class ControlRange:
    """Normalization rule for one named continuous control."""

    mode: str  # "clamp" or "wrap"
    lo: float
    hi: float

    def __post_init__(self):
        if self.mode not in ("clamp", "wrap"):
            raise OperatorError(f"unknown control mode: {self.mode!r}")
        if not self.lo < self.hi:
            raise OperatorError(f"empty control range [{self.lo}, {self.hi})")

    def normalize(self, value: float) -> float:
        if self.mode == "clamp":
            return clamp(value, self.lo, self.hi)
        return wrap(value, self.lo, self.hi)


def default_controls() -> dict[str, ControlRange]:
    return {
        "polar": ControlRange("clamp", 0.0, 180.0),
        "azimuth": ControlRange("wrap", -180.0, 180.0),
        "yaw": ControlRange("wrap", 0.0, 360.0),
    }


@dataclass(frozen=True)
class InteractionTemplate:
    tokens: tuple[str, ...] = DEFAULT_TOKENS
    continuous_controls: dict[str, ControlRange] = field(default_factory=default_controls)

    def __post_init__(self):
        if not self.tokens:
            raise OperatorError("template needs at least one token")
        if len(set(self.tokens)) != len(self.tokens):
            raise OperatorError("template tokens must be unique")

    def token_id(self, token: str) -> int:
        return self.tokens.index(token)


@dataclass(frozen=True)
class InteractionSignal:
    """Either a discrete action token or a named continuous control value."""

    token: str | None = None
    control: tuple[str, float] | None = None

    def __post_init__(self):
        if (self.token is None) == (self.control is None):
            raise OperatorError("signal must carry exactly one of token or control")

    @classmethod
    def of_token(cls, token: str) -> "InteractionSignal":
        return cls(token=token)

    @classmethod
    def of_control(cls, name: str, value: float) -> "InteractionSignal":
        return cls(control=(name, float(value)))


@dataclass(frozen=True)
class NormalizedInput:
    """Validated, preprocessed turn input handed to execution modules."""

    actions: tuple[InteractionSignal, ...] = ()
    observation: ObservationFrame | None = None
    text: str | None = None


class Operator:
    """Per-session input gate; holds the pending validated batch."""

    def __init__(self, template: InteractionTemplate | None = None):
        self.template = template or InteractionTemplate()
        self.current_interaction: list[list[InteractionSignal]] = []

    def check_interaction(self, signal: InteractionSignal) -> bool:
        if signal.token is not None:
            if signal.token not in self.template.tokens:
                raise OperatorError(f"{signal.token} not in template")
            return True
        name, value = signal.control
        if name not in self.template.continuous_controls:
            raise OperatorError(f"{name} not in template")
        if not math.isfinite(value):
            raise OperatorError(f"control {name} value must be finite, got {value!r}")
        return True

    def get_interaction(self, signals: list[InteractionSignal]) -> None:
        """Validate every signal, then append the whole list; all-or-nothing."""
        for signal in signals:
            self.check_interaction(signal)
        self.current_interaction.append(list(signals))

    def process_interaction(self) -> list[int | tuple[str, float]]:
        """Map pending tokens to template-order ids, normalize controls, clear the batch."""
        processed: list[int | tuple[str, float]] = []
        for batch in self.current_interaction:
            for signal in batch:
                if signal.token is not None:
                    processed.append(self.template.token_id(signal.token))
                else:
                    name, value = signal.control
                    processed.append((name, self.template.continuous_controls[name].normalize(value)))
        self.current_interaction = []
        return processed

    def process_perception(self, raw: ObservationFrame, target: tuple[int, int]) -> ObservationFrame:
        """Block average-pooling downsample to the target (width, height)."""
        tw, th = target
        if tw < 1 or th < 1:
            raise OperatorError(f"target dimensions must be positive, got {tw}x{th}")
        if raw.width % tw or raw.height % th:
            raise OperatorError(
                f"cannot pool {raw.width}x{raw.height} to {tw}x{th}: non-integer scale factor"
            )
        fx, fy = raw.width // tw, raw.height // th
        arr = np.frombuffer(raw.pixels, dtype=np.uint8).reshape(raw.height, raw.width)
        blocks = arr.reshape(th, fy, tw, fx).astype(np.uint32)
        sums = blocks.sum(axis=(1, 3))
        area = fx * fy
        # Rounded mean, half away from zero (values are non-negative).
        pooled = ((sums + area // 2) // area).astype(np.uint8)
        return ObservationFrame(tw, th, pooled.tobytes())
