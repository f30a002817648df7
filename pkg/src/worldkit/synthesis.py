"""Generative backends behind a pluggable descriptor registry.

Three local reference backends turn standardized conditioning into
exactly-checkable artifacts: a visual backend that rolls the world
kernel forward, a tone-synthesis audio backend, and an action backend
that plans with breadth-first search. Hosted descriptors bind to a
stub transport that records requests and fails with a canned error.

Reference visual artifacts carry the roll outcome in their metadata
(final_x, final_y, final_heading, final_step, terminal, rewards) so
orchestrators can advance session state without reaching around the
backend contract.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Heading, Modality, ObservationFrame, decode_frame, encode_frame
from .kernel import (
    GridMap,
    KernelConfig,
    WorldState,
    observe,
    reward,
    sample_transition,
    shortest_action_plan,
)
from .operators import DEFAULT_TOKENS, NormalizedInput


class SynthesisError(ValueError):
    """Request rejected by a synthesis backend."""


class PlanningError(SynthesisError):
    """No action sequence reaches the goal."""


class HostedServiceError(SynthesisError):
    """Hosted transport failure (always, for the stub)."""


AUDIO_SAMPLE_RATE = 16_000
AUDIO_AMPLITUDE = 0.5
EVENT_FREQUENCIES = {"step": 440.0, "goal": 880.0}

_WAVE_HEADER = struct.Struct(">II")


def encode_waveform(sample_rate: int, samples: np.ndarray) -> bytes:
    """Header {sample_rate, sample_count} big-endian, then float32 big-endian samples."""
    data = np.asarray(samples, dtype=">f4")
    return _WAVE_HEADER.pack(sample_rate, data.size) + data.tobytes()


def decode_waveform(payload: bytes) -> tuple[int, np.ndarray]:
    if len(payload) < _WAVE_HEADER.size:
        raise SynthesisError(f"waveform payload too short: {len(payload)} bytes")
    rate, count = _WAVE_HEADER.unpack_from(payload)
    body = payload[_WAVE_HEADER.size:]
    if len(body) != 4 * count:
        raise SynthesisError(f"waveform declares {count} samples but carries {len(body)} bytes")
    return rate, np.frombuffer(body, dtype=">f4").astype(np.float64)


@dataclass(frozen=True)
class SynthesisControls:
    resolution_scale: int = 1
    frame_budget: int = 1
    duration_s: float = 0.5
    seed: int = 0
    guidance: float = 0.0
    sampling_steps: int = 1

    def __post_init__(self):
        if self.frame_budget < 1:
            raise SynthesisError(f"frame_budget must be >= 1, got {self.frame_budget}")
        if self.resolution_scale < 1:
            raise SynthesisError(f"resolution_scale must be >= 1, got {self.resolution_scale}")
        if self.sampling_steps < 1:
            raise SynthesisError(f"sampling_steps must be >= 1, got {self.sampling_steps}")
        if self.seed < 0:
            raise SynthesisError(f"seed must be non-negative, got {self.seed}")

    @classmethod
    def from_dict(cls, controls: dict) -> "SynthesisControls":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(controls) - known
        if unknown:
            raise SynthesisError(f"unknown controls: {sorted(unknown)}")
        return cls(**controls)


@dataclass(frozen=True)
class Conditioning:
    """Standardized conditioning bundle; backends use the parts they need."""

    input: NormalizedInput | None = None
    state: WorldState | None = None
    grid: GridMap | None = None
    kernel: KernelConfig | None = None
    action_ids: tuple[int, ...] | None = None
    event: str | None = None
    goal: str | None = None


@dataclass(frozen=True)
class SynthesisRequest:
    conditioning: Conditioning
    controls: SynthesisControls = field(default_factory=SynthesisControls)


@dataclass(frozen=True)
class SynthesisArtifact:
    payloads: tuple[tuple[Modality, bytes], ...]
    metadata: dict[str, str]

    def __post_init__(self):
        if not self.payloads:
            raise SynthesisError("artifact needs at least one payload")
        for key in ("backend", "seed"):
            if key not in self.metadata:
                raise SynthesisError(f"artifact metadata missing {key!r}")


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # visual | audio | action
    source: str = "local"  # local | hosted
    weights_path: str | None = None
    api_key: str | None = None
    endpoint: str | None = None

    def __post_init__(self):
        if self.kind not in ("visual", "audio", "action"):
            raise SynthesisError(f"unknown backend kind: {self.kind!r}")
        if self.source not in ("local", "hosted"):
            raise SynthesisError(f"unknown backend source: {self.source!r}")
        if self.source == "hosted" and not (self.api_key and self.endpoint):
            raise SynthesisError("hosted backends require api_key and endpoint credentials")

    @classmethod
    def from_dict(cls, obj: dict) -> "BackendDescriptor":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise SynthesisError(f"unknown descriptor fields: {sorted(unknown)}")
        return cls(**obj)


def _base_metadata(backend_id: str, controls: SynthesisControls) -> dict[str, str]:
    return {
        "backend": backend_id,
        "seed": str(controls.seed),
        "guidance": repr(controls.guidance),
        "sampling_steps": str(controls.sampling_steps),
    }


def upscale_frame(frame: ObservationFrame, scale: int) -> ObservationFrame:
    """Pixel-replication upscale: each source pixel becomes a scale x scale block."""
    if scale == 1:
        return frame
    arr = np.frombuffer(frame.pixels, dtype=np.uint8).reshape(frame.height, frame.width)
    big = np.repeat(np.repeat(arr, scale, axis=0), scale, axis=1)
    return ObservationFrame(frame.width * scale, frame.height * scale, big.tobytes())


class GridworldVisualBackend:
    """Frame prediction by rolling the kernel forward under the request seed."""

    backend_id = "visual-gridworld"

    def predict(self, request: SynthesisRequest) -> SynthesisArtifact:
        cond, controls = request.conditioning, request.controls
        if cond.state is None or cond.grid is None or cond.kernel is None:
            raise SynthesisError("visual prediction needs state, grid, and kernel config")
        if cond.state.terminal:
            raise SynthesisError("cannot roll forward from a terminal state")
        actions = list(cond.action_ids or ())
        rng = np.random.default_rng(controls.seed)
        frames: list[ObservationFrame] = []
        rewards: list[float] = []
        state = cond.state
        for action in actions[: controls.frame_budget]:
            nxt = sample_transition(state, action, cond.kernel, cond.grid, rng)
            rewards.append(reward(state, action, nxt, cond.kernel))
            frames.append(observe(nxt, cond.kernel, cond.grid))
            state = nxt
            if state.terminal:
                break
        steps_executed = len(frames)
        if not state.terminal:
            # Static tail: repeat the latest view until the budget is met.
            tail = frames[-1] if frames else observe(state, cond.kernel, cond.grid)
            while len(frames) < controls.frame_budget:
                frames.append(tail)
        payloads = tuple(
            (Modality.VIDEO_FRAMES, encode_frame(upscale_frame(f, controls.resolution_scale)))
            for f in frames
        )
        metadata = _base_metadata(self.backend_id, controls)
        metadata.update({
            "rewards": ",".join(repr(r) for r in rewards),
            "steps_executed": str(steps_executed),
            "final_x": str(state.pose.x),
            "final_y": str(state.pose.y),
            "final_heading": state.pose.heading.value,
            "final_step": str(state.step),
            "terminal": "true" if state.terminal else "false",
        })
        return SynthesisArtifact(payloads, metadata)


class ToneAudioBackend:
    """Conditional waveform synthesis: one sine tone per named event."""

    backend_id = "audio-tone"

    def predict(self, request: SynthesisRequest) -> SynthesisArtifact:
        cond, controls = request.conditioning, request.controls
        if cond.event not in EVENT_FREQUENCIES:
            raise SynthesisError(f"unknown audio event: {cond.event!r}")
        if controls.duration_s <= 0:
            raise SynthesisError(f"duration must be positive, got {controls.duration_s}")
        freq = EVENT_FREQUENCIES[cond.event]
        count = round(controls.duration_s * AUDIO_SAMPLE_RATE)
        n = np.arange(count, dtype=np.float64)
        samples = AUDIO_AMPLITUDE * np.sin(2.0 * np.pi * freq * n / AUDIO_SAMPLE_RATE)
        metadata = _base_metadata(self.backend_id, controls)
        metadata.update({
            "event": cond.event,
            "sample_rate": str(AUDIO_SAMPLE_RATE),
            "sample_count": str(count),
            "duration_s": repr(controls.duration_s),
        })
        return SynthesisArtifact(
            ((Modality.AUDIO, encode_waveform(AUDIO_SAMPLE_RATE, samples)),), metadata
        )


class PlannerActionBackend:
    """Action synthesis: shortest plan to the goal under slip-free dynamics."""

    backend_id = "action-planner"

    def predict(self, request: SynthesisRequest) -> SynthesisArtifact:
        cond, controls = request.conditioning, request.controls
        if cond.state is None or cond.grid is None:
            raise SynthesisError("action prediction needs state and grid")
        goal = cond.goal if cond.goal is not None else "reach_goal"
        if goal != "reach_goal":
            raise SynthesisError(f"unknown goal: {goal!r}")
        plan = shortest_action_plan(cond.state, cond.grid)
        if plan is None:
            raise PlanningError("goal unreachable from the current state")
        tokens = [DEFAULT_TOKENS[a] for a in plan]
        final = _simulate_plan(cond.state, plan, cond.grid)
        metadata = _base_metadata(self.backend_id, controls)
        metadata.update({
            "plan_length": str(len(plan)),
            "expected_x": str(final.pose.x),
            "expected_y": str(final.pose.y),
            "expected_heading": final.pose.heading.value,
        })
        return SynthesisArtifact(((Modality.ACTION, ",".join(tokens).encode()),), metadata)


def _simulate_plan(state: WorldState, plan: list[int], grid: GridMap) -> WorldState:
    cfg = KernelConfig(p_slip=0.0)
    rng = np.random.default_rng(0)
    current = state
    for action in plan:
        current = sample_transition(current, action, cfg, grid, rng)
    return current


class StubTransport:
    """Records outbound hosted requests and always fails."""

    def __init__(self, endpoint: str, api_key: str):
        self.endpoint = endpoint
        self.api_key = api_key
        self.requests: list[SynthesisRequest] = []

    def submit(self, request: SynthesisRequest):
        self.requests.append(request)
        raise HostedServiceError(f"hosted backend unavailable: stub transport for {self.endpoint}")


class HostedBackend:
    """Contract-level wrapper for credentialed endpoints; no live calls."""

    def __init__(self, kind: str, transport: StubTransport):
        self.kind = kind
        self.backend_id = f"hosted-{kind}"
        self.transport = transport

    def predict(self, request: SynthesisRequest) -> SynthesisArtifact:
        self.transport.submit(request)
        raise AssertionError("stub transport must raise")  # pragma: no cover


_LOCAL_BACKENDS = {
    "visual": GridworldVisualBackend,
    "audio": ToneAudioBackend,
    "action": PlannerActionBackend,
}


def load_backend(descriptor: BackendDescriptor):
    """Resolve a descriptor to an inference-ready backend handle.

    Local reference backends carry no learned weights, so any
    weights_path is accepted and ignored.
    """
    if descriptor.source == "hosted":
        return HostedBackend(descriptor.kind, StubTransport(descriptor.endpoint, descriptor.api_key))
    return _LOCAL_BACKENDS[descriptor.kind]()
