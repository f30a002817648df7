"""Shared value types, canonical encodings, and the result envelope.

Everything in this module is an immutable value object, safe to share
across sessions and threads.
"""

from __future__ import annotations

import base64
import json
import math
import struct
from dataclasses import dataclass, field, replace
from enum import Enum


class CoreError(ValueError):
    """Malformed core value or encoding."""


class Modality(Enum):
    TEXT = "Text"
    IMAGE = "Image"
    VIDEO_FRAMES = "VideoFrames"
    AUDIO = "Audio"
    ACTION = "Action"
    POSE = "Pose"
    POINT_CLOUD = "PointCloud"
    DEPTH_MAP = "DepthMap"
    SCALAR = "Scalar"

    @classmethod
    def from_tag(cls, tag: str) -> "Modality":
        for m in cls:
            if m.value == tag:
                return m
        raise CoreError(f"unknown modality tag: {tag!r}")


class Heading(Enum):
    N = "N"
    E = "E"
    S = "S"
    W = "W"


# Screen convention: x grows right, y grows down, so N is -y.
AHEAD = {
    Heading.N: (0, -1),
    Heading.E: (1, 0),
    Heading.S: (0, 1),
    Heading.W: (-1, 0),
}
# "Right" is the heading rotated 90 degrees clockwise on screen.
RIGHT = {
    Heading.N: (1, 0),
    Heading.E: (0, 1),
    Heading.S: (-1, 0),
    Heading.W: (0, -1),
}
TURN_LEFT = {Heading.N: Heading.W, Heading.W: Heading.S,
             Heading.S: Heading.E, Heading.E: Heading.N}
TURN_RIGHT = {Heading.N: Heading.E, Heading.E: Heading.S,
              Heading.S: Heading.W, Heading.W: Heading.N}


@dataclass(frozen=True)
class ObservationFrame:
    """Single-channel raster, row-major uint8 intensities."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise CoreError(f"frame dimensions must be positive, got {self.width}x{self.height}")
        if len(self.pixels) != self.width * self.height:
            raise CoreError(
                f"frame payload has {len(self.pixels)} bytes, expected "
                f"{self.width * self.height} for {self.width}x{self.height}"
            )

    def pixel(self, i: int, j: int) -> int:
        """Value at column i, row j."""
        return self.pixels[j * self.width + i]


_FRAME_HEADER = struct.Struct(">II")


def encode_frame(frame: ObservationFrame) -> bytes:
    """8-byte big-endian {width, height} header followed by raw row-major pixels."""
    return _FRAME_HEADER.pack(frame.width, frame.height) + frame.pixels


def decode_frame(data: bytes) -> ObservationFrame:
    if len(data) < _FRAME_HEADER.size:
        raise CoreError(f"frame encoding too short: {len(data)} bytes")
    width, height = _FRAME_HEADER.unpack_from(data)
    pixels = data[_FRAME_HEADER.size:]
    if len(pixels) != width * height:
        raise CoreError(
            f"frame encoding declares {width}x{height} but carries {len(pixels)} pixels"
        )
    return ObservationFrame(width, height, pixels)


def clamp(value: float, lo: float, hi: float) -> float:
    return min(max(value, lo), hi)


def wrap(value: float, lo: float, hi: float) -> float:
    """Wrap into the half-open interval [lo, hi)."""
    span = hi - lo
    result = lo + (value - lo) % span
    # Float rounding can land exactly on the seam; fold it back to lo.
    return lo if result >= hi else result


@dataclass(frozen=True)
class Pose:
    """Agent cell position plus heading, with optional camera angles."""

    x: int
    y: int
    heading: Heading
    polar: float | None = None      # degrees, [0, 180]
    azimuth: float | None = None    # degrees, [-180, 180)
    yaw: float | None = None        # degrees, [0, 360)


def normalize_angles(pose: Pose) -> Pose:
    """Clamp polar to [0, 180], wrap azimuth to [-180, 180) and yaw to [0, 360)."""
    updates = {}
    for name, value in (("polar", pose.polar), ("azimuth", pose.azimuth), ("yaw", pose.yaw)):
        if value is None:
            continue
        if not math.isfinite(value):
            raise CoreError(f"{name} angle must be finite, got {value!r}")
        if name == "polar":
            updates[name] = clamp(value, 0.0, 180.0)
        elif name == "azimuth":
            updates[name] = wrap(value, -180.0, 180.0)
        else:
            updates[name] = wrap(value, 0.0, 360.0)
    return replace(pose, **updates) if updates else pose


@dataclass(frozen=True)
class ResultEnvelope:
    """Standardized pipeline output for one turn."""

    session_id: str
    turn: int
    task: str
    artifacts: tuple[tuple[Modality, bytes], ...]
    metadata: dict[str, str] = field(default_factory=dict)
    memory_refs: tuple[str, ...] = ()
    terminal: bool = False


# 64-bit FNV-1a; the framework's stable content digest.
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _FNV_MASK
    return h


def digest64(data: bytes) -> str:
    """Hex digest of the stable 64-bit content hash."""
    return f"{fnv1a64(data):016x}"


def canonical_json(obj) -> bytes:
    """Deterministic JSON bytes: sorted keys, compact separators, ASCII only."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode()


# Frame-carrying modalities travel as {width, height, pixels: base64};
# text-like payloads travel as plain strings; everything else as base64.
_FRAME_MODALITIES = {Modality.IMAGE, Modality.VIDEO_FRAMES}
_TEXT_MODALITIES = {Modality.TEXT, Modality.ACTION}


def artifact_to_wire(modality: Modality, payload: bytes) -> dict:
    if modality in _FRAME_MODALITIES:
        frame = decode_frame(payload)
        return {
            "modality": modality.value,
            "frame": {
                "width": frame.width,
                "height": frame.height,
                "pixels": base64.b64encode(frame.pixels).decode("ascii"),
            },
        }
    if modality in _TEXT_MODALITIES:
        return {"modality": modality.value, "text": payload.decode("utf-8")}
    return {"modality": modality.value, "data_b64": base64.b64encode(payload).decode("ascii")}


def artifact_from_wire(obj: dict) -> tuple[Modality, bytes]:
    if not isinstance(obj, dict) or "modality" not in obj:
        raise CoreError(f"malformed artifact object: {obj!r}")
    modality = Modality.from_tag(obj["modality"])
    body_keys = set(obj) - {"modality"}
    if modality in _FRAME_MODALITIES:
        if body_keys != {"frame"}:
            raise CoreError(f"frame artifact must carry exactly 'frame', got {sorted(body_keys)}")
        f = obj["frame"]
        pixels = base64.b64decode(f["pixels"], validate=True)
        return modality, encode_frame(ObservationFrame(f["width"], f["height"], pixels))
    if modality in _TEXT_MODALITIES:
        if body_keys != {"text"}:
            raise CoreError(f"text artifact must carry exactly 'text', got {sorted(body_keys)}")
        return modality, obj["text"].encode("utf-8")
    if body_keys != {"data_b64"}:
        raise CoreError(f"binary artifact must carry exactly 'data_b64', got {sorted(body_keys)}")
    return modality, base64.b64decode(obj["data_b64"], validate=True)


_ENVELOPE_KEYS = {"session_id", "turn", "task", "artifacts", "metadata", "memory_refs", "terminal"}


def envelope_to_wire(envelope: ResultEnvelope) -> dict:
    return {
        "session_id": envelope.session_id,
        "turn": envelope.turn,
        "task": envelope.task,
        "artifacts": [artifact_to_wire(m, p) for m, p in envelope.artifacts],
        "metadata": dict(envelope.metadata),
        "memory_refs": list(envelope.memory_refs),
        "terminal": envelope.terminal,
    }


def envelope_from_wire(obj: dict) -> ResultEnvelope:
    if not isinstance(obj, dict) or set(obj) != _ENVELOPE_KEYS:
        raise CoreError(f"malformed envelope object, keys {sorted(obj) if isinstance(obj, dict) else obj!r}")
    return ResultEnvelope(
        session_id=obj["session_id"],
        turn=int(obj["turn"]),
        task=obj["task"],
        artifacts=tuple(artifact_from_wire(a) for a in obj["artifacts"]),
        metadata={str(k): str(v) for k, v in obj["metadata"].items()},
        memory_refs=tuple(obj["memory_refs"]),
        terminal=bool(obj["terminal"]),
    )


def envelope_digest(envelope: ResultEnvelope) -> str:
    """Stable digest over the canonical wire form."""
    return digest64(canonical_json(envelope_to_wire(envelope)))
